"""Cubic potential gradient and its equilibrium structure.

The gradient is a cubic in the passenger-carrier distance ``r`` whose roots
are ``-d``, ``s/b - c`` and ``s`` for carrier-target distance ``s``.  Letting
``s`` fall to ``b*c`` drives the middle root into zero, which is what
releases the passenger.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import Params, format_float

REGIME_TOL = 1e-12


class Regime(str, enum.Enum):
    THREE_DISTINCT = "ThreeDistinct"
    MID_AT_ZERO = "MidAtZero"
    MID_NEGATIVE = "MidNegative"


@dataclass(frozen=True)
class EquilibriumSet:
    root_neg: float
    root_mid: float
    root_outer: float
    regime: Regime

    def roots(self) -> tuple[float, float, float]:
        return (self.root_neg, self.root_mid, self.root_outer)


def eval_P(e_pc_norm, e_tc_norm, params: Params):
    """Evaluate the gradient in factored form (works on scalars or arrays)."""
    r = e_pc_norm
    s = e_tc_norm
    return params.k_p * (r - s) * (r + params.d) * (r - s / params.b + params.c)


def equilibria(e_tc_norm: float, params: Params) -> EquilibriumSet:
    mid = e_tc_norm / params.b - params.c
    if abs(mid) <= REGIME_TOL:
        regime = Regime.MID_AT_ZERO
    elif mid > 0:
        regime = Regime.THREE_DISTINCT
    else:
        regime = Regime.MID_NEGATIVE
    return EquilibriumSet(-params.d, mid, float(e_tc_norm), regime)


def sweep_P(e_tc_norm: float, grid: Iterable[float], params: Params) -> list[tuple[float, float]]:
    r = np.asarray(list(grid), dtype=float)
    if np.any(r < 0):
        raise ValueError("sweep grid must be nonnegative")
    values = eval_P(r, e_tc_norm, params)
    return [(float(a), float(v)) for a, v in zip(r, values)]


def sweep_to_csv(rows: Sequence[tuple[float, float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["e_pc", "P"])
    for r, p in rows:
        writer.writerow([format_float(r), format_float(p)])
    return buf.getvalue()
