"""Domain types shared by the controller, simulator and analysis layers.

All positions are in meters, velocities in m/s, times in seconds.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

#: Tolerance for treating the passenger-carrier distance as zero.
EPS_SEP = 1e-9


def format_float(x: float) -> str:
    """``%.17g`` text (round-trips every double); negative zero is written as ``0``."""
    return f"{float(x) + 0.0:.17g}"


class ConfigurationError(ValueError):
    """Inputs are structurally inconsistent (e.g. mixed dimensions)."""


class Mode(str, enum.Enum):
    ATTACHED = "Attached"
    SEPARATED = "Separated"


def as_vec(values, name: str = "vector") -> np.ndarray:
    """Copy ``values`` into a read-only float vector, rejecting bad input."""
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.size < 2:
        raise ConfigurationError(f"{name} must have at least 2 components, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} has non-finite components: {arr.tolist()}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Params:
    """Control gains and shape parameters of the cubic potential gradient.

    ``eta`` is the assumed lower bound on the initial carrier-target distance.
    """

    k_c: float = 0.5
    k_p: float = 1.0
    b: float = 8.0
    c: float = 1.0
    d: float = 1.0
    eta: float = 9.0

    @property
    def bc(self) -> float:
        return self.b * self.c

    def violations(self) -> list[str]:
        out = []
        for name in ("k_c", "k_p", "c", "d", "eta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                out.append(f"Params.{name}_positive")
        if not self.b > 1:
            out.append("Eq7.b_gt_1")
        if not self.bc < self.eta:
            out.append("Eq7.bc_lt_eta")
        return out


@dataclass(frozen=True)
class ErrorTriple:
    e_pc: np.ndarray  # passenger - carrier
    e_pt: np.ndarray  # passenger - target
    e_tc: np.ndarray  # target - carrier

    @property
    def norms(self) -> tuple[float, float, float]:
        return (
            float(np.linalg.norm(self.e_pc)),
            float(np.linalg.norm(self.e_pt)),
            float(np.linalg.norm(self.e_tc)),
        )


@dataclass(frozen=True)
class WorldState:
    x_c: np.ndarray
    x_p: np.ndarray
    x_t: np.ndarray
    mode: Mode = Mode.ATTACHED
    frozen_etc_norm: Optional[float] = None
    t: float = 0.0

    @classmethod
    def create(cls, x_c, x_p, x_t, mode: Mode = Mode.ATTACHED,
               frozen_etc_norm: Optional[float] = None, t: float = 0.0) -> "WorldState":
        state = cls(as_vec(x_c, "x_c"), as_vec(x_p, "x_p"), as_vec(x_t, "x_t"),
                    Mode(mode), frozen_etc_norm, float(t))
        state.check_dimensions()
        return state

    @property
    def dim(self) -> int:
        return self.x_c.size

    def check_dimensions(self) -> None:
        sizes = {self.x_c.size, self.x_p.size, self.x_t.size}
        if len(sizes) != 1:
            raise ConfigurationError(
                f"dimension mismatch: x_c={self.x_c.size}, x_p={self.x_p.size}, x_t={self.x_t.size}"
            )


def compute_errors(state: WorldState) -> ErrorTriple:
    state.check_dimensions()
    e_pc = state.x_p - state.x_c
    e_tc = state.x_t - state.x_c
    # derived rather than subtracted directly so e_pt == e_pc - e_tc holds bitwise
    return ErrorTriple(e_pc=e_pc, e_pt=e_pc - e_tc, e_tc=e_tc)


@dataclass(frozen=True)
class Validation:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(params: Params, initial: WorldState, eps_sep: float = EPS_SEP) -> Validation:
    """Check the parameter gate and both initial-condition assumptions.

    Never raises for bad values; every violated condition is returned by name.
    """
    found = list(params.violations())
    try:
        errors = compute_errors(initial)
    except ConfigurationError:
        return Validation(found + ["State.dimension_mismatch"])
    e_pc, _, e_tc = errors.norms
    if not e_tc >= params.eta:
        found.append("Assumption1.initial_distance_ge_eta")
    if not e_pc <= eps_sep:
        found.append("Assumption2.coincident_start")
    return Validation(found)
