"""Quantitative checks of separation, navigation and avoidance on a recorded run.

Every threshold lives in :class:`Thresholds`; pass flags are pure functions
of the measured fields.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .core import EPS_SEP, Params
from .potential import eval_P
from .sim import Trajectory


@dataclass(frozen=True)
class Thresholds:
    eps_sep: float = EPS_SEP
    convergence: float = 0.05       # m, final passenger-target distance
    monotone_slack: float = 1e-9    # per-step slack on distances and Lyapunov values
    smooth_jump: float = 0.01       # m/s, relative-input jump allowed at release
    baseline_jump: float = 1.0      # m/s, jump the event baseline is expected to show


@dataclass
class P1Report:
    T: Optional[float]
    pre_T_max_epc: Optional[float]
    post_T_epc: Optional[float]
    post_T_min_epc: Optional[float]
    post_T_max_epc: Optional[float]
    pass_: bool


@dataclass
class P2Report:
    final_ept: float
    monotone_after_T: bool
    max_increase_after_T: Optional[float]
    pass_: bool


@dataclass
class P3Report:
    min_etc: float
    pass_: bool


@dataclass
class LyapunovReport:
    V1_max_increase: Optional[float]
    V2_max_increase_pre_T: Optional[float]
    V3_max_increase_post_T: Optional[float]


@dataclass
class SmoothnessReport:
    max_rel_input_jump: float
    jump_at_T: Optional[float]
    baseline_jump: Optional[float] = None
    baseline_max_jump: Optional[float] = None

    @property
    def ratio(self) -> Optional[float]:
        if self.baseline_jump is None or self.jump_at_T is None:
            return None
        if self.jump_at_T == 0:
            return math.inf
        return self.baseline_jump / self.jump_at_T


@dataclass
class PropertyReport:
    p1: P1Report
    p2: P2Report
    p3: P3Report
    lyapunov: LyapunovReport
    smoothness: SmoothnessReport
    thresholds: Thresholds = field(default_factory=Thresholds)

    @property
    def passed(self) -> bool:
        return self.p1.pass_ and self.p2.pass_ and self.p3.pass_

    def to_dict(self) -> dict:
        def clean(d):
            out = {}
            for key, value in d.items():
                key = "pass" if key == "pass_" else key
                if isinstance(value, dict):
                    value = clean(value)
                elif isinstance(value, float) and not math.isfinite(value):
                    value = str(value)
                out[key] = value
            return out

        data = clean(asdict(self))
        data["smoothness"]["ratio"] = _jsonable(self.smoothness.ratio)
        data["pass"] = self.passed
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def separation_time(traj: Trajectory, params: Params) -> Optional[float]:
    """Release instant of ``traj``.

    Uses the recorded value when present.  Otherwise the crossing of
    ``||e_tc|| = b*c`` is extrapolated from the last two attached rows, since
    the carrier stops inside the release step and the row after it no longer
    follows the attached motion.
    """
    if traj.separation_time is not None:
        return float(traj.separation_time)
    sep = np.flatnonzero(traj.separated)
    if sep.size == 0:
        return None
    k = int(sep[0]) - 1
    if k <= 0:
        return float(traj.t[0])
    slope = traj.e_tc[k - 1] - traj.e_tc[k]
    dt = traj.t[k] - traj.t[k - 1]
    if slope <= 0:
        return float(traj.t[k])
    frac = min(max((traj.e_tc[k] - params.bc) / slope, 0.0), 1.0)
    return float(traj.t[k] + frac * dt)


def _split(traj: Trajectory, T: Optional[float]):
    """Index of the last row at or before the release (``-1`` if none)."""
    if T is None:
        return traj.t.size - 1
    return int(np.searchsorted(traj.t, T, side="right")) - 1


def _max_increase(values: np.ndarray) -> Optional[float]:
    if values.size < 2:
        return None
    return float(np.max(np.diff(values)))


def lyapunov_series(traj: Trajectory) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return 0.5 * traj.e_tc ** 2, 0.5 * traj.e_pc ** 2, 0.5 * traj.e_pt ** 2


def lyapunov_report(traj: Trajectory, T: Optional[float]) -> LyapunovReport:
    V1, V2, V3 = lyapunov_series(traj)
    k = _split(traj, T)
    return LyapunovReport(
        V1_max_increase=_max_increase(V1[:k + 1]),
        V2_max_increase_pre_T=_max_increase(V2[:k + 1]),
        V3_max_increase_post_T=_max_increase(V3[k:]) if T is not None else None,
    )


def jump_series(traj: Trajectory) -> np.ndarray:
    """Per-step change of the relative input, not divided by dt."""
    return np.linalg.norm(np.diff(traj.relative_input, axis=0), axis=1)


def _jump_at_release(traj: Trajectory, T: Optional[float]) -> Optional[float]:
    if T is None:
        return None
    k = _split(traj, T)
    if k + 1 >= traj.t.size:
        return None
    return float(jump_series(traj)[k])


def smoothness_report(traj: Trajectory, baseline: Optional[Trajectory] = None,
                      params: Optional[Params] = None) -> SmoothnessReport:
    T = separation_time(traj, params) if params else traj.separation_time
    jumps = jump_series(traj)
    report = SmoothnessReport(
        max_rel_input_jump=float(jumps.max()) if jumps.size else 0.0,
        jump_at_T=_jump_at_release(traj, T),
    )
    if baseline is not None:
        Tb = separation_time(baseline, params) if params else baseline.separation_time
        bj = jump_series(baseline)
        report.baseline_jump = _jump_at_release(baseline, Tb)
        report.baseline_max_jump = float(bj.max()) if bj.size else 0.0
    return report


def check_properties(traj: Trajectory, params: Params, thresholds: Thresholds = Thresholds(),
                     baseline: Optional[Trajectory] = None) -> PropertyReport:
    th = thresholds
    T = separation_time(traj, params)
    k = _split(traj, T)

    if T is None:
        p1 = P1Report(None, float(traj.e_pc.max()), None, None, None, False)
    else:
        pre = traj.e_pc[:k + 1]
        post = traj.e_pc[k + 1:]
        pre_max = float(pre.max()) if pre.size else 0.0
        if post.size:
            p1 = P1Report(T, pre_max, float(post[0]), float(post.min()), float(post.max()),
                          bool(pre_max <= th.eps_sep and post.min() > 0 and post.max() > th.eps_sep))
        else:
            p1 = P1Report(T, pre_max, None, None, None, False)

    final_ept = float(traj.e_pt[-1])
    inc = _max_increase(traj.e_pt[k:]) if T is not None else None
    monotone = bool(inc is not None and inc <= th.monotone_slack)
    p2 = P2Report(final_ept, monotone, inc, bool(monotone and final_ept <= th.convergence))

    min_etc = float(traj.e_tc.min())
    p3 = P3Report(min_etc, bool(min_etc > 0))

    return PropertyReport(
        p1=p1, p2=p2, p3=p3,
        lyapunov=lyapunov_report(traj, T),
        smoothness=smoothness_report(traj, baseline, params),
        thresholds=th,
    )


def dynamics_residual(traj: Trajectory, params: Params) -> float:
    """Max gap between a central difference of ``e_pc`` and the closed-loop error dynamics.

    Rows whose three-point stencil touches a release or a branch switch are
    skipped.  Only meaningful for unfiltered equilibrium-driven runs.
    """
    x_t = traj.x_t
    e = traj.x_p - traj.x_c
    e_tc = x_t - traj.x_c
    e_pt = traj.x_p - x_t
    r = np.linalg.norm(e, axis=1)
    s = np.linalg.norm(e_tc, axis=1)
    if traj.frozen_etc_norm is not None:
        s = np.where(traj.separated, traj.frozen_etc_norm, s)
    P = eval_P(r, s, params)
    rhs = np.where((P >= 0)[:, None], -P[:, None] * e, P[:, None] * e_pt)

    dt = np.diff(traj.t)
    fd = (e[2:] - e[:-2]) / (dt[1:] + dt[:-1])[:, None]
    mode = traj.mode
    sign = P >= 0
    ok = (mode[:-2] == mode[2:]) & (mode[1:-1] == mode[2:])
    ok &= (sign[:-2] == sign[2:]) & (sign[1:-1] == sign[2:])
    if not np.any(ok):
        return 0.0
    res = np.linalg.norm(fd - rhs[1:-1], axis=1)[ok]
    return float(res.max())
