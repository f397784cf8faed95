"""Fixed-step closed-loop simulation of the carrier-passenger pair.

The switching logic (attachment latch, controller branch, frozen
carrier-target distance) is evaluated once per step and held through the
integrator substeps.  The single step in which the passenger is released is
split at the release instant, located by bisection on the integrator itself,
so the latch fires at the true crossing instead of at the next grid point.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import control, safety
from .control import Branch, CarrierPolicy, Planner
from .core import ConfigurationError, ErrorTriple, Mode, Params, WorldState, format_float, validate
from .potential import eval_P

BISECTION_STEPS = 60


class NumericalDivergence(RuntimeError):
    def __init__(self, t: float, message: str = ""):
        super().__init__(message or f"non-finite state at t={t:.6g}")
        self.t = t


class ValidationFailed(ValueError):
    def __init__(self, violations: Sequence[str]):
        super().__init__("invalid scenario: " + ", ".join(violations))
        self.violations = list(violations)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_end: float = 30.0
    integrator: str = "rk4"
    carrier_policy: CarrierPolicy = CarrierPolicy.STOP_ON_SEPARATION
    planner: Optional[Planner] = None
    planar_carrier: bool = False
    cbf: Optional[safety.CbfConfig] = None
    obstacles: tuple = ()
    controller: str = "equilibrium"
    k_nav: float = 1.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be > 0, got {self.dt}")
        if not self.t_end > 0:
            raise ConfigurationError(f"t_end must be > 0, got {self.t_end}")
        if self.integrator not in ("euler", "rk4"):
            raise ConfigurationError(f"unknown integrator {self.integrator!r}")
        if self.controller not in ("equilibrium", "baseline"):
            raise ConfigurationError(f"unknown controller {self.controller!r}")
        object.__setattr__(self, "carrier_policy", CarrierPolicy(self.carrier_policy))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class Trajectory:
    t: np.ndarray
    x_c: np.ndarray
    x_p: np.ndarray
    u_c: np.ndarray
    u_p: np.ndarray
    e_pc: np.ndarray
    e_tc: np.ndarray
    e_pt: np.ndarray
    P: np.ndarray
    mode: np.ndarray  # 1 where separated
    x_t: np.ndarray
    separation_time: Optional[float] = None
    frozen_etc_norm: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.x_c.shape[1]

    @property
    def separated(self) -> np.ndarray:
        return self.mode.astype(bool)

    @property
    def relative_input(self) -> np.ndarray:
        return self.u_p - self.u_c

    def header(self) -> list[str]:
        n = self.dim
        cols = ["t"]
        for prefix in ("xc", "xp", "uc", "up"):
            cols += [f"{prefix}{i + 1}" for i in range(n)]
        return cols + ["e_pc", "e_tc", "e_pt", "P", "mode"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header())
        fmt = format_float
        for k in range(self.t.size):
            row = [fmt(self.t[k])]
            for arr in (self.x_c, self.x_p, self.u_c, self.u_p):
                row += [fmt(v) for v in arr[k]]
            row += [fmt(self.e_pc[k]), fmt(self.e_tc[k]), fmt(self.e_pt[k]), fmt(self.P[k])]
            row.append(Mode.SEPARATED.value if self.mode[k] else Mode.ATTACHED.value)
            writer.writerow(row)
        return buf.getvalue()

    def metadata(self) -> dict:
        return {
            "x_t": self.x_t.tolist(),
            "separation_time": self.separation_time,
            "frozen_etc_norm": self.frozen_etc_norm,
            **self.meta,
        }

    def save(self, path) -> Path:
        """Write the CSV and a ``.meta.json`` sidecar holding what the CSV cannot."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        meta_path = path.with_name(path.name + ".meta.json")
        meta_path.write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def from_csv(cls, text: str, x_t=None, meta: Optional[dict] = None) -> "Trajectory":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        n = sum(1 for h in header if h.startswith("xc"))
        expected = ["t"] + [f"{p}{i + 1}" for p in ("xc", "xp", "uc", "up") for i in range(n)]
        expected += ["e_pc", "e_tc", "e_pt", "P", "mode"]
        if header != expected:
            raise ConfigurationError(f"unexpected trajectory header: {header}")
        num = np.array([[float(v) for v in r[:-1]] for r in body]).reshape(len(body), -1)
        modes = np.array([r[-1] == Mode.SEPARATED.value for r in body], dtype=np.int8)
        blocks = [num[:, 1 + i * n:1 + (i + 1) * n] for i in range(4)]
        meta = dict(meta or {})
        if x_t is None:
            if "x_t" not in meta:
                raise ConfigurationError("target position unknown: provide metadata or x_t")
            x_t = meta["x_t"]
        traj = cls(
            t=num[:, 0], x_c=blocks[0], x_p=blocks[1], u_c=blocks[2], u_p=blocks[3],
            e_pc=num[:, -4], e_tc=num[:, -3], e_pt=num[:, -2], P=num[:, -1], mode=modes,
            x_t=np.asarray(x_t, dtype=float),
            separation_time=meta.pop("separation_time", None),
            frozen_etc_norm=meta.pop("frozen_etc_norm", None),
        )
        meta.pop("x_t", None)
        traj.meta = meta
        return traj

    @classmethod
    def load(cls, path) -> "Trajectory":
        path = Path(path)
        meta_path = path.with_name(path.name + ".meta.json")
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else None
        return cls.from_csv(path.read_text(), meta=meta)


def separation_time_oracle(e_tc0_norm: float, params: Params) -> float:
    """Release instant of the unobstructed run: the attached phase is a pure exponential."""
    if e_tc0_norm < params.bc:
        raise ValueError(f"initial distance {e_tc0_norm} is below b*c={params.bc}")
    return math.log(e_tc0_norm / params.bc) / params.k_c


def planar_separation_time_oracle(horizontal0: float, vertical: float, params: Params) -> float:
    """Release instant when the carrier is confined to a plane a height ``vertical`` below the target."""
    if not abs(vertical) < params.bc:
        raise ValueError("target height must be below b*c for the release to happen")
    h_star = math.sqrt(params.bc ** 2 - vertical ** 2)
    if horizontal0 < h_star:
        raise ValueError("carrier already inside the release radius")
    return math.log(horizontal0 / h_star) / params.k_c


# --------------------------------------------------------------------------- #
# right-hand side
#
# The state is integrated as (carrier position, passenger offset from the
# carrier).  Offsets far below the rounding granularity of absolute
# positions must survive, or a passenger released from an equilibrium with a
# vanishing push would never leave the carrier.


@dataclass(frozen=True)
class _Latch:
    mode: Mode
    branch: Branch
    frozen: Optional[float]
    t_sep: Optional[float]


def _norm(v: np.ndarray) -> float:
    return math.sqrt(float(v @ v))


def _inputs(x_c, e, x_t, latch: _Latch, t: float, cfg: SimConfig, params: Params):
    """Inputs (u_c, u_p, P) with the switching logic pinned by ``latch``."""
    e_tc = x_t - x_c
    e_pt = e - e_tc
    attached = latch.mode is Mode.ATTACHED
    r = _norm(e)
    if cfg.controller == "baseline":
        s = _norm(e_tc)
        P = float(eval_P(r, s, params))
        if attached:
            u_c = params.k_c * e_tc
            if cfg.planar_carrier:
                u_c[-1] = 0.0
            u_p = u_c
        else:
            u_c = np.zeros_like(e_tc)
            u_p = -cfg.k_nav * e_pt
    else:
        if attached:
            u_c = params.k_c * e_tc
        elif cfg.carrier_policy is CarrierPolicy.CONTINUE_WITH_FROZEN_ETC and cfg.planner is not None:
            errors = ErrorTriple(e, e_pt, e_tc)
            since = t - latch.t_sep if latch.t_sep is not None else 0.0
            u_c = np.array(cfg.planner(errors, since), dtype=float)
        else:
            u_c = np.zeros_like(e_tc)
        if cfg.planar_carrier:
            u_c[-1] = 0.0
        if cfg.obstacles:
            u_c = safety.filter(u_c, x_c, cfg.obstacles, cfg.cbf or safety.CbfConfig())
        s = latch.frozen if latch.frozen is not None else _norm(e_tc)
        P = float(eval_P(r, s, params))
        if latch.branch is Branch.ATTACHED:
            u_p = -P * e + u_c
        else:
            u_p = P * e_pt + u_c
    if cfg.obstacles:
        u_p = safety.filter(u_p, x_c + e, cfg.obstacles, cfg.cbf or safety.CbfConfig())
    return u_c, u_p, P


def _advance(x_c, e, x_t, latch: _Latch, t: float, h: float, cfg: SimConfig, params: Params):
    def f(xc, ee, tt):
        u_c, u_p, _ = _inputs(xc, ee, x_t, latch, tt, cfg, params)
        return u_c, u_p - u_c

    if cfg.integrator == "euler":
        k1c, k1e = f(x_c, e, t)
        return x_c + h * k1c, e + h * k1e
    k1c, k1e = f(x_c, e, t)
    k2c, k2e = f(x_c + 0.5 * h * k1c, e + 0.5 * h * k1e, t + 0.5 * h)
    k3c, k3e = f(x_c + 0.5 * h * k2c, e + 0.5 * h * k2e, t + 0.5 * h)
    k4c, k4e = f(x_c + h * k3c, e + h * k3e, t + h)
    x_c = x_c + (h / 6.0) * (k1c + 2.0 * k2c + 2.0 * k3c + k4c)
    e = e + (h / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
    return x_c, e


def _released(x_c, e, x_t, cfg: SimConfig, params: Params) -> bool:
    s = _norm(x_t - x_c)
    if cfg.controller == "baseline":
        return s <= params.bc
    return float(eval_P(_norm(e), s, params)) < 0


def _separated_latch(x_c, x_t, t_sep: float, cfg: SimConfig) -> _Latch:
    frozen = None
    if cfg.controller == "equilibrium" and cfg.carrier_policy is CarrierPolicy.CONTINUE_WITH_FROZEN_ETC:
        frozen = _norm(x_t - x_c)
    return _Latch(Mode.SEPARATED, Branch.SEPARATED, frozen, t_sep)


def _with_branch(x_c, e, x_t, latch: _Latch, cfg: SimConfig, params: Params) -> _Latch:
    if latch.mode is Mode.ATTACHED:
        branch = Branch.ATTACHED
    elif cfg.controller == "baseline":
        branch = Branch.SEPARATED
    else:
        s = latch.frozen if latch.frozen is not None else _norm(x_t - x_c)
        branch = control.select_branch(float(eval_P(_norm(e), s, params)))
    return _Latch(latch.mode, branch, latch.frozen, latch.t_sep)


def _check_finite(t: float, *arrays) -> None:
    for a in arrays:
        if not math.isfinite(float(a @ a)):
            raise NumericalDivergence(t)


def _step(x_c, e, x_t, latch: _Latch, t: float, cfg: SimConfig, params: Params):
    """One ``dt`` in relative coordinates; returns ``(x_c, e, latch)``."""
    dt = cfg.dt
    latch = _with_branch(x_c, e, x_t, latch, cfg, params)
    if latch.mode is Mode.ATTACHED and _released(x_c, e, x_t, cfg, params):
        # already past the release condition at the step start
        latch = _with_branch(x_c, e, x_t, _separated_latch(x_c, x_t, t, cfg), cfg, params)

    new_c, new_e = _advance(x_c, e, x_t, latch, t, dt, cfg, params)
    _check_finite(t + dt, new_c, new_e)
    if latch.mode is Mode.SEPARATED or not _released(new_c, new_e, x_t, cfg, params):
        return new_c, new_e, latch

    lo, hi = 0.0, 1.0
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        mc, me = _advance(x_c, e, x_t, latch, t, mid * dt, cfg, params)
        if _released(mc, me, x_t, cfg, params):
            hi = mid
        else:
            lo = mid
    mc, me = _advance(x_c, e, x_t, latch, t, hi * dt, cfg, params)
    t_sep = t + hi * dt
    sep = _with_branch(mc, me, x_t, _separated_latch(mc, x_t, t_sep, cfg), cfg, params)
    new_c, new_e = _advance(mc, me, x_t, sep, t_sep, (1.0 - hi) * dt, cfg, params)
    _check_finite(t + dt, new_c, new_e)
    return new_c, new_e, sep


def step(state: WorldState, cfg: SimConfig, params: Params, t_sep: Optional[float] = None):
    """Advance one ``dt``.

    Returns ``(new_state, separation_time)``; the second item is the release
    instant if it falls inside this step, else ``t_sep`` unchanged.
    """
    state.check_dimensions()
    latch = _Latch(state.mode, Branch.ATTACHED, state.frozen_etc_norm, t_sep)
    with np.errstate(over="ignore", invalid="ignore"):
        x_c, e, latch = _step(np.array(state.x_c), state.x_p - state.x_c, state.x_t, latch,
                              state.t, cfg, params)
    new_state = WorldState(_frozen(x_c), _frozen(x_c + e), state.x_t, latch.mode, latch.frozen,
                           state.t + cfg.dt)
    return new_state, latch.t_sep


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.flags.writeable = False
    return a


def run(initial: WorldState, cfg: SimConfig, params: Params, check: bool = True) -> Trajectory:
    """Integrate from ``initial`` to ``cfg.t_end`` and record every grid point.

    With ``check`` the parameter gate and initial-condition assumptions are
    enforced first (``ValidationFailed``).  A safety-filter failure raises
    ``safety.SafetyError`` with the partial trajectory attached as ``.trajectory``.
    """
    if check:
        violations = list(validate(params, initial).violations)
        if cfg.planar_carrier and not abs(initial.x_t[-1] - initial.x_c[-1]) <= params.bc:
            violations.append("Planar.target_height_le_bc")
        if violations:
            raise ValidationFailed(violations)
    initial.check_dimensions()

    n = cfg.n_steps
    dim = initial.dim
    x_t = np.array(initial.x_t, dtype=float)
    t = np.arange(n + 1) * cfg.dt
    x_c = np.empty((n + 1, dim))
    e_pc = np.empty((n + 1, dim))
    u_c = np.empty((n + 1, dim))
    u_p = np.empty((n + 1, dim))
    P = np.empty(n + 1)
    mode = np.zeros(n + 1, dtype=np.int8)

    xc = np.array(initial.x_c, dtype=float)
    e = np.array(initial.x_p, dtype=float) - xc
    latch = _Latch(initial.mode, Branch.ATTACHED, initial.frozen_etc_norm, None)

    def record(k):
        pinned = _with_branch(xc, e, x_t, latch, cfg, params)
        u_c[k], u_p[k], P[k] = _inputs(xc, e, x_t, pinned, t[k], cfg, params)
        x_c[k], e_pc[k] = xc, e
        mode[k] = latch.mode is Mode.SEPARATED

    def trajectory(rows: int) -> Trajectory:
        xp = x_c[:rows] + e_pc[:rows]
        return Trajectory(
            t=t[:rows].copy(), x_c=x_c[:rows].copy(), x_p=xp,
            u_c=u_c[:rows].copy(), u_p=u_p[:rows].copy(),
            e_pc=np.linalg.norm(e_pc[:rows], axis=1),
            e_tc=np.linalg.norm(x_t - x_c[:rows], axis=1),
            e_pt=np.linalg.norm(e_pc[:rows] - (x_t - x_c[:rows]), axis=1),
            P=P[:rows].copy(), mode=mode[:rows].copy(), x_t=x_t,
            separation_time=latch.t_sep, frozen_etc_norm=latch.frozen,
            meta={"dt": cfg.dt, "t_end": cfg.t_end, "integrator": cfg.integrator,
                  "controller": cfg.controller, "carrier_policy": cfg.carrier_policy.value,
                  "planar_carrier": cfg.planar_carrier, "params": asdict(params)},
        )

    k = 0
    try:
        # blow-ups are reported as NumericalDivergence, not as numpy warnings
        with np.errstate(over="ignore", invalid="ignore"):
            record(0)
            for k in range(1, n + 1):
                xc, e, latch = _step(xc, e, x_t, latch, t[k - 1], cfg, params)
                record(k)
    except safety.SafetyError as exc:
        exc.trajectory = trajectory(k)
        raise
    return trajectory(n + 1)
