"""Scenario files: a flat ``key = value`` format.

    # comments run to end of line
    x_c = [0, 0, 0]
    x_t = [15.9, 21.2, 0]
    eta = 9
    dt = 0.001
    obstacle = [9, 3, 1.5]        # center..., radius (repeatable)

Unknown keys are rejected.  Parameter and initial-condition checks run once
the whole file is read, and failures are named after the condition they
break (``Eq7.bc_lt_eta``, ``Assumption2.coincident_start``, ...).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import control, safety
from .control import CarrierPolicy
from .core import Params, WorldState, validate
from .sim import SimConfig


class ScenarioError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


_NUMBER_KEYS = {
    "k_c": 0.5, "k_p": 1.0, "b": 8.0, "c": 1.0, "d": 1.0, "eta": None,
    "dt": None, "t_end": None, "k_nav": 1.0, "cbf_alpha": 1.0, "cbf_margin": 0.0,
    "planner_speed": 0.0, "planner_duration": 0.0,
}
_VECTOR_KEYS = ("x_c", "x_p", "x_t", "planner_velocity")
_WORD_KEYS = {
    "integrator": ("rk4", "euler"),
    "carrier_policy": tuple(p.value for p in CarrierPolicy),
    "carrier_planner": ("none", "approach", "constant"),
}
_BOOL_KEYS = ("planar_carrier",)
_PATH_KEYS = ("out_csv", "out_report", "out_svg")
_REQUIRED = ("x_c", "x_p", "x_t", "eta", "dt", "t_end")
_KNOWN = (set(_NUMBER_KEYS) | set(_VECTOR_KEYS) | set(_WORD_KEYS) | set(_BOOL_KEYS)
          | set(_PATH_KEYS) | {"dimension", "obstacle"})

_LINE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")


@dataclass(frozen=True)
class ScenarioFile:
    dimension: int
    x_c: tuple
    x_p: tuple
    x_t: tuple
    params: Params
    dt: float
    t_end: float
    integrator: str = "rk4"
    carrier_policy: CarrierPolicy = CarrierPolicy.STOP_ON_SEPARATION
    planar_carrier: bool = False
    k_nav: float = 1.0
    cbf: safety.CbfConfig = field(default_factory=safety.CbfConfig)
    obstacles: tuple = ()
    carrier_planner: str = "none"
    planner_speed: float = 0.0
    planner_duration: float = 0.0
    planner_velocity: Optional[tuple] = None
    out_csv: Optional[str] = None
    out_report: Optional[str] = None
    out_svg: Optional[str] = None

    def initial_state(self) -> WorldState:
        return WorldState.create(self.x_c, self.x_p, self.x_t)

    def planner(self):
        if self.carrier_planner == "approach":
            return control.approach_planner(self.planner_speed, self.planner_duration)
        if self.carrier_planner == "constant":
            return control.constant_velocity_planner(self.planner_velocity, self.planner_duration)
        return None

    def sim_config(self, controller: str = "equilibrium", **overrides) -> SimConfig:
        kwargs = dict(
            dt=self.dt, t_end=self.t_end, integrator=self.integrator,
            carrier_policy=self.carrier_policy, planner=self.planner(),
            planar_carrier=self.planar_carrier,
            cbf=self.cbf if self.obstacles else None, obstacles=self.obstacles,
            controller=controller, k_nav=self.k_nav,
        )
        kwargs.update(overrides)
        return SimConfig(**kwargs)


def _fmt(x: float) -> str:
    return repr(float(x))


def _vec(v) -> str:
    return "[" + ", ".join(_fmt(a) for a in v) + "]"


def render(sc: ScenarioFile) -> str:
    p = sc.params
    lines = [
        f"dimension = {sc.dimension}",
        f"x_c = {_vec(sc.x_c)}",
        f"x_p = {_vec(sc.x_p)}",
        f"x_t = {_vec(sc.x_t)}",
        f"k_c = {_fmt(p.k_c)}",
        f"k_p = {_fmt(p.k_p)}",
        f"b = {_fmt(p.b)}",
        f"c = {_fmt(p.c)}",
        f"d = {_fmt(p.d)}",
        f"eta = {_fmt(p.eta)}",
        f"dt = {_fmt(sc.dt)}",
        f"t_end = {_fmt(sc.t_end)}",
        f"integrator = {sc.integrator}",
        f"carrier_policy = {sc.carrier_policy.value}",
        f"planar_carrier = {'true' if sc.planar_carrier else 'false'}",
        f"k_nav = {_fmt(sc.k_nav)}",
        f"cbf_alpha = {_fmt(sc.cbf.alpha)}",
        f"cbf_margin = {_fmt(sc.cbf.margin)}",
    ]
    for obs in sc.obstacles:
        lines.append(f"obstacle = {_vec(tuple(obs.center) + (obs.radius,))}")
    lines += [
        f"carrier_planner = {sc.carrier_planner}",
        f"planner_speed = {_fmt(sc.planner_speed)}",
        f"planner_duration = {_fmt(sc.planner_duration)}",
    ]
    if sc.planner_velocity is not None:
        lines.append(f"planner_velocity = {_vec(sc.planner_velocity)}")
    for key in _PATH_KEYS:
        value = getattr(sc, key)
        if value is not None:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _parse_number(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {text!r}")
    return value


def _parse_vector(text: str) -> tuple:
    if not (text.startswith("[") and text.endswith("]")):
        raise ValueError(f"expected a vector literal [a, b, ...], got {text!r}")
    body = text[1:-1].strip()
    if not body:
        raise ValueError("empty vector")
    return tuple(_parse_number(part.strip()) for part in body.split(","))


def parse_scenario(text: str) -> ScenarioFile:
    errors: list[str] = []
    values: dict = {}
    obstacles: list[tuple[int, tuple]] = []
    failed: set[str] = set()

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            errors.append(f"line {lineno}: syntax error, expected 'key = value': {raw.strip()!r}")
            continue
        key, value = m.group(1), m.group(2)
        if key not in _KNOWN:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key != "obstacle" and key in values:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        try:
            if key == "obstacle":
                obstacles.append((lineno, _parse_vector(value)))
            elif key == "dimension":
                values[key] = int(value)
            elif key in _NUMBER_KEYS:
                values[key] = _parse_number(value)
            elif key in _VECTOR_KEYS:
                values[key] = _parse_vector(value)
            elif key in _WORD_KEYS:
                if value not in _WORD_KEYS[key]:
                    raise ValueError(f"expected one of {', '.join(_WORD_KEYS[key])}, got {value!r}")
                values[key] = value
            elif key in _BOOL_KEYS:
                if value.lower() not in ("true", "false"):
                    raise ValueError(f"expected true or false, got {value!r}")
                values[key] = value.lower() == "true"
            else:
                if not value:
                    raise ValueError("empty path")
                values[key] = value
        except ValueError as exc:
            errors.append(f"line {lineno}: {key}: {exc}")
            failed.add(key)

    for key in _REQUIRED:
        if key not in values and key not in failed:
            errors.append(f"missing required key {key!r}")
    if errors:
        raise ScenarioError(errors)

    dims = {len(values[k]) for k in ("x_c", "x_p", "x_t")}
    dimension = int(values.get("dimension", len(values["x_c"])))
    if len(dims) != 1 or dimension not in dims:
        raise ScenarioError(["State.dimension_mismatch"])
    if dimension < 2:
        raise ScenarioError(["State.dimension_ge_2"])

    params = Params(**{k: values.get(k, _NUMBER_KEYS[k]) for k in ("k_c", "k_p", "b", "c", "d", "eta")})
    try:
        cbf = safety.CbfConfig(values.get("cbf_alpha", 1.0), values.get("cbf_margin", 0.0))
    except ValueError as exc:
        raise ScenarioError([f"CBF.config: {exc}"]) from None

    obs = []
    for lineno, vec in obstacles:
        if len(vec) != dimension + 1:
            errors.append(f"line {lineno}: obstacle needs {dimension} center components and a radius")
            continue
        try:
            obs.append(safety.Obstacle(vec[:-1], vec[-1]))
        except ValueError as exc:
            errors.append(f"line {lineno}: obstacle: {exc}")

    planner = values.get("carrier_planner", "none")
    if planner == "constant":
        pv = values.get("planner_velocity")
        if pv is None or len(pv) != dimension:
            errors.append("Planner.velocity_dimension")
    if planner != "none" and values.get("carrier_policy") != CarrierPolicy.CONTINUE_WITH_FROZEN_ETC.value:
        errors.append("Planner.requires_ContinueWithFrozenEtc")
    if values["dt"] <= 0:
        errors.append("SimConfig.dt_positive")
    if values["t_end"] <= 0:
        errors.append("SimConfig.t_end_positive")
    if errors:
        raise ScenarioError(errors)

    sc = ScenarioFile(
        dimension=dimension,
        x_c=values["x_c"], x_p=values["x_p"], x_t=values["x_t"],
        params=params, dt=values["dt"], t_end=values["t_end"],
        integrator=values.get("integrator", "rk4"),
        carrier_policy=CarrierPolicy(values.get("carrier_policy", CarrierPolicy.STOP_ON_SEPARATION.value)),
        planar_carrier=values.get("planar_carrier", False),
        k_nav=values.get("k_nav", 1.0),
        cbf=cbf, obstacles=tuple(obs),
        carrier_planner=planner,
        planner_speed=values.get("planner_speed", 0.0),
        planner_duration=values.get("planner_duration", 0.0),
        planner_velocity=values.get("planner_velocity"),
        out_csv=values.get("out_csv"), out_report=values.get("out_report"),
        out_svg=values.get("out_svg"),
    )
    semantic = semantic_errors(sc)
    if semantic:
        raise ScenarioError(semantic)
    return sc


def semantic_errors(sc: ScenarioFile) -> list[str]:
    state = sc.initial_state()
    found = list(validate(sc.params, state).violations)
    if sc.planar_carrier and not abs(sc.x_t[-1] - sc.x_c[-1]) <= sc.params.bc:
        found.append("Planar.target_height_le_bc")
    for obs in sc.obstacles:
        h, _ = safety.barrier(np.asarray(sc.x_c), obs, sc.cbf.margin)
        if not h > 0:
            found.append("CBF.start_outside_obstacles")
            break
    return found


def load_scenario(path) -> ScenarioFile:
    return parse_scenario(Path(path).read_text())
