"""Carrier and passenger velocity laws.

The carrier heads for the target while the passenger rides it.  The
passenger's law is scaled by the potential gradient ``P`` on both branches,
so the relative input ``u_p - u_c`` vanishes on the switching surface
``P = 0`` whenever the passenger sits on the carrier.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import ErrorTriple, Mode, Params
from .potential import eval_P

#: Post-separation carrier planner: (errors, t) -> carrier velocity.
Planner = Callable[[ErrorTriple, float], np.ndarray]


class Branch(str, enum.Enum):
    ATTACHED = "AttachedBranch"
    SEPARATED = "SeparatedBranch"


class CarrierPolicy(str, enum.Enum):
    STOP_ON_SEPARATION = "StopOnSeparation"
    CONTINUE_WITH_FROZEN_ETC = "ContinueWithFrozenEtc"


@dataclass(frozen=True)
class ControlOutput:
    u_c: np.ndarray
    u_p: np.ndarray
    P_value: float
    branch: Branch


def zero_planner(errors: ErrorTriple, t: float) -> np.ndarray:
    return np.zeros_like(errors.e_tc)


def constant_velocity_planner(velocity, duration: float = float("inf")) -> Planner:
    """Carrier moves at ``velocity`` for ``duration`` seconds after separation, then stops.

    ``t`` passed to the planner is the time elapsed since separation.
    """
    v = np.asarray(velocity, dtype=float)

    def planner(errors: ErrorTriple, t: float) -> np.ndarray:
        if t < duration:
            return v.copy()
        return np.zeros_like(v)

    return planner


def approach_planner(speed: float, duration: float) -> Planner:
    """Carrier keeps closing on the target at ``speed`` for ``duration`` seconds, then parks."""

    def planner(errors: ErrorTriple, t: float) -> np.ndarray:
        dist = float(np.linalg.norm(errors.e_tc))
        if t >= duration or dist == 0:
            return np.zeros_like(errors.e_tc)
        return speed * errors.e_tc / dist

    return planner


def carrier_input(errors: ErrorTriple, mode: Mode, params: Params,
                  policy: CarrierPolicy = CarrierPolicy.STOP_ON_SEPARATION,
                  planner: Optional[Planner] = None, t_since_separation: float = 0.0) -> np.ndarray:
    if mode is Mode.ATTACHED:
        return params.k_c * errors.e_tc
    if policy is CarrierPolicy.CONTINUE_WITH_FROZEN_ETC:
        return np.asarray((planner or zero_planner)(errors, t_since_separation), dtype=float)
    return np.zeros_like(errors.e_tc)


def select_branch(P_value: float) -> Branch:
    return Branch.ATTACHED if P_value >= 0 else Branch.SEPARATED


def passenger_input(errors: ErrorTriple, u_c: np.ndarray, params: Params,
                    frozen_etc_norm: Optional[float] = None,
                    branch: Optional[Branch] = None) -> ControlOutput:
    """Passenger velocity on top of the carrier's.

    ``branch`` pins the switching branch (the simulator holds it fixed across
    integrator substeps); by default it follows the sign of ``P``.
    """
    r = float(np.linalg.norm(errors.e_pc))
    s = frozen_etc_norm if frozen_etc_norm is not None else float(np.linalg.norm(errors.e_tc))
    P = float(eval_P(r, s, params))
    if branch is None:
        branch = select_branch(P)
    if branch is Branch.ATTACHED:
        u_p = -P * errors.e_pc + u_c
    else:
        u_p = P * errors.e_pt + u_c
    return ControlOutput(u_c=u_c, u_p=u_p, P_value=P, branch=branch)


def relative_input(out: ControlOutput) -> np.ndarray:
    return out.u_p - out.u_c


def baseline_event_controller(errors: ErrorTriple, mode: Mode, params: Params,
                              k_nav: float = 1.0) -> ControlOutput:
    """Boolean-trigger release used as the contrast case.

    Both robots ride together at ``k_c * e_tc`` until the release; after it
    the carrier stops and the passenger runs a plain proportional law to the
    target, so ``u_p - u_c`` jumps by ``k_nav * ||e_pt||`` at the trigger.
    """
    r, _, s = errors.norms
    P = float(eval_P(r, s, params))
    if mode is Mode.ATTACHED:
        u = params.k_c * errors.e_tc
        return ControlOutput(u_c=u, u_p=u.copy(), P_value=P, branch=Branch.ATTACHED)
    return ControlOutput(u_c=np.zeros_like(errors.e_tc), u_p=-k_nav * errors.e_pt,
                         P_value=P, branch=Branch.SEPARATED)
