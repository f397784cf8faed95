"""Control-barrier-function safety filter for circular (spherical) obstacles.

Each obstacle contributes ``h = ||x - center||^2 - (radius + margin)^2`` and
the linear constraint ``grad_h . u >= -alpha * h``.  The filter returns the
input closest to the nominal one that satisfies every constraint.  With a
handful of obstacles the QP is solved exactly by enumerating active sets.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import as_vec

FEAS_TOL = 1e-12


class SafetyError(RuntimeError):
    """The barrier constraints admit no input (e.g. antipodal obstacles)."""


@dataclass(frozen=True)
class Obstacle:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in as_vec(self.center, "obstacle center")))
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError(f"obstacle radius must be > 0, got {self.radius}")


@dataclass(frozen=True)
class CbfConfig:
    alpha: float = 1.0
    margin: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.margin >= 0:
            raise ValueError(f"margin must be >= 0, got {self.margin}")


def barrier(x: np.ndarray, obs: Obstacle, margin: float = 0.0) -> tuple[float, np.ndarray]:
    diff = np.asarray(x, dtype=float) - np.asarray(obs.center)
    h = float(diff @ diff) - (obs.radius + margin) ** 2
    return h, 2.0 * diff


@functools.lru_cache(maxsize=32)
def _packed(obstacles: tuple) -> tuple[np.ndarray, np.ndarray]:
    centers = np.array([o.center for o in obstacles], dtype=float)
    radii = np.array([o.radius for o in obstacles], dtype=float)
    return centers, radii


def constraints(x: np.ndarray, obstacles: Sequence[Obstacle], cfg: CbfConfig):
    """Stack the barrier constraints as ``A @ u >= beta``."""
    centers, radii = _packed(tuple(obstacles))
    diff = np.asarray(x, dtype=float) - centers
    h = np.einsum("ij,ij->i", diff, diff) - (radii + cfg.margin) ** 2
    return 2.0 * diff, -cfg.alpha * h


def _satisfied(A: np.ndarray, beta: np.ndarray, u: np.ndarray) -> bool:
    return bool(np.all(A @ u >= beta - FEAS_TOL * (1.0 + np.abs(beta))))


def filter(u_nom: np.ndarray, x: np.ndarray, obstacles: Sequence[Obstacle],
           cfg: CbfConfig = CbfConfig()) -> np.ndarray:
    u_nom = np.asarray(u_nom, dtype=float)
    if not obstacles:
        return u_nom
    A, beta = constraints(x, obstacles, cfg)
    if _satisfied(A, beta, u_nom):
        return u_nom

    best, best_cost = None, np.inf
    max_active = min(len(obstacles), u_nom.size)
    for size in range(1, max_active + 1):
        for active in itertools.combinations(range(len(obstacles)), size):
            As = A[list(active)]
            gram = As @ As.T
            if np.linalg.cond(gram) > 1e12:
                continue
            mu = np.linalg.solve(gram, beta[list(active)] - As @ u_nom)
            if np.any(mu < 0):
                continue
            u = u_nom + As.T @ mu
            if not _satisfied(A, beta, u):
                continue
            cost = float((u - u_nom) @ (u - u_nom))
            if cost < best_cost:
                best, best_cost = u, cost
        if best is not None:
            break
    if best is None:
        h = -beta / cfg.alpha
        raise SafetyError(
            f"no input satisfies the barrier constraints at x={np.asarray(x).tolist()} "
            f"(h={h.tolist()}, u_nom={u_nom.tolist()})"
        )
    return best
