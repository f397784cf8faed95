import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marsupial import safety
from marsupial.safety import CbfConfig, Obstacle, SafetyError, barrier, constraints


def closed_form(u_nom, x, obs, cfg):
    """Single-constraint KKT solution, written out independently of the filter."""
    h, g = barrier(x, obs, cfg.margin)
    lam = max(0.0, (-cfg.alpha * h - g @ u_nom) / (g @ g))
    return u_nom + lam * g


def grid_best(u_nom, x, obs, cfg, half_width, n=200):
    h, g = barrier(x, obs, cfg.margin)
    axis = np.linspace(-half_width, half_width, n)
    U = np.stack(np.meshgrid(u_nom[0] + axis, u_nom[1] + axis), axis=-1).reshape(-1, 2)
    feasible = U[U @ g >= -cfg.alpha * h]
    return float(np.min(np.sum((feasible - u_nom) ** 2, axis=1)))


def test_barrier_on_boundary():
    obs = Obstacle((1.0, 2.0), 1.5)
    h, _ = barrier(np.array([1.0, 4.0]), obs, margin=0.5)
    assert h == 0.0


def test_barrier_two_radii_out():
    r = 1.7
    h, g = barrier(np.array([2 * r + 3.0, -1.0]), Obstacle((3.0, -1.0), r))
    assert h == pytest.approx(3 * r ** 2)
    assert g.tolist() == pytest.approx([4 * r, 0.0])


@settings(max_examples=100)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=3), st.floats(0.1, 3), st.floats(0, 1))
def test_gradient_matches_finite_difference(x, radius, margin):
    obs = Obstacle((0.5, -1.0, 2.0), radius)
    x = np.array(x)
    _, g = barrier(x, obs, margin)
    step = 1e-5
    fd = [(barrier(x + step * e, obs, margin)[0] - barrier(x - step * e, obs, margin)[0]) / (2 * step)
          for e in np.eye(3)]
    np.testing.assert_allclose(g, fd, atol=1e-6)


def test_obstacle_validation():
    with pytest.raises(ValueError):
        Obstacle((0.0, 0.0), 0.0)
    with pytest.raises(ValueError):
        CbfConfig(alpha=0.0)
    with pytest.raises(ValueError):
        CbfConfig(margin=-1.0)


def test_inactive_constraint_returns_nominal():
    u = np.array([-1.0, 0.0])
    out = safety.filter(u, np.array([0.0, 0.0]), [Obstacle((10.0, 0.0), 1.0)])
    assert out is u or np.array_equal(out, u)


def test_no_obstacles():
    u = np.array([3.0, -2.0])
    assert np.array_equal(safety.filter(u, np.zeros(2), []), u)


@st.composite
def single_obstacle_case(draw):
    angle = draw(st.floats(0, 2 * np.pi))
    radius = draw(st.floats(0.5, 2.0))
    gap = draw(st.floats(0.05, 1.0))
    x = np.zeros(2)
    center = (radius + gap) * np.array([np.cos(angle), np.sin(angle)])
    speed = draw(st.floats(0.5, 5.0))
    spread = draw(st.floats(-0.6, 0.6))
    u_nom = speed * np.array([np.cos(angle + spread), np.sin(angle + spread)])
    cfg = CbfConfig(alpha=draw(st.floats(0.2, 5.0)), margin=draw(st.floats(0, 0.2)))
    return u_nom, x, Obstacle(tuple(center), radius), cfg


@settings(max_examples=60, deadline=None)
@given(single_obstacle_case())
def test_single_constraint_closed_form_and_grid_optimality(case):
    u_nom, x, obs, cfg = case
    out = safety.filter(u_nom, x, [obs], cfg)
    np.testing.assert_allclose(out, closed_form(u_nom, x, obs, cfg), rtol=1e-10, atol=1e-10)
    cost = float((out - u_nom) @ (out - u_nom))
    best_on_grid = grid_best(u_nom, x, obs, cfg, half_width=2 * np.linalg.norm(u_nom) + 1)
    assert cost <= best_on_grid + 1e-12


@settings(max_examples=60, deadline=None)
@given(single_obstacle_case(), st.floats(-2, 2), st.floats(-2, 2))
def test_idempotent_and_feasible(case, ox, oy):
    u_nom, x, obs, cfg = case
    second = Obstacle((obs.center[0] + 4 + abs(ox), obs.center[1] + oy), 0.7)
    obstacles = [obs, second]
    out = safety.filter(u_nom, x, obstacles, cfg)
    A, beta = constraints(x, obstacles, cfg)
    assert np.all(A @ out >= beta - 1e-9)
    np.testing.assert_allclose(safety.filter(out, x, obstacles, cfg), out, atol=1e-10)


def test_two_active_constraints():
    # wedge between two obstacles, nominal input straight into the gap
    x = np.zeros(2)
    obstacles = [Obstacle((1.5, 1.0), 1.0), Obstacle((1.5, -1.0), 1.0)]
    cfg = CbfConfig(alpha=1.0)
    out = safety.filter(np.array([5.0, 0.0]), x, obstacles, cfg)
    A, beta = constraints(x, obstacles, cfg)
    np.testing.assert_allclose(A @ out, beta, atol=1e-10)


def test_antipodal_constraints_raise():
    # start inside two overlapping obstacles pushing in opposite directions
    obstacles = [Obstacle((1.0, 0.0), 2.0), Obstacle((-1.0, 0.0), 2.0)]
    with pytest.raises(SafetyError, match="no input satisfies"):
        safety.filter(np.zeros(2), np.zeros(2), obstacles)
