"""Solver tests against independent oracles: closed forms and brute force."""

import math

import numpy as np
import pytest

from regretlab.environments import QuadraticRisk
from regretlab.errors import SolverFailureError
from regretlab.optim import (RegretRateConstants, default_grid_resolution,
                             forceable_lower_threshold, global_min_grid,
                             min_forceable_gradient, minimize_convex,
                             numeric_gradient, project_simplex)
from regretlab.spaces import Ball, Box, Simplex


_LATTICES = {}


def brute_force_simplex_projection(x):
    # Independent oracle: nearest point of a fine simplex lattice
    # (step 1e-3 up to 3 coordinates, 1e-2 at 4 to keep the lattice finite).
    d = len(x)
    if d not in _LATTICES:
        _LATTICES[d] = Simplex(d).grid(1e-3 if d <= 3 else 1e-2)
    pts = _LATTICES[d]
    dist = np.sum((pts - x) ** 2, axis=1)
    return pts[int(np.argmin(dist))]


def test_project_simplex_known_cases():
    np.testing.assert_allclose(project_simplex(np.array([0.2, 0.8])), [0.2, 0.8])
    np.testing.assert_allclose(project_simplex(np.array([2.0, 0.0])), [1.0, 0.0])
    np.testing.assert_allclose(project_simplex(np.array([0.5, 0.5, 0.5])),
                               [1 / 3, 1 / 3, 1 / 3])
    np.testing.assert_allclose(project_simplex(np.array([-1.0, -1.0])), [0.5, 0.5])


def test_project_simplex_feasible_and_nearest():
    rng = np.random.default_rng(0)
    for _ in range(100):
        d = int(rng.integers(2, 5))
        x = rng.normal(scale=2.0, size=d)
        p = project_simplex(x)
        assert abs(p.sum() - 1.0) <= 1e-12
        assert np.all(p >= -1e-15)
        # No lattice point may be strictly closer than the projection.
        q = brute_force_simplex_projection(x)
        assert np.linalg.norm(p - x) <= np.linalg.norm(q - x) + 1e-6
        # And no random feasible point either.
        z = Simplex(d).random_point(rng)
        assert np.linalg.norm(p - x) <= np.linalg.norm(z - x) + 1e-12


def test_minimize_convex_matches_closed_form_quadratics():
    rng = np.random.default_rng(1)
    for _ in range(50):
        d = int(rng.integers(1, 4))
        a = rng.normal(size=(d, d))
        q = a @ a.T + np.eye(d)
        center = rng.normal(size=d)
        lo = center - rng.uniform(0.5, 2.0, size=d)
        hi = center + rng.uniform(0.5, 2.0, size=d)
        quad = QuadraticRisk(q, center)
        rep = minimize_convex(quad.value, quad.grad, Box(lo, hi))
        assert rep.converged
        # Interior minimizer: must hit the center itself.
        assert np.linalg.norm(rep.argmin - center) <= 1e-6
        assert rep.grad_norm_at_solution <= 1e-10


def test_minimize_convex_respects_active_box_constraint():
    quad = QuadraticRisk([[2.0]], [3.0])
    rep = minimize_convex(quad.value, quad.grad, Box([-1.0], [1.0]))
    assert rep.converged
    np.testing.assert_allclose(rep.argmin, [1.0], atol=1e-12)


def test_minimize_convex_on_ball_and_simplex():
    quad = QuadraticRisk(np.eye(2), [2.0, 0.0])
    rep = minimize_convex(quad.value, quad.grad, Ball([0.0, 0.0], 1.0))
    np.testing.assert_allclose(rep.argmin, [1.0, 0.0], atol=1e-8)

    quad2 = QuadraticRisk(np.eye(2), [0.9, 0.1])
    rep2 = minimize_convex(quad2.value, quad2.grad, Simplex(2))
    np.testing.assert_allclose(rep2.argmin, [0.9, 0.1], atol=1e-8)


def test_grid_and_descent_agree_on_random_quadratics():
    rng = np.random.default_rng(2)
    for _ in range(50):
        d = int(rng.integers(1, 3))
        a = rng.normal(size=(d, d))
        q = a @ a.T + 0.5 * np.eye(d)
        center = rng.normal(size=d)
        box = Box(center - 1.5, center + 1.5)
        quad = QuadraticRisk(q, center)
        grid_rep = global_min_grid(quad.value, box, gradient=quad.grad,
                                   value_batch=quad.value_batch, mode="grid")
        desc_rep = minimize_convex(quad.value, quad.grad, box)
        assert abs(grid_rep.value - desc_rep.value) <= 1e-6


def test_global_grid_mode_errors_beyond_three_dims():
    quad = QuadraticRisk(np.eye(4), np.zeros(4))
    box = Box(-np.ones(4), np.ones(4))
    with pytest.raises(SolverFailureError):
        global_min_grid(quad.value, box, mode="grid")


def test_multistart_finds_global_min_of_double_well():
    # One well strictly deeper than the other.
    def value(x):
        b = float(np.asarray(x)[0])
        return (b * b - 1.0) ** 2 + 0.3 * b

    def grad(x):
        b = float(np.asarray(x)[0])
        return np.array([4.0 * b * (b * b - 1.0) + 0.3])

    box = Box([-2.0], [2.0])
    rep = global_min_grid(value, box, gradient=grad, mode="multistart",
                          resolution=32)
    grid = global_min_grid(value, box, gradient=grad, mode="grid")
    assert abs(rep.value - grid.value) <= 1e-6
    assert rep.argmin[0] < 0


def test_grid_tie_breaks_lexicographically_smallest():
    rep = global_min_grid(lambda x: 0.0, Box([0.0, 0.0], [1.0, 1.0]),
                          refine=False, value_batch=lambda p: np.zeros(len(p)),
                          mode="grid", resolution=0.5)
    np.testing.assert_allclose(rep.argmin, [0.0, 0.0])


def test_default_grid_resolution():
    assert default_grid_resolution(1) == 1e-3
    assert default_grid_resolution(2) == 1e-3
    assert default_grid_resolution(3) == 1e-2


def test_numeric_gradient_matches_analytic():
    quad = QuadraticRisk([[3.0, 0.5], [0.5, 2.0]], [0.3, -0.7])
    g = numeric_gradient(quad.value)
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.normal(size=2)
        np.testing.assert_allclose(g(x), quad.grad(x), atol=1e-5)


def test_forceable_gradient_disagreeing_pair():
    # max(|2(b-1)|, |2(b+1)|) is minimized at 0 with value 2.
    envs = [QuadraticRisk([[2.0]], [1.0]).to_environment(0),
            QuadraticRisk([[2.0]], [-1.0]).to_environment(1)]
    rep = min_forceable_gradient(envs, Box([-2.0], [2.0]))
    assert abs(rep.value - 2.0) <= 1e-6
    assert abs(rep.argmin[0]) <= 1e-3


def test_forceable_gradient_zero_for_interior_minimizer():
    envs = [QuadraticRisk([[2.0]], [0.25]).to_environment(0)]
    rep = min_forceable_gradient(envs, Box([-1.0], [1.0]))
    assert rep.value <= 1e-8
    # A duplicated environment changes nothing.
    envs2 = envs + [QuadraticRisk([[2.0]], [0.25]).to_environment(1)]
    rep2 = min_forceable_gradient(envs2, Box([-1.0], [1.0]))
    assert rep2.value <= 1e-8


def test_forceable_gradient_monotone_in_environments():
    rng = np.random.default_rng(4)
    for _ in range(100):
        centers = rng.uniform(-1.0, 1.0, size=3)
        sigmas = rng.uniform(0.5, 3.0, size=3)
        envs = [QuadraticRisk([[s]], [c]).to_environment(i)
                for i, (s, c) in enumerate(zip(sigmas, centers))]
        box = Box([-2.0], [2.0])
        g2 = min_forceable_gradient(envs[:2], box, resolution=1e-2).value
        g3 = min_forceable_gradient(envs, box, resolution=1e-2).value
        assert g3 >= g2 - 1e-9


def test_rate_constants_closed_forms():
    c = RegretRateConstants(forceable_gradient=2.0, sigma_min=2.0, sigma_max=2.0,
                            lipschitz_bound=8.0)
    assert c.log_regret_constant == 4.0 * 2.0 / (16.0 * 4.0)
    t = 10_000
    harmonic = sum(1.0 / s for s in range(1, t + 1))
    assert abs(c.harmonic_bound(t) - 64.0 / 4.0 * harmonic) <= 1e-9
    assert abs(forceable_lower_threshold(c, t) - 0.125 * math.log(t)) <= 1e-15


def test_harmonic_bound_requires_lipschitz():
    c = RegretRateConstants(forceable_gradient=1.0, sigma_min=1.0, sigma_max=1.0)
    with pytest.raises(ValueError):
        c.harmonic_bound(10)
