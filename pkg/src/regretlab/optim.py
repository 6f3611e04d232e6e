"""Optimization oracles: projected descent, grid search, and rate constants.

Two routes to a minimum are kept deliberately distinct. `minimize_convex` is
a projected-gradient method with backtracking line search; it is fast and
certifiable on convex problems. `global_min_grid` brute-forces a lattice over
the feasible set (optionally polishing the best cell with local descent) and
falls back to multi-start descent when the intrinsic dimension exceeds 3.
Agreement between the two routes is what the consistency checks in the rest
of the package rely on, so neither may be expressed in terms of the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SolverFailureError

# Steps smaller than this mean the line search has stalled.
_MIN_STEP = 1e-18
_MAX_STEP = 1e12
_ARMIJO = 1e-4


@dataclass(frozen=True)
class SolverReport:
    """Outcome of one optimization call.

    grad_norm_at_solution is the norm of the unit-step projected gradient
    mapping, ``|x - P(x - g(x))|``; for interior solutions this coincides
    with the plain gradient norm.
    """

    argmin: np.ndarray
    value: float
    grad_norm_at_solution: float
    iterations: int
    converged: bool


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of v onto the probability simplex.

    Sort-and-threshold: with u the coordinates of v sorted in decreasing
    order, find the largest k such that u_k + (1 - sum_{j<=k} u_j)/k > 0 and
    clip at that threshold (Wang & Carreira-Perpinan, 2013). O(d log d).
    """
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, len(v) + 1)
    cond = u + (1.0 - css) / ks > 0.0
    k = int(np.nonzero(cond)[0][-1]) + 1
    tau = (css[k - 1] - 1.0) / k
    return np.maximum(v - tau, 0.0)


def _residual_polish(value, gradient, space, x, f, tol: float,
                     budget: int) -> tuple[np.ndarray, float, float, int]:
    """Endgame descent judged by the gradient mapping instead of the value.

    Near a minimum the true decrease per step falls below one ulp of f and
    the Armijo test can no longer certify progress, but the residual
    ``|x - P(x - g)|`` shrinks linearly and stays measurable. Accept any
    step that strictly shrinks it without a measurable value increase (a
    few ulps of slack covers rounding; on non-convex inputs it also stops
    the polish from drifting up toward a saddle).
    """
    eps = np.finfo(float).eps
    g = np.asarray(gradient(x), dtype=float)
    residual = float(np.linalg.norm(x - space.project(x - g)))
    iterations = 0
    step = 1.0
    while residual > tol and iterations < budget:
        iterations += 1
        improved = False
        while step >= _MIN_STEP:
            cand = space.project(x - step * g)
            if not np.array_equal(cand, x):
                g_cand = np.asarray(gradient(cand), dtype=float)
                r_cand = float(np.linalg.norm(cand - space.project(cand - g_cand)))
                f_cand = float(value(cand))
                if r_cand < residual and f_cand <= f + 16.0 * eps * max(abs(f), 1.0):
                    x, f, g, residual = cand, f_cand, g_cand, r_cand
                    step = min(step * 2.0, _MAX_STEP)
                    improved = True
                    break
            step *= 0.5
        if not improved:
            break
    return x, f, residual, iterations


def minimize_convex(value, gradient, space, init=None, tol: float = 1e-10,
                    max_iter: int = 2000, step0: float | None = None) -> SolverReport:
    """Projected gradient descent with backtracking (halving) line search.

    Guaranteed behaviour only for convex objectives over the convex set
    `space`; on non-convex inputs it is an honest local descent and is used
    that way by `global_min_grid` to polish grid minima. The sufficient
    decrease condition is f(x+) <= f(x) + 1e-4 * g.(x+ - x). A good `step0`
    (about one over the curvature) saves most of the halving work; the step
    is re-grown after every accepted move so a conservative guess recovers.
    When value differences round to zero before the residual target is met,
    a final phase accepts steps on residual decrease alone.
    """
    if init is None:
        init = np.zeros(space.dim)
    x = space.project(np.asarray(init, dtype=float))
    f = float(value(x))
    step = float(step0) if step0 else 1.0
    step = min(max(step, _MIN_STEP), _MAX_STEP)
    iterations = 0
    for iterations in range(max_iter):
        g = np.asarray(gradient(x), dtype=float)
        residual = float(np.linalg.norm(x - space.project(x - g)))
        if residual <= tol:
            return SolverReport(x, f, residual, iterations, True)
        moved = False
        while step >= _MIN_STEP:
            cand = space.project(x - step * g)
            direction = cand - x
            if not direction.any():
                step *= 0.5
                continue
            slope = float(g @ direction)
            if slope > 0.0:
                step *= 0.5
                continue
            f_cand = float(value(cand))
            if f_cand <= f + _ARMIJO * slope:
                x, f = cand, f_cand
                step = min(step * 2.0, _MAX_STEP)
                moved = True
                break
            step *= 0.5
        if not moved:
            x, f, residual, extra = _residual_polish(value, gradient, space, x, f,
                                                     tol, max_iter - iterations)
            return SolverReport(x, f, residual, iterations + 1 + extra, residual <= tol)
    x, f, residual, extra = _residual_polish(value, gradient, space, x, f, tol, max_iter)
    return SolverReport(x, f, residual, max_iter + extra, residual <= tol)


def default_grid_resolution(intrinsic_dim: int) -> float:
    """Per-axis lattice step: 1e-3 up to two intrinsic dimensions, 1e-2 at three."""
    return 1e-3 if intrinsic_dim <= 2 else 1e-2


def numeric_gradient(value, h: float = 1e-6):
    """Central-difference gradient closure for objectives without one."""

    def grad(x):
        x = np.asarray(x, dtype=float)
        g = np.empty_like(x)
        for i in range(len(x)):
            e = np.zeros_like(x)
            e[i] = h
            g[i] = (value(x + e) - value(x - e)) / (2.0 * h)
        return g

    return grad


def _evaluate_batch(value, value_batch, points: np.ndarray) -> np.ndarray:
    if value_batch is not None:
        return np.asarray(value_batch(points), dtype=float)
    return np.array([float(value(p)) for p in points])


def _lexicographically_less(a: np.ndarray, b: np.ndarray) -> bool:
    for ai, bi in zip(a, b):
        if ai != bi:
            return ai < bi
    return False


def global_min_grid(value, space, resolution: float | None = None, refine: bool = True,
                    gradient=None, value_batch=None, mode: str = "auto",
                    seed: int = 0, extra_starts=None, tol: float = 1e-10,
                    max_iter: int = 2000) -> SolverReport:
    """Global minimization by exhaustive lattice search or multi-start descent.

    mode="grid" forces a full lattice and errors when the intrinsic dimension
    exceeds 3 (the lattice would be astronomically large; use multi-start).
    mode="auto" picks the lattice up to dimension 3 and multi-start beyond.
    In multi-start mode `resolution` is reinterpreted as the number of random
    starts (default 64); starts always include the projected origin, every
    simplex vertex when the space is a simplex, and any `extra_starts`.

    Ties in grid minima break toward the lexicographically smallest point:
    lattices are generated in lexicographic order and the first minimum wins.
    The multi-start RNG is seeded independently of any game seed so replays
    with deterministic strategies stay bit-identical across seeds.
    """
    d = space.intrinsic_dim
    grid_feasible = d <= 3
    if mode not in ("auto", "grid", "multistart"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "grid" and not grid_feasible:
        raise SolverFailureError(
            f"full grid requested but intrinsic dimension {d} > 3; use multi-start mode")
    use_grid = mode == "grid" or (mode == "auto" and grid_feasible)

    if use_grid:
        res = resolution if resolution is not None else default_grid_resolution(d)
        points = space.grid(res)
        values = _evaluate_batch(value, value_batch, points)
        idx = int(np.argmin(values))
        best_x = np.array(points[idx], dtype=float)
        best_f = float(values[idx])
        residual = float("nan")
        iterations = 0
        if refine:
            grad = gradient if gradient is not None else numeric_gradient(value)
            rep = minimize_convex(value, grad, space, init=best_x, tol=tol, max_iter=max_iter)
            if rep.value <= best_f:
                best_x, best_f = rep.argmin, rep.value
                residual = rep.grad_norm_at_solution
                iterations = rep.iterations
        return SolverReport(best_x, best_f, residual, iterations, True)

    n_starts = int(resolution) if resolution is not None else 64
    rng = np.random.default_rng(seed)
    starts = [space.project(np.zeros(space.dim))]
    starts.extend(space.descent_start_vertices())
    if extra_starts is not None:
        starts.extend(np.asarray(s, dtype=float) for s in extra_starts)
    starts.extend(space.random_point(rng) for _ in range(n_starts))

    grad = gradient if gradient is not None else numeric_gradient(value)
    best = None
    total_iterations = 0
    for start in starts:
        rep = minimize_convex(value, grad, space, init=start, tol=tol, max_iter=max_iter)
        total_iterations += rep.iterations
        if best is None or rep.value < best.value or (
                rep.value == best.value and _lexicographically_less(rep.argmin, best.argmin)):
            best = rep
    return SolverReport(best.argmin, best.value, best.grad_norm_at_solution,
                        total_iterations, True)


def _zoom_refine(value, value_batch, space, center: np.ndarray, res: float,
                 factor: int = 100) -> tuple[np.ndarray, float]:
    """Second lattice pass around `center` with step res/factor.

    Used for nonsmooth objectives (pointwise maxima) where descent-based
    polishing is not justified.
    """
    lo = center - res
    hi = center + res
    axes = [np.linspace(lo[i], hi[i], 2 * factor + 1) for i in range(len(center))]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    inside = np.array([space.contains(p) for p in pts])
    pts = np.ascontiguousarray(pts[inside])
    vals = _evaluate_batch(value, value_batch, pts)
    idx = int(np.argmin(vals))
    return np.array(pts[idx], dtype=float), float(vals[idx])


def min_forceable_gradient(envs, space, resolution: float | None = None,
                           refine: bool = True) -> SolverReport:
    """Smallest gradient norm an adversary can always force.

    Computes min over beta in the space of max over environments of
    |grad R^e(beta)| on a lattice, with a zoomed second pass around the best
    point (the max envelope is nonsmooth, so descent polishing is off the
    table). Beyond three intrinsic dimensions a multi-start estimate is used
    and the report is flagged unconverged to mark it as approximate. For
    sample-based environments the value is exact only at lattice points; the
    callers treat it as an estimate.
    """

    def envelope(beta):
        return max(float(np.linalg.norm(e.gradient(beta))) for e in envs)

    def envelope_batch(points):
        norms = []
        for e in envs:
            if e.gradient_batch is not None:
                g = np.asarray(e.gradient_batch(points), dtype=float)
                norms.append(np.linalg.norm(g, axis=1))
            else:
                norms.append(np.array([np.linalg.norm(e.gradient(p)) for p in points]))
        return np.max(np.stack(norms, axis=0), axis=0)

    d = space.intrinsic_dim
    if d <= 3:
        res = resolution if resolution is not None else default_grid_resolution(d)
        points = space.grid(res)
        vals = envelope_batch(points)
        idx = int(np.argmin(vals))
        best_x = np.array(points[idx], dtype=float)
        best_f = float(vals[idx])
        if refine:
            zoom_x, zoom_f = _zoom_refine(envelope, envelope_batch, space, best_x, res)
            if zoom_f <= best_f:
                best_x, best_f = zoom_x, zoom_f
        return SolverReport(best_x, best_f, float("nan"), 0, True)

    rep = global_min_grid(envelope, space, mode="multistart", seed=0, tol=1e-8)
    return SolverReport(rep.argmin, rep.value, rep.grad_norm_at_solution,
                        rep.iterations, False)


@dataclass(frozen=True)
class RegretRateConstants:
    """Constants controlling the attainable regret rates of a scenario.

    forceable_gradient: the value of min_forceable_gradient (g).
    sigma_min, sigma_max: curvature bounds over the environment family.
    lipschitz_bound: configured gradient bound G on the feasible set, if any.
    """

    forceable_gradient: float
    sigma_min: float
    sigma_max: float
    lipschitz_bound: float | None = None

    @property
    def log_regret_constant(self) -> float:
        """Coefficient of log t in the forced lower bound on regret."""
        g = self.forceable_gradient
        return g * g * self.sigma_min / (16.0 * self.sigma_max ** 2)

    def harmonic_bound(self, horizon: int) -> float:
        """Upper bound on leader-following regret: sum_s G^2 / (2 s sigma_min)."""
        if self.lipschitz_bound is None:
            raise ValueError("harmonic bound needs a configured lipschitz_bound")
        s = np.arange(1, horizon + 1, dtype=float)
        harmonic = float(np.sum(1.0 / s))
        return self.lipschitz_bound ** 2 / (2.0 * self.sigma_min) * harmonic


def forceable_lower_threshold(constants: RegretRateConstants, t: int) -> float:
    """Forced cumulative loss gap at round t: log_regret_constant * ln t."""
    return constants.log_regret_constant * math.log(t)
