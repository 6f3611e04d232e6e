"""Mixture plays and the induced per-round objectives.

The adversary's move is a coefficient vector over environments that sums to
one. In the convex region the coefficients are a probability vector; in the
affine region coefficients may dip below zero down to -alpha. The induced
loss is linear in the coefficients,

    f(beta) = sum_e lambda_e R^e(beta),

which is what makes vertex reductions work: a linear function of lambda is
maximized at a vertex of the coefficient polytope. For the alpha-bounded
affine polytope the vertices put -alpha on all environments but one, and
the maximum has the closed form max_e (1 + E alpha) r_e - alpha sum(r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .environments import Environment, risk_batch_fallback
from .errors import DimensionMismatchError, RegionViolationError

REGION_CONVEX = "convex"
REGION_AFFINE = "affine"

_SUM_TOL = 1e-12
_SIGN_TOL = 1e-12


@dataclass(frozen=True)
class MixturePlay:
    """One adversary move: coefficients over environments plus a region tag.

    Construction validates the declared region, so a MixturePlay in hand is
    always feasible. Instances are immutable.
    """

    coefficients: np.ndarray
    region: str
    alpha: float | None = None

    def __post_init__(self):
        coeffs = np.atleast_1d(np.asarray(self.coefficients, dtype=float))
        if coeffs.ndim != 1 or len(coeffs) == 0:
            raise DimensionMismatchError("coefficients must be a nonempty 1-D vector")
        total = float(np.sum(coeffs))
        if abs(total - 1.0) > _SUM_TOL:
            raise RegionViolationError(
                f"coefficients sum to {total!r}, expected 1 within {_SUM_TOL}")
        if self.region == REGION_CONVEX:
            if float(np.min(coeffs)) < -_SIGN_TOL:
                raise RegionViolationError(
                    f"convex play has negative coefficient {float(np.min(coeffs))!r}")
        elif self.region == REGION_AFFINE:
            if self.alpha is None or not (self.alpha > 0):
                raise RegionViolationError("affine play needs alpha > 0")
            if float(np.min(coeffs)) < -self.alpha - _SIGN_TOL:
                raise RegionViolationError(
                    f"affine play has coefficient {float(np.min(coeffs))!r} below -alpha")
        else:
            raise RegionViolationError(f"unknown region {self.region!r}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)
        if self.alpha is not None:
            object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n_envs(self) -> int:
        return len(self.coefficients)


def convex_vertex(n_envs: int, index: int) -> MixturePlay:
    """The convex-region vertex putting all weight on one environment."""
    coeffs = np.zeros(n_envs)
    coeffs[index] = 1.0
    return MixturePlay(coeffs, REGION_CONVEX)


def affine_vertex_coefficients(n_envs: int, alpha: float) -> np.ndarray:
    """All vertices of the alpha-bounded affine polytope, one per row.

    Row k has 1 + (E-1) alpha at position k and -alpha elsewhere.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    verts = np.full((n_envs, n_envs), -alpha, dtype=float)
    peak = 1.0 + (n_envs - 1) * alpha
    np.fill_diagonal(verts, peak)
    return verts


def _coeffs_of(lam) -> np.ndarray:
    return lam.coefficients if isinstance(lam, MixturePlay) else np.asarray(lam, dtype=float)


def mixture_risk(beta: np.ndarray, lam, envs: list[Environment]) -> float:
    """Realized loss sum_e lambda_e R^e(beta)."""
    coeffs = _coeffs_of(lam)
    if len(coeffs) != len(envs):
        raise DimensionMismatchError(
            f"{len(coeffs)} coefficients for {len(envs)} environments")
    risks = np.array([e.risk(beta) for e in envs])
    return float(coeffs @ risks)


def mixture_gradient(beta: np.ndarray, lam, envs: list[Environment]) -> np.ndarray:
    coeffs = _coeffs_of(lam)
    if len(coeffs) != len(envs):
        raise DimensionMismatchError(
            f"{len(coeffs)} coefficients for {len(envs)} environments")
    g = np.zeros_like(np.asarray(beta, dtype=float))
    for c, e in zip(coeffs, envs):
        if c != 0.0:
            g = g + c * np.asarray(e.gradient(beta), dtype=float)
    return g


def mixture_risk_sequential(beta: np.ndarray, lam, envs: list[Environment]) -> float:
    """Same quantity as mixture_risk via compensated sequential summation.

    Kept as an independent route for the linearity consistency checks.
    """
    coeffs = _coeffs_of(lam)
    return math.fsum(float(c) * float(e.risk(beta)) for c, e in zip(coeffs, envs))


def pooled_sample_mixture_risk(beta: np.ndarray, lam, sample_envs) -> float:
    """Mixture risk of sample-based environments by pooling their atoms.

    Reweights every atom probability by its environment coefficient and sums
    the pooled losses in one pass. Equals the coefficient-weighted sum of
    per-environment risks by linearity of expectation; the two routes are
    compared in the consistency checks.
    """
    coeffs = _coeffs_of(lam)
    terms = []
    for c, env in zip(coeffs, sample_envs):
        for z, y, p in env.atoms:
            pred = env.predictor(np.asarray(beta, dtype=float), z)
            terms.append(float(c) * float(p) * float(env.loss(pred, y)))
    return math.fsum(terms)


class WeightedObjective:
    """F(beta) = sum_e c_e R^e(beta) + linear . beta, with batch evaluation.

    The coefficients need not lie in any play region: cumulative histories
    and perturbed-leader objectives both land here. `convex` reports whether
    every coefficient is nonnegative (the only case with a convexity
    certificate); `curvature_upper` bounds the Hessian norm and is the
    natural inverse step size for descent.
    """

    def __init__(self, envs: list[Environment], coefficients, linear=None):
        self.envs = list(envs)
        self.coefficients = np.asarray(coefficients, dtype=float)
        if len(self.coefficients) != len(self.envs):
            raise DimensionMismatchError(
                f"{len(self.coefficients)} coefficients for {len(self.envs)} environments")
        self.linear = None if linear is None else np.asarray(linear, dtype=float)

    @property
    def convex(self) -> bool:
        return bool(np.min(self.coefficients) >= -_SIGN_TOL) if len(self.coefficients) else True

    @property
    def curvature_upper(self) -> float:
        return float(sum(abs(c) * e.sigma_max for c, e in zip(self.coefficients, self.envs)))

    @property
    def curvature_lower(self) -> float:
        """Valid strong-convexity bound only when every coefficient is >= 0."""
        return float(sum(max(c, 0.0) * e.sigma_min for c, e in zip(self.coefficients, self.envs)))

    def value(self, beta) -> float:
        total = float(sum(c * e.risk(beta) for c, e in zip(self.coefficients, self.envs) if c != 0.0))
        if self.linear is not None:
            total += float(self.linear @ np.asarray(beta, dtype=float))
        return total

    def grad(self, beta) -> np.ndarray:
        g = mixture_gradient(beta, self.coefficients, self.envs)
        if self.linear is not None:
            g = g + self.linear
        return g

    def value_batch(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        total = np.zeros(points.shape[0])
        for c, e in zip(self.coefficients, self.envs):
            if c != 0.0:
                total += c * risk_batch_fallback(e, points)
        if self.linear is not None:
            total += points @ self.linear
        return total


def affine_polytope_max_identity(risks, alpha: float) -> tuple[float, float]:
    """Max of lambda . risks over the affine polytope, by two routes.

    Returns (vertex_max, closed_form_max): the first enumerates the polytope
    vertices explicitly, the second evaluates
    max_e (1 + E alpha) r_e - alpha sum(r). The two agree identically; both
    are returned so callers can assert it.
    """
    r = np.asarray(risks, dtype=float)
    n = len(r)
    verts = affine_vertex_coefficients(n, alpha)
    vertex_max = float(np.max(verts @ r))
    closed_form = float(np.max((1.0 + n * alpha) * r - alpha * float(np.sum(r))))
    return vertex_max, closed_form
