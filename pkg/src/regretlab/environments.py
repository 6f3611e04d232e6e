"""Environment risks: the per-environment objective functions of the game.

An environment is anything that maps a parameter vector to a real-valued
risk with a gradient. Three families are built in: quadratic risks (the
workhorse for convex scenarios), sample-based risks given by a finite atom
distribution pushed through a predictor and a pointwise loss, and custom
analytic risks defined directly by callables. Curvature metadata
(sigma_min, sigma_max) rides along because step sizes and rate constants
need it; for non-quadratic families the bounds are supplied by the builder
and documented there.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatchError

KIND_QUADRATIC = "analytic-quadratic"
KIND_SAMPLE = "sample-based"
KIND_CUSTOM = "custom-analytic"


@dataclass(frozen=True)
class Environment:
    """A single environment risk with gradient and curvature metadata.

    risk and gradient act on one point of shape (d,). risk_batch and
    gradient_batch, when present, act on arrays of shape (n, d) and exist
    purely to make lattice searches fast.
    """

    env_id: int
    kind: str
    dim: int
    risk: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    sigma_min: float
    sigma_max: float
    lipschitz_bound: float | None = None
    risk_batch: Callable[[np.ndarray], np.ndarray] | None = None
    gradient_batch: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.sigma_min < 0 or self.sigma_max < self.sigma_min:
            raise ValueError("need 0 <= sigma_min <= sigma_max")


def risk_batch_fallback(env: Environment, points: np.ndarray) -> np.ndarray:
    if env.risk_batch is not None:
        return np.asarray(env.risk_batch(points), dtype=float)
    return np.array([float(env.risk(p)) for p in points])


@dataclass(frozen=True)
class QuadraticRisk:
    """Risk 0.5 (beta - center)' Q (beta - center) + offset with Q symmetric PD."""

    q: np.ndarray
    center: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.q, dtype=float))
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if q.shape[0] != q.shape[1] or q.shape[0] != center.shape[0]:
            raise DimensionMismatchError("Q must be square and match the center length")
        if not np.allclose(q, q.T, atol=1e-12):
            raise ValueError("Q must be symmetric")
        eigs = np.linalg.eigvalsh(q)
        if eigs[0] <= 0:
            raise ValueError("Q must be positive definite")
        q.setflags(write=False)
        center.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "_eig_min", float(eigs[0]))
        object.__setattr__(self, "_eig_max", float(eigs[-1]))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def sigma_min(self) -> float:
        return self._eig_min

    @property
    def sigma_max(self) -> float:
        return self._eig_max

    def value(self, beta: np.ndarray) -> float:
        d = np.asarray(beta, dtype=float) - self.center
        return 0.5 * float(d @ self.q @ d) + self.offset

    def grad(self, beta: np.ndarray) -> np.ndarray:
        d = np.asarray(beta, dtype=float) - self.center
        return self.q @ d

    def value_batch(self, points: np.ndarray) -> np.ndarray:
        d = np.asarray(points, dtype=float) - self.center
        return 0.5 * np.einsum("ni,ij,nj->n", d, self.q, d) + self.offset

    def grad_batch(self, points: np.ndarray) -> np.ndarray:
        d = np.asarray(points, dtype=float) - self.center
        return d @ self.q

    def lipschitz_on_box(self, box) -> float:
        """Exact max gradient norm over a box: the max sits at a corner
        because |Q (beta - center)| is convex in beta."""
        corners = [box.lo, box.hi]
        best = 0.0
        for mask in range(2 ** box.dim):
            corner = np.array([corners[(mask >> i) & 1][i] for i in range(box.dim)])
            best = max(best, float(np.linalg.norm(self.grad(corner))))
        return best

    def to_environment(self, env_id: int, lipschitz_bound: float | None = None) -> Environment:
        return Environment(env_id=env_id, kind=KIND_QUADRATIC, dim=self.dim,
                           risk=self.value, gradient=self.grad,
                           sigma_min=self.sigma_min, sigma_max=self.sigma_max,
                           lipschitz_bound=lipschitz_bound,
                           risk_batch=self.value_batch, gradient_batch=self.grad_batch)


@dataclass(frozen=True)
class SampleEnvironment:
    """Finite-support environment: risk(beta) = sum_i p_i loss(pred(beta, z_i), y_i).

    atoms is a tuple of (z, y, p) with z a covariate vector, y a target and
    p a probability; the probabilities must sum to one. predictor(beta, z)
    must accept beta of shape (d,) or a batch of shape (n, d) and broadcast.
    predictor_grad(beta, z) and loss_deriv(pred, y) together give the exact
    risk gradient by the chain rule.
    """

    atoms: tuple
    predictor: Callable
    predictor_grad: Callable
    loss: Callable[[float, float], float]
    loss_deriv: Callable[[float, float], float]
    dim: int

    def __post_init__(self):
        total = sum(p for _, _, p in self.atoms)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"atom probabilities sum to {total}, expected 1")
        if any(p < 0 for _, _, p in self.atoms):
            raise ValueError("atom probabilities must be nonnegative")

    def value(self, beta: np.ndarray) -> float:
        beta = np.asarray(beta, dtype=float)
        total = 0.0
        for z, y, p in self.atoms:
            total += p * float(self.loss(self.predictor(beta, z), y))
        return total

    def grad(self, beta: np.ndarray) -> np.ndarray:
        beta = np.asarray(beta, dtype=float)
        g = np.zeros_like(beta)
        for z, y, p in self.atoms:
            pred = self.predictor(beta, z)
            g += p * float(self.loss_deriv(pred, y)) * np.asarray(self.predictor_grad(beta, z))
        return g

    def value_batch(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        total = np.zeros(points.shape[0])
        for z, y, p in self.atoms:
            preds = self.predictor(points, z)
            total += p * self.loss(preds, y)
        return total

    def to_environment(self, env_id: int, sigma_min: float, sigma_max: float,
                       lipschitz_bound: float | None = None) -> Environment:
        return Environment(env_id=env_id, kind=KIND_SAMPLE, dim=self.dim,
                           risk=self.value, gradient=self.grad,
                           sigma_min=sigma_min, sigma_max=sigma_max,
                           lipschitz_bound=lipschitz_bound,
                           risk_batch=self.value_batch)


def squared_loss(pred, y):
    return (pred - y) ** 2


def squared_loss_deriv(pred, y):
    return 2.0 * (pred - y)


def absolute_loss(pred, y):
    return np.abs(pred - y)


def absolute_loss_deriv(pred, y):
    return np.sign(pred - y)


def custom_environment(env_id: int, dim: int, risk, gradient, sigma_min: float,
                       sigma_max: float, lipschitz_bound: float | None = None,
                       risk_batch=None, gradient_batch=None) -> Environment:
    return Environment(env_id=env_id, kind=KIND_CUSTOM, dim=dim, risk=risk,
                       gradient=gradient, sigma_min=sigma_min, sigma_max=sigma_max,
                       lipschitz_bound=lipschitz_bound, risk_batch=risk_batch,
                       gradient_batch=gradient_batch)


def gradient_check(env: Environment, space, rng: np.random.Generator,
                   n_points: int = 20, h: float = 1e-6) -> float:
    """Largest relative gap between env.gradient and central differences
    at random points of the space. Used by validation and tests."""
    worst = 0.0
    for _ in range(n_points):
        x = space.random_point(rng)
        g = np.asarray(env.gradient(x), dtype=float)
        fd = np.empty_like(g)
        for i in range(len(x)):
            e = np.zeros_like(x)
            e[i] = h
            fd[i] = (env.risk(x + e) - env.risk(x - e)) / (2.0 * h)
        gap = float(np.linalg.norm(fd - g)) / max(1.0, float(np.linalg.norm(g)))
        worst = max(worst, gap)
    return worst
