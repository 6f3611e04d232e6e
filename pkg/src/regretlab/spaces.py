"""Feasible parameter sets: boxes, Euclidean balls, probability simplexes.

Each space knows how to project onto itself, test membership, lay down a
lexicographically ordered lattice for grid search, and draw random points
for multi-start descent. Instances are immutable and safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, SolverFailureError
from .optim import project_simplex

# Refuse lattices that would not fit in memory.
_MAX_GRID_POINTS = 30_000_000


def _check_point(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dim,):
        raise DimensionMismatchError(f"expected point of shape ({dim},), got {x.shape}")
    return x


def _mesh_lexicographic(axes: list[np.ndarray]) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    return np.ascontiguousarray(pts)


@dataclass(frozen=True)
class Box:
    """Axis-aligned box {x : lo <= x <= hi}."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatchError("box bounds must be 1-D arrays of equal length")
        if np.any(hi < lo):
            raise ValueError("box upper bounds below lower bounds")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def kind(self) -> str:
        return "box"

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def intrinsic_dim(self) -> int:
        return self.dim

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = _check_point(x, self.dim)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def project(self, x) -> np.ndarray:
        x = _check_point(x, self.dim)
        return np.clip(x, self.lo, self.hi)

    def grid(self, resolution: float) -> np.ndarray:
        axes = []
        total = 1
        for i in range(self.dim):
            span = self.hi[i] - self.lo[i]
            n = max(int(round(span / resolution)) + 1, 1)
            total *= n
            axes.append(np.linspace(self.lo[i], self.hi[i], n))
        if total > _MAX_GRID_POINTS:
            raise SolverFailureError(
                f"grid of {total} points exceeds the {_MAX_GRID_POINTS} cap; "
                "coarsen the resolution")
        return _mesh_lexicographic(axes)

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        return self.lo + rng.random(self.dim) * (self.hi - self.lo)

    def descent_start_vertices(self) -> list[np.ndarray]:
        return []

    def describe(self) -> dict[str, str]:
        return {"space.kind": "box",
                "space.lo": ";".join(f"{v:.17g}" for v in self.lo),
                "space.hi": ";".join(f"{v:.17g}" for v in self.hi)}


@dataclass(frozen=True)
class Ball:
    """Euclidean ball {x : |x - center| <= radius}."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if center.ndim != 1:
            raise DimensionMismatchError("ball center must be a 1-D array")
        if self.radius <= 0:
            raise ValueError("ball radius must be positive")
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def kind(self) -> str:
        return "ball"

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def intrinsic_dim(self) -> int:
        return self.dim

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = _check_point(x, self.dim)
        return bool(np.linalg.norm(x - self.center) <= self.radius + tol)

    def project(self, x) -> np.ndarray:
        x = _check_point(x, self.dim)
        delta = x - self.center
        norm = float(np.linalg.norm(delta))
        if norm <= self.radius:
            return x
        return self.center + delta * (self.radius / norm)

    def grid(self, resolution: float) -> np.ndarray:
        bounding = Box(self.center - self.radius, self.center + self.radius)
        pts = bounding.grid(resolution)
        dist = np.linalg.norm(pts - self.center, axis=1)
        return np.ascontiguousarray(pts[dist <= self.radius + 1e-12])

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        # Uniform in the ball: direction from a Gaussian, radius by inverse cdf.
        direction = rng.standard_normal(self.dim)
        direction /= max(np.linalg.norm(direction), 1e-300)
        r = self.radius * rng.random() ** (1.0 / self.dim)
        return self.center + r * direction

    def descent_start_vertices(self) -> list[np.ndarray]:
        return []

    def describe(self) -> dict[str, str]:
        return {"space.kind": "ball",
                "space.center": ";".join(f"{v:.17g}" for v in self.center),
                "space.radius": f"{self.radius:.17g}"}


@dataclass(frozen=True)
class Simplex:
    """Probability simplex {x >= 0 : sum x = 1} on `dim` coordinates."""

    n_coords: int = field()

    def __post_init__(self):
        if self.n_coords < 1:
            raise ValueError("simplex needs at least one coordinate")

    @property
    def kind(self) -> str:
        return "simplex"

    @property
    def dim(self) -> int:
        return self.n_coords

    @property
    def intrinsic_dim(self) -> int:
        return self.n_coords - 1

    @property
    def diameter(self) -> float:
        return float(np.sqrt(2.0)) if self.n_coords > 1 else 0.0

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = _check_point(x, self.dim)
        return bool(abs(float(np.sum(x)) - 1.0) <= tol and np.all(x >= -tol))

    def project(self, x) -> np.ndarray:
        x = _check_point(x, self.dim)
        return project_simplex(x)

    def grid(self, resolution: float) -> np.ndarray:
        """Lattice {k/m : k integer composition of m}, lexicographic order."""
        m = max(int(round(1.0 / resolution)), 1)
        n = self.n_coords
        if n == 1:
            return np.array([[1.0]])
        axes = [np.arange(m + 1)] * (n - 1)
        est = (m + 1) ** (n - 1)
        if est > _MAX_GRID_POINTS:
            raise SolverFailureError(
                f"simplex lattice of about {est} points exceeds the cap; "
                "coarsen the resolution")
        mesh = np.meshgrid(*axes, indexing="ij")
        head = np.stack([mc.ravel() for mc in mesh], axis=-1)
        sums = head.sum(axis=1)
        head = head[sums <= m]
        last = m - head.sum(axis=1)
        pts = np.column_stack([head, last]).astype(float) / m
        return np.ascontiguousarray(pts)

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        # Normalized exponentials are uniform on the simplex.
        e = rng.exponential(1.0, size=self.n_coords)
        return e / e.sum()

    def descent_start_vertices(self) -> list[np.ndarray]:
        return [np.eye(self.n_coords)[i] for i in range(self.n_coords)]

    def describe(self) -> dict[str, str]:
        return {"space.kind": "simplex", "space.dim": str(self.n_coords)}
