"""Player strategies: leader-following, perturbed leader, gradient descent.

All players speak the same protocol: reset(envs, space, rng, horizon,
tolerances) before the first round, play(t) to commit a point, observe(t,
lam) after the adversary reveals its mixture. With no history yet, every
strategy plays its configured initial point (the projection of the origin
by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import Tolerances
from .game import WeightedMinimizer
from .mixtures import MixturePlay, WeightedObjective, mixture_gradient
from .optim import global_min_grid

__all__ = ["PlayerState", "FollowTheLeader", "PerturbedLeader",
           "OnlineGradientDescent", "FixedMinimax", "BestResponseDiagnostic"]


@dataclass
class PlayerState:
    """Observed history and derived quantities shared by the strategies."""

    history: list[MixturePlay] = field(default_factory=list)
    cumulative_coefficients: np.ndarray | None = None
    beta_current: np.ndarray | None = None
    rng_stream: np.random.Generator | None = None
    step_schedule: Callable[[int], float] | None = None

    def record(self, lam: MixturePlay) -> None:
        self.history.append(lam)
        if self.cumulative_coefficients is None:
            self.cumulative_coefficients = np.array(lam.coefficients, dtype=float)
        else:
            self.cumulative_coefficients = self.cumulative_coefficients + lam.coefficients


class _BasePlayer:
    name = "base"

    def __init__(self, initial_point=None, grid_resolution: float | None = None,
                 multistart_points: int | None = None, extra_starts=None):
        self.initial_point = initial_point
        self.grid_resolution = grid_resolution
        self.multistart_points = multistart_points
        self.extra_starts = extra_starts
        self.state: PlayerState | None = None

    def reset(self, envs, space, rng, horizon: int, tolerances: Tolerances) -> None:
        self.envs = list(envs)
        self.space = space
        self.horizon = horizon
        self.tolerances = tolerances
        self.state = PlayerState(rng_stream=rng)
        self.minimizer = WeightedMinimizer(envs, space, tolerances,
                                           grid_resolution=self.grid_resolution,
                                           multistart_points=self.multistart_points,
                                           extra_starts=self.extra_starts)
        init = self.initial_point if self.initial_point is not None else np.zeros(space.dim)
        self._init = space.project(np.asarray(init, dtype=float))

    def observe(self, t: int, lam: MixturePlay) -> None:
        self.state.record(lam)

    def play(self, t: int) -> np.ndarray:
        raise NotImplementedError


class FollowTheLeader(_BasePlayer):
    """Plays the minimizer of the cumulative observed loss (empirical risk).

    By linearity the cumulative loss is the coefficient-weighted sum of
    environment risks under the summed coefficients, so each round is one
    call to the shared argmin oracle. Convex histories use warm-started
    descent; histories with negative net coefficients use the global oracle
    (full lattice up to three intrinsic dimensions, multi-start beyond,
    where the answer is a best effort rather than a certificate).
    """

    name = "ftl"

    def play(self, t: int) -> np.ndarray:
        if not self.state.history:
            self.state.beta_current = self._init
            return self._init
        report = self.minimizer.solve(self.state.cumulative_coefficients)
        self.state.beta_current = report.argmin
        return report.argmin


class PerturbedLeader(FollowTheLeader):
    """Leader-following on a linearly perturbed cumulative objective.

    Each round draws a perturbation vector with independent signed
    exponential coordinates of scale 1/eta and minimizes the cumulative loss
    minus its inner product with the point. Large eta means little noise:
    as eta grows to infinity the strategy coincides with plain
    leader-following. Default eta is sqrt(horizon) divided by the space
    diameter.
    """

    name = "ftpl"

    def __init__(self, eta: float | None = None, **kwargs):
        super().__init__(**kwargs)
        self.eta = eta

    def reset(self, envs, space, rng, horizon, tolerances) -> None:
        super().reset(envs, space, rng, horizon, tolerances)
        if self.eta is not None:
            self._eta = float(self.eta)
        else:
            diameter = space.diameter or 1.0
            self._eta = math.sqrt(horizon) / diameter
        self.last_perturbation: np.ndarray | None = None

    def _draw_perturbation(self) -> np.ndarray:
        rng = self.state.rng_stream
        scale = 0.0 if math.isinf(self._eta) else 1.0 / self._eta
        magnitude = rng.exponential(scale=scale, size=self.space.dim) if scale > 0 \
            else np.zeros(self.space.dim)
        signs = rng.integers(0, 2, size=self.space.dim) * 2 - 1
        return magnitude * signs

    def play(self, t: int) -> np.ndarray:
        if not self.state.history:
            self.state.beta_current = self._init
            return self._init
        sigma = self._draw_perturbation()
        self.last_perturbation = sigma
        report = self.minimizer.solve(self.state.cumulative_coefficients, linear=-sigma)
        self.state.beta_current = report.argmin
        return report.argmin


class OnlineGradientDescent(_BasePlayer):
    """Projected gradient step on the last observed round loss.

    beta_{t} = project(beta_{t-1} - step(t-1) grad f_{t-1}(beta_{t-1})),
    with the default schedule step(s) = 1 / (sigma_min * s) driven by the
    smallest curvature bound over the environments.
    """

    name = "ogd"

    def __init__(self, step_schedule: Callable[[int], float] | None = None, **kwargs):
        super().__init__(**kwargs)
        self._schedule_arg = step_schedule

    def reset(self, envs, space, rng, horizon, tolerances) -> None:
        super().reset(envs, space, rng, horizon, tolerances)
        if self._schedule_arg is not None:
            schedule = self._schedule_arg
        else:
            sigma_min = min(e.sigma_min for e in envs)
            if sigma_min <= 0:
                raise ValueError("default step schedule needs sigma_min > 0; "
                                 "pass an explicit step_schedule")
            schedule = lambda s: 1.0 / (sigma_min * s)
        self.state.step_schedule = schedule

    def play(self, t: int) -> np.ndarray:
        if not self.state.history:
            self.state.beta_current = self._init
            return self._init
        s = len(self.state.history)
        lam = self.state.history[-1]
        grad = mixture_gradient(self.state.beta_current, lam, self.envs)
        step = self.state.step_schedule(s)
        beta = self.space.project(self.state.beta_current - step * grad)
        self.state.beta_current = beta
        return beta


class FixedMinimax(_BasePlayer):
    """Plays the constant minimizer of the worst single-environment risk.

    The worst mixture over a convex coefficient set is attained at a vertex,
    so minimizing the pointwise maximum of the environment risks is the
    right static strategy. The maximum envelope is nonsmooth; the point is
    found on a lattice (or by multi-start descent using the active
    environment's gradient beyond three intrinsic dimensions).
    """

    name = "minimax"

    def reset(self, envs, space, rng, horizon, tolerances) -> None:
        super().reset(envs, space, rng, horizon, tolerances)

        def envelope(beta):
            return max(float(e.risk(beta)) for e in envs)

        def envelope_batch(points):
            from .environments import risk_batch_fallback
            vals = np.stack([risk_batch_fallback(e, points) for e in envs], axis=0)
            return np.max(vals, axis=0)

        def envelope_grad(beta):
            risks = [float(e.risk(beta)) for e in envs]
            return np.asarray(envs[int(np.argmax(risks))].gradient(beta), dtype=float)

        mode = "auto"
        report = global_min_grid(envelope, space, resolution=self.grid_resolution,
                                 gradient=envelope_grad, value_batch=envelope_batch,
                                 mode=mode, tol=tolerances.gradient)
        self._fixed = report.argmin

    def play(self, t: int) -> np.ndarray:
        self.state.beta_current = self._fixed
        return self._fixed


class BestResponseDiagnostic(_BasePlayer):
    """Diagnostic player whose recorded move minimizes the current round loss.

    The commitment shown to the adversary is the previous recorded move (the
    initial point on round one); after the adversary reveals its mixture the
    recorded move is replaced by the argmin of that round's loss. Its regret
    is nonpositive up to oracle tolerance against any adversary, which makes
    it a calibration instrument for the engine rather than a fair player.
    """

    name = "best_response"
    needs_revealed_loss = True

    def play(self, t: int) -> np.ndarray:
        if self.state.beta_current is None:
            self.state.beta_current = self._init
        return self.state.beta_current

    def best_response(self, t: int, lam: MixturePlay) -> np.ndarray:
        report = self.minimizer.solve(np.asarray(lam.coefficients, dtype=float))
        self.state.beta_current = report.argmin
        return report.argmin


PLAYER_KINDS = {
    "ftl": FollowTheLeader,
    "ftpl": PerturbedLeader,
    "ogd": OnlineGradientDescent,
    "minimax": FixedMinimax,
    "best_response": BestResponseDiagnostic,
}
