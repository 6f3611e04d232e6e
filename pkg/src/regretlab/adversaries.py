"""Adversary strategies and the environment constructions they rely on.

The adversaries here realize three regret regimes against leader-following
players. The gradient-forcing adversary alternates between flattening the
leader's gradient (playing the running average of its own history, which
zeroes the cumulative gradient at the previous leader) and punishing any
player that strays from the leader, forcing cumulative loss gaps that grow
like log t whenever the player tracks the leader closely. The affine trap
exploits coefficients below zero: a quartic environment enters with a
negative weight whenever the player sits near the origin, creating a
round loss that is nonnegative at the origin yet has a far-away hindsight
minimizer, which drives regret linear in the horizon. The constant
stable-set adversary turns regret minimization over the simplex into
maximum stable-set estimation through the classic identity of Motzkin and
Straus (1965) relating that size to a quadratic program over the simplex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Tolerances
from .environments import (Environment, QuadraticRisk, SampleEnvironment,
                           custom_environment, squared_loss, squared_loss_deriv)
from .errors import DataCorruptionError, DimensionMismatchError, GameError
from .game import RegretLedger, WeightedMinimizer
from .graphs import GraphInstance
from .mixtures import (MixturePlay, REGION_AFFINE, REGION_CONVEX, convex_vertex)
from .optim import RegretRateConstants, min_forceable_gradient
from .spaces import Box, Simplex


def vertex_worst_case(beta: np.ndarray, envs: list[Environment]) -> MixturePlay:
    """Convex vertex on the environment with the largest risk at beta.

    Ties break toward the lowest environment index.
    """
    risks = np.array([e.risk(beta) for e in envs])
    return convex_vertex(len(envs), int(np.argmax(risks)))


def average_history_play(history: list[MixturePlay]) -> MixturePlay:
    """Mean of past plays; the cumulative gradient at the previous leader
    vanishes under this move, so it hands the player a free round.

    Raises on an empty history: there is nothing to average on round one.
    """
    if not history:
        raise GameError("cannot average an empty history")
    coeffs = np.mean([lam.coefficients for lam in history], axis=0)
    region = history[0].region
    alpha = history[0].alpha
    return MixturePlay(coeffs, region, alpha)


class _BaseAdversary:
    def reset(self, envs, space, rng, horizon: int, tolerances: Tolerances) -> None:
        self.envs = list(envs)
        self.space = space
        self.rng = rng
        self.horizon = horizon
        self.tolerances = tolerances
        self.history: list[MixturePlay] = []
        self._totals: np.ndarray | None = None

    def choose(self, t: int, beta: np.ndarray) -> MixturePlay:
        raise NotImplementedError

    def observe(self, t: int, beta: np.ndarray, lam: MixturePlay) -> None:
        self.history.append(lam)
        if self._totals is None:
            self._totals = np.array(lam.coefficients, dtype=float)
        else:
            self._totals = self._totals + lam.coefficients

    def _history_average(self) -> MixturePlay:
        # Same play as average_history_play, from the running totals.
        if not self.history:
            raise GameError("cannot average an empty history")
        first = self.history[0]
        return MixturePlay(self._totals / len(self.history), first.region, first.alpha)


class VertexWorstCaseAdversary(_BaseAdversary):
    """Always the single worst environment for the committed point."""

    name = "vertex_worst"

    def choose(self, t: int, beta: np.ndarray) -> MixturePlay:
        return vertex_worst_case(beta, self.envs)


class HistoryAverageAdversary(_BaseAdversary):
    """Plays the running average of its own history (worst vertex on round one)."""

    name = "history_average"

    def choose(self, t: int, beta: np.ndarray) -> MixturePlay:
        if not self.history:
            return vertex_worst_case(beta, self.envs)
        return self._history_average()


class GradientForcingAdversary(_BaseAdversary):
    """Forces a log-growing loss gap against players that track the leader.

    Round one plays the worst vertex. Afterwards, with beta* the minimizer
    of the adversary's own cumulative history, the move depends on how far
    the committed point sits from beta*: beyond the closeness threshold
    g^2 / (8 t sigma_max^2) in squared distance the adversary plays the
    history average (the player is already paying quadratically for the
    distance); inside the threshold it plays the vertex with the largest
    gradient norm at the commitment, which by construction is at least the
    forceable gradient g. Case counts are kept for diagnostics.
    """

    name = "gradient_forcing"

    def __init__(self, constants: RegretRateConstants | None = None,
                 grid_resolution: float | None = None):
        self.constants = constants
        self.grid_resolution = grid_resolution
        self.case_counts = {"vertex_round_one": 0, "far_average": 0, "near_force": 0}

    def reset(self, envs, space, rng, horizon, tolerances) -> None:
        super().reset(envs, space, rng, horizon, tolerances)
        if self.constants is None:
            report = min_forceable_gradient(envs, space, resolution=self.grid_resolution)
            sigma_max = max(e.sigma_max for e in envs)
            sigma_min = min(e.sigma_min for e in envs)
            self.constants = RegretRateConstants(
                forceable_gradient=report.value, sigma_min=sigma_min, sigma_max=sigma_max)
        self.minimizer = WeightedMinimizer(envs, space, tolerances,
                                           grid_resolution=self.grid_resolution)
        self.case_counts = {"vertex_round_one": 0, "far_average": 0, "near_force": 0}

    def choose(self, t: int, beta: np.ndarray) -> MixturePlay:
        if not self.history:
            self.case_counts["vertex_round_one"] += 1
            return vertex_worst_case(beta, self.envs)
        leader = self.minimizer.solve(self._totals).argmin
        g = self.constants.forceable_gradient
        sigma_max = self.constants.sigma_max
        threshold = g * g / (8.0 * t * sigma_max * sigma_max)
        distance_sq = float(np.sum((np.asarray(beta, dtype=float) - leader) ** 2))
        if distance_sq >= threshold:
            self.case_counts["far_average"] += 1
            return self._history_average()
        norms = np.array([np.linalg.norm(e.gradient(beta)) for e in self.envs])
        self.case_counts["near_force"] += 1
        return convex_vertex(len(self.envs), int(np.argmax(norms)))


class AffineTrapAdversary(_BaseAdversary):
    """Two-environment trap that forces linear regret with affine mixtures.

    Near the origin (|beta| < 1) it plays (1 + alpha, -alpha), whose induced
    round loss (alpha + 1/2) beta^2 - alpha beta^4 (under the paired trap
    environments) is nonnegative on the unit interval; far from the origin
    it plays the first environment alone, collecting a loss of at least one.
    Meanwhile the summed coefficients pile negative weight on the quartic
    environment, dragging the hindsight optimum to the boundary, so any
    player loses order-of-horizon regret.
    """

    name = "affine_trap"

    def __init__(self, alpha: float):
        if not alpha > 0:
            raise ValueError("alpha must be positive")
        self.alpha = float(alpha)

    def choose(self, t: int, beta: np.ndarray) -> MixturePlay:
        beta = np.asarray(beta, dtype=float)
        if float(np.linalg.norm(beta)) < 1.0:
            coeffs = np.array([1.0 + self.alpha, -self.alpha])
        else:
            coeffs = np.array([1.0, 0.0])
        return MixturePlay(coeffs, REGION_AFFINE, self.alpha)


class ConstantMixtureAdversary(_BaseAdversary):
    """Oblivious adversary repeating one fixed mixture play."""

    name = "constant"

    def __init__(self, play: MixturePlay):
        self.play = play

    def choose(self, t: int, beta: np.ndarray) -> MixturePlay:
        return self.play


class ObliviousSequenceAdversary(_BaseAdversary):
    """Oblivious adversary committing to an explicit sequence of plays."""

    name = "oblivious"

    def __init__(self, plays: list[MixturePlay]):
        self.plays = list(plays)

    def reset(self, envs, space, rng, horizon, tolerances) -> None:
        super().reset(envs, space, rng, horizon, tolerances)
        if len(self.plays) < horizon:
            raise GameError(f"sequence of {len(self.plays)} plays shorter than "
                            f"horizon {horizon}")

    def choose(self, t: int, beta: np.ndarray) -> MixturePlay:
        return self.plays[t - 1]


@dataclass(frozen=True)
class StochasticPrior:
    """Finite-support distribution over mixture plays."""

    support: tuple
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if len(weights) != len(self.support):
            raise DimensionMismatchError("one weight per support play required")
        if np.any(weights < 0) or abs(float(np.sum(weights)) - 1.0) > 1e-12:
            raise ValueError("weights must be a probability vector")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)


class StochasticAdversary(_BaseAdversary):
    """Draws each round's play i.i.d. from a finite prior (oblivious)."""

    name = "stochastic"

    def __init__(self, prior: StochasticPrior):
        self.prior = prior

    def reset(self, envs, space, rng, horizon, tolerances) -> None:
        super().reset(envs, space, rng, horizon, tolerances)
        idx = rng.choice(len(self.prior.support), size=horizon, p=self.prior.weights)
        self._drawn = [self.prior.support[i] for i in idx]

    def choose(self, t: int, beta: np.ndarray) -> MixturePlay:
        return self._drawn[t - 1]


# ---------------------------------------------------------------------------
# Trap environment pairs. Analytic form and a sample-based realization whose
# population risks match the analytic pair exactly.

def trap_half_width(alpha: float) -> float:
    """Default box half-width for trap scenarios.

    The hindsight minimizer sits at sqrt(1 + 3/alpha); a 5% margin keeps it
    strictly inside the box without landing the boundary on a value tie of
    the oscillating leader objective.
    """
    return 1.05 * math.sqrt(1.0 + 3.0 / alpha)


def trap_environments(alpha: float, half_width: float | None = None) -> list[Environment]:
    """Analytic trap pair: beta^2 and beta^4 + beta^2 / (2 alpha), in 1-D."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    width = trap_half_width(alpha) if half_width is None else float(half_width)

    first = QuadraticRisk(q=[[2.0]], center=[0.0]).to_environment(0, lipschitz_bound=2.0 * width)

    def quartic(beta):
        b = float(np.asarray(beta, dtype=float)[0])
        return b ** 4 + b * b / (2.0 * alpha)

    def quartic_grad(beta):
        b = float(np.asarray(beta, dtype=float)[0])
        return np.array([4.0 * b ** 3 + b / alpha])

    def quartic_batch(points):
        b = np.asarray(points, dtype=float)[:, 0]
        return b ** 4 + b * b / (2.0 * alpha)

    def quartic_grad_batch(points):
        b = np.asarray(points, dtype=float)[:, 0]
        return (4.0 * b ** 3 + b / alpha)[:, None]

    sigma_min = 1.0 / alpha
    sigma_max = 12.0 * width * width + 1.0 / alpha
    second = custom_environment(1, 1, quartic, quartic_grad, sigma_min, sigma_max,
                                lipschitz_bound=4.0 * width ** 3 + width / alpha,
                                risk_batch=quartic_batch, gradient_batch=quartic_grad_batch)
    return [first, second]


def regression_trap_samples(alpha: float) -> list[SampleEnvironment]:
    """Finite-sample realization of the trap pair.

    One-parameter predictor beta^2 z_1 + beta z_2 under squared loss with
    target zero. The first environment is a single atom at z = (0, 1), so
    its risk is beta^2. The second splits mass between z = (0, s) with
    probability 1/(2 alpha + 1) and z = (s, 0) with probability
    2 alpha/(2 alpha + 1), where s = sqrt((2 alpha + 1)/(2 alpha)); the
    population risk works out to beta^4 + beta^2 / (2 alpha).
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")

    def predictor(beta, z):
        beta = np.asarray(beta, dtype=float)
        b = beta[..., 0]
        return b * b * z[0] + b * z[1]

    def predictor_grad(beta, z):
        b = float(np.asarray(beta, dtype=float)[0])
        return np.array([2.0 * b * z[0] + z[1]])

    s = math.sqrt((2.0 * alpha + 1.0) / (2.0 * alpha))
    first = SampleEnvironment(atoms=(((0.0, 1.0), 0.0, 1.0),),
                              predictor=predictor, predictor_grad=predictor_grad,
                              loss=squared_loss, loss_deriv=squared_loss_deriv, dim=1)
    second = SampleEnvironment(atoms=(((0.0, s), 0.0, 1.0 / (2.0 * alpha + 1.0)),
                                      ((s, 0.0), 0.0, 2.0 * alpha / (2.0 * alpha + 1.0))),
                               predictor=predictor, predictor_grad=predictor_grad,
                               loss=squared_loss, loss_deriv=squared_loss_deriv, dim=1)
    return [first, second]


def regression_trap_environments(alpha: float, half_width: float | None = None) -> list[Environment]:
    """The sample-based trap pair wrapped with the analytic pair's metadata.

    The curvature bounds mirror trap_environments since the population
    risks coincide.
    """
    width = trap_half_width(alpha) if half_width is None else float(half_width)
    first, second = regression_trap_samples(alpha)
    sigma_min = 1.0 / alpha
    sigma_max = 12.0 * width * width + 1.0 / alpha
    return [first.to_environment(0, sigma_min=2.0, sigma_max=2.0,
                                 lipschitz_bound=2.0 * width),
            second.to_environment(1, sigma_min=sigma_min, sigma_max=sigma_max,
                                  lipschitz_bound=4.0 * width ** 3 + width / alpha)]


def trap_space(alpha: float, half_width: float | None = None) -> Box:
    width = trap_half_width(alpha) if half_width is None else float(half_width)
    return Box(lo=[-width], hi=[width])


# ---------------------------------------------------------------------------
# Stable-set estimation through regret. The identity of Motzkin and Straus
# (1965) states 1/gamma(G) = min over the simplex of beta' (I + A) beta with
# gamma(G) the maximum stable-set size. The environment pair below hides the
# hard quadratic so that the constant affine play (1 + alpha, -alpha)
# reconstructs exactly beta' (I + A) beta as the realized round loss.

def stable_set_environments(graph: GraphInstance, alpha: float) -> list[Environment]:
    """Pair whose (1 + alpha, -alpha) mixture is beta' (I + A) beta.

    First environment: beta' (n I + A) beta / (1 + alpha). Second:
    (n - 1) |beta|^2 / alpha. Both are positive definite quadratics, so each
    is individually easy; only the affine combination exposes the stable-set
    quadratic.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    n = graph.n
    a = graph.adjacency()
    first = QuadraticRisk(q=2.0 * (n * np.eye(n) + a) / (1.0 + alpha),
                          center=np.zeros(n))
    second = QuadraticRisk(q=2.0 * (n - 1.0) / alpha * np.eye(n), center=np.zeros(n))
    return [first.to_environment(0), second.to_environment(1)]


def stable_set_play(alpha: float) -> MixturePlay:
    return MixturePlay(np.array([1.0 + alpha, -alpha]), REGION_AFFINE, alpha)


def stable_set_quadratic(graph: GraphInstance):
    """The exposed objective beta' (I + A) beta with batch and gradient."""
    q = np.eye(graph.n) + graph.adjacency()

    def value(beta):
        beta = np.asarray(beta, dtype=float)
        return float(beta @ q @ beta)

    def grad(beta):
        return 2.0 * (q @ np.asarray(beta, dtype=float))

    def value_batch(points):
        points = np.asarray(points, dtype=float)
        return np.einsum("ni,ij,nj->n", points, q, points)

    return value, grad, value_batch


def stable_set_starts(graph: GraphInstance) -> list[np.ndarray]:
    """Extra multi-start seeds: uniform on the greedy stable set and on all
    non-adjacent vertex pairs. These sit on the faces where the simplex
    quadratic attains its small values."""
    starts = []
    greedy = graph.greedy_stable_set()
    if greedy:
        point = np.zeros(graph.n)
        point[greedy] = 1.0 / len(greedy)
        starts.append(point)
    adjacency = graph.adjacency()
    for i in range(graph.n):
        for j in range(i + 1, graph.n):
            if adjacency[i, j] == 0.0:
                point = np.zeros(graph.n)
                point[i] = point[j] = 0.5
                starts.append(point)
    return starts


@dataclass(frozen=True)
class StableSetEstimate:
    """Estimator output: the point estimate, its certified interval, and the
    regret condition that backs the certificate."""

    gamma_hat: float
    interval: tuple[float, float]
    regret: float
    regret_threshold: float
    certified: bool


def stable_set_estimate(ledger: RegretLedger, n_vertices: int) -> StableSetEstimate:
    """Estimate the maximum stable-set size from a completed run.

    gamma_hat = horizon / cumulative loss. When the run's regret is at most
    horizon / n_vertices the interval [gamma_hat, 2 gamma_hat] contains the
    true size, and the estimate itself lands within a factor of two below
    it. A nonpositive cumulative loss can only come from corrupted data.
    """
    total = ledger.cumulative_loss
    horizon = ledger.horizon
    if horizon < 1:
        raise GameError("empty ledger")
    if total <= 0.0:
        raise DataCorruptionError(
            f"cumulative loss {total!r} is not positive; ledger is corrupt")
    gamma_hat = horizon / total
    regret = ledger.regret
    threshold = horizon / float(n_vertices)
    return StableSetEstimate(gamma_hat=gamma_hat,
                             interval=(gamma_hat, 2.0 * gamma_hat),
                             regret=regret, regret_threshold=threshold,
                             certified=bool(regret <= threshold))


def run_stable_set_game(graph: GraphInstance, alpha: float = 0.5, horizon: int = 500,
                        player=None, seed: int = 0,
                        tolerances: Tolerances | None = None):
    """Convenience wrapper: play the constant stable-set game and estimate.

    Returns (ledger, estimate). The player defaults to leader-following.
    """
    from .game import run_game
    from .players import FollowTheLeader

    envs = stable_set_environments(graph, alpha)
    space = Simplex(graph.n)
    starts = stable_set_starts(graph)
    if player is None:
        player = FollowTheLeader(extra_starts=starts)
    adversary = ConstantMixtureAdversary(stable_set_play(alpha))
    ledger = run_game(envs, space, player, adversary, horizon, seed=seed,
                      tolerances=tolerances, expected_region=REGION_AFFINE,
                      extra_starts=starts)
    return ledger, stable_set_estimate(ledger, graph.n)


ADVERSARY_KINDS = {
    "vertex_worst": VertexWorstCaseAdversary,
    "history_average": HistoryAverageAdversary,
    "gradient_forcing": GradientForcingAdversary,
    "affine_trap": AffineTrapAdversary,
    "constant": ConstantMixtureAdversary,
    "oblivious": ObliviousSequenceAdversary,
    "stochastic": StochasticAdversary,
}
