"""The sequential game loop, its ledger, and ledger serialization.

Each round the player commits a parameter vector, the adversary answers
with a mixture play (adaptive adversaries see the commitment, oblivious
ones ignore it), and the realized loss is the mixture risk. Regret is the
cumulative realized loss minus the best fixed parameter in hindsight,
which by linearity is the minimizer of the coefficient-weighted sum of
environment risks under the summed coefficients.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .environments import Environment
from .errors import (DataCorruptionError, DimensionMismatchError, GameError,
                     RegionViolationError, SolverFailureError)
from .mixtures import MixturePlay, WeightedObjective, mixture_risk
from .optim import SolverReport, global_min_grid, minimize_convex
from .config import Tolerances

logger = logging.getLogger("regretlab.game")


def compensated_cumsum(values) -> np.ndarray:
    """Running sums with Kahan-Babuska (Neumaier) compensation.

    Each emitted prefix is the raw running sum plus the accumulated
    rounding carry, so the error per prefix stays at a few ulps of the
    running magnitude even when one addend dwarfs the total.
    """
    out = np.empty(len(values), dtype=float)
    total = 0.0
    carry = 0.0
    for i, v in enumerate(values):
        v = float(v)
        s = total + v
        if abs(total) >= abs(v):
            carry += (total - s) + v
        else:
            carry += (v - s) + total
        total = s
        out[i] = total + carry
    return out


@dataclass(frozen=True)
class RoundRecord:
    """One played round: time index, both moves, and the realized loss."""

    t: int
    beta: np.ndarray
    lam: MixturePlay
    loss: float


@dataclass
class RegretLedger:
    """Complete record of one run plus hindsight summary fields."""

    records: list[RoundRecord] = field(default_factory=list)
    hindsight_value: float | None = None
    hindsight_argmin: np.ndarray | None = None

    def append(self, record: RoundRecord) -> None:
        self.records.append(record)

    @property
    def horizon(self) -> int:
        return len(self.records)

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    @property
    def cumulative_losses(self) -> np.ndarray:
        return compensated_cumsum(self.losses)

    @property
    def cumulative_loss(self) -> float:
        if not self.records:
            return 0.0
        return float(self.cumulative_losses[-1])

    @property
    def regret(self) -> float:
        if self.hindsight_value is None:
            raise GameError("hindsight value not computed for this ledger")
        return self.cumulative_loss - self.hindsight_value

    def coefficient_matrix(self) -> np.ndarray:
        return np.array([r.lam.coefficients for r in self.records])


class WeightedMinimizer:
    """Shared argmin oracle for coefficient-weighted sums of environment risks.

    Dispatches on the sign pattern: nonnegative coefficients certify a convex
    objective and go to projected descent (warm-started from the previous
    solution); any negative coefficient routes to the global lattice or
    multi-start search. Solutions are cached under the L1-normalized
    coefficient vector, which is sound because scaling the coefficients by a
    positive constant does not move the argmin. The cache makes long runs
    against repeating or proportional histories cheap.
    """

    def __init__(self, envs: list[Environment], space, tolerances: Tolerances | None = None,
                 grid_resolution: float | None = None, multistart_points: int | None = None,
                 extra_starts=None):
        self.envs = list(envs)
        self.space = space
        self.tolerances = tolerances or Tolerances()
        self.grid_resolution = grid_resolution
        self.multistart_points = multistart_points
        self.extra_starts = extra_starts
        self._cache: dict[bytes, np.ndarray] = {}
        self._warm: np.ndarray | None = None
        self._grid_points: np.ndarray | None = None
        self._grid_risks: np.ndarray | None = None

    def _lattice(self):
        # Environment risks on the search lattice, evaluated once: after
        # that every global solve is a matrix-vector product.
        if self._grid_points is None:
            from .environments import risk_batch_fallback
            from .optim import default_grid_resolution
            res = self.grid_resolution
            if res is None:
                res = default_grid_resolution(self.space.intrinsic_dim)
            self._grid_points = self.space.grid(res)
            self._grid_risks = np.stack(
                [risk_batch_fallback(e, self._grid_points) for e in self.envs], axis=1)
        return self._grid_points, self._grid_risks

    def _solve_on_lattice(self, objective: WeightedObjective, coeffs, linear) -> SolverReport:
        # Same composition as global_min_grid's grid mode (lexicographic
        # lattice, first-occurrence argmin, descent polish, keep the better
        # point) with the risk matrix reused across calls.
        points, risks = self._lattice()
        values = risks @ coeffs
        if linear is not None:
            values = values + points @ np.asarray(linear, dtype=float)
        idx = int(np.argmin(values))
        best_x = np.array(points[idx], dtype=float)
        best_f = float(values[idx])
        residual = float("nan")
        iterations = 0
        rep = minimize_convex(objective.value, objective.grad, self.space,
                              init=best_x, tol=self.tolerances.gradient)
        if rep.value <= best_f:
            best_x, best_f = rep.argmin, rep.value
            residual = rep.grad_norm_at_solution
            iterations = rep.iterations
        return SolverReport(best_x, best_f, residual, iterations, True)

    def solve(self, coefficients, linear=None) -> SolverReport:
        coeffs = np.asarray(coefficients, dtype=float)
        scale = float(np.sum(np.abs(coeffs)))
        if scale == 0.0 and linear is None:
            raise GameError("all-zero coefficients have no meaningful argmin")
        objective = WeightedObjective(self.envs, coeffs, linear=linear)
        key = None
        if linear is None and scale > 0.0:
            key = (coeffs / scale).tobytes()
            cached = self._cache.get(key)
            if cached is not None:
                return SolverReport(cached, objective.value(cached), 0.0, 0, True)
        if objective.convex:
            curvature = objective.curvature_upper
            step0 = 1.0 / curvature if curvature > 0 else 1.0
            report = minimize_convex(objective.value, objective.grad, self.space,
                                     init=self._warm, tol=self.tolerances.gradient,
                                     step0=step0)
            if (not report.converged
                    and report.grad_norm_at_solution > self.tolerances.stationarity):
                raise SolverFailureError(
                    f"convex solve stalled at residual {report.grad_norm_at_solution:.3e}",
                    report)
        else:
            if self.space.intrinsic_dim <= 3:
                report = self._solve_on_lattice(objective, coeffs, linear)
            else:
                report = global_min_grid(objective.value, self.space,
                                         resolution=self.multistart_points,
                                         mode="multistart",
                                         gradient=objective.grad,
                                         value_batch=objective.value_batch,
                                         extra_starts=self.extra_starts,
                                         tol=self.tolerances.gradient)
        if key is not None:
            self._cache[key] = report.argmin
        self._warm = report.argmin
        return report


def run_game(envs: list[Environment], space, player, adversary, horizon: int,
             seed: int = 0, tolerances: Tolerances | None = None,
             expected_region: str | None = None,
             hindsight_resolution: float | None = None,
             multistart_points: int | None = None,
             extra_starts=None) -> RegretLedger:
    """Play `horizon` rounds and return the completed ledger.

    The player commits first each round; adaptive adversaries may inspect the
    commitment. Player moves outside the space are projected back with a
    warning; adversary plays violating the declared region abort the run.
    After the last round the best fixed parameter in hindsight is computed
    with the shared argmin oracle and stored on the ledger.
    """
    if horizon < 1:
        raise GameError(f"horizon must be >= 1, got {horizon}")
    tolerances = tolerances or Tolerances()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    player_seq, adversary_seq = np.random.SeedSequence(seed).spawn(2)
    player.reset(envs, space, np.random.default_rng(player_seq), horizon, tolerances)
    adversary.reset(envs, space, np.random.default_rng(adversary_seq), horizon, tolerances)

    ledger = RegretLedger()
    reveal = getattr(player, "needs_revealed_loss", False)
    for t in range(1, horizon + 1):
        beta = np.asarray(player.play(t), dtype=float)
        if not space.contains(beta):
            logger.warning("round %d: player move outside the feasible set; projecting", t)
            beta = space.project(beta)
        lam = adversary.choose(t, beta)
        if not isinstance(lam, MixturePlay):
            raise RegionViolationError("adversary must return a MixturePlay")
        if lam.n_envs != len(envs):
            raise DimensionMismatchError(
                f"adversary play over {lam.n_envs} environments, expected {len(envs)}")
        if expected_region is not None and lam.region != expected_region:
            raise RegionViolationError(
                f"round {t}: adversary played region {lam.region!r}, "
                f"scenario declares {expected_region!r}")
        if reveal:
            beta = np.asarray(player.best_response(t, lam), dtype=float)
            beta = space.project(beta)
        loss = mixture_risk(beta, lam, envs)
        ledger.append(RoundRecord(t=t, beta=beta, lam=lam, loss=loss))
        player.observe(t, lam)
        observe = getattr(adversary, "observe", None)
        if observe is not None:
            observe(t, beta, lam)

    fill_hindsight(ledger, envs, space, tolerances,
                   hindsight_resolution=hindsight_resolution,
                   multistart_points=multistart_points, extra_starts=extra_starts)
    return ledger


def fill_hindsight(ledger: RegretLedger, envs, space, tolerances: Tolerances | None = None,
                   hindsight_resolution: float | None = None,
                   multistart_points: int | None = None, extra_starts=None,
                   minimizer: WeightedMinimizer | None = None) -> None:
    if not ledger.records:
        ledger.hindsight_value = 0.0
        ledger.hindsight_argmin = None
        return
    if minimizer is None:
        minimizer = WeightedMinimizer(envs, space, tolerances,
                                      grid_resolution=hindsight_resolution,
                                      multistart_points=multistart_points,
                                      extra_starts=extra_starts)
    totals = ledger.coefficient_matrix().sum(axis=0)
    report = minimizer.solve(totals)
    ledger.hindsight_value = report.value
    ledger.hindsight_argmin = report.argmin


def regret_curve(ledger: RegretLedger, envs, space, tolerances: Tolerances | None = None,
                 hindsight_resolution: float | None = None,
                 multistart_points: int | None = None, extra_starts=None) -> np.ndarray:
    """Per-round regret R_t = cum loss through t minus hindsight optimum at t.

    One warm-started hindsight solve per round, sharing the proportionality
    cache, so repeating histories cost almost nothing.
    """
    minimizer = WeightedMinimizer(envs, space, tolerances,
                                  grid_resolution=hindsight_resolution,
                                  multistart_points=multistart_points,
                                  extra_starts=extra_starts)
    cums = ledger.cumulative_losses
    out = np.empty(len(cums))
    totals = np.zeros(len(envs))
    for i, record in enumerate(ledger.records):
        totals = totals + record.lam.coefficients
        report = minimizer.solve(totals)
        out[i] = cums[i] - report.value
    return out


# ---------------------------------------------------------------------------
# Serialization. One CSV per run: header t,beta,lambda,loss,cum_loss with
# vector fields ';'-joined, every float printed with 17 significant digits
# so parsing the file back reproduces the exact bit pattern.

CSV_HEADER = "t,beta,lambda,loss,cum_loss"


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _fmt_vec(v: np.ndarray) -> str:
    return ";".join(_fmt(x) for x in v)


def ledger_to_csv(ledger: RegretLedger) -> str:
    lines = [CSV_HEADER]
    cums = ledger.cumulative_losses
    for record, cum in zip(ledger.records, cums):
        lines.append(",".join([str(record.t), _fmt_vec(record.beta),
                               _fmt_vec(record.lam.coefficients),
                               _fmt(record.loss), _fmt(cum)]))
    return "\n".join(lines) + "\n"


def write_ledger_csv(ledger: RegretLedger, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(ledger_to_csv(ledger))


@dataclass(frozen=True)
class LedgerFrame:
    """Parsed ledger CSV: plain arrays, no region metadata."""

    t: np.ndarray
    beta: np.ndarray
    lam: np.ndarray
    loss: np.ndarray
    cum_loss: np.ndarray


def read_ledger_csv(path) -> LedgerFrame:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise DataCorruptionError(f"{path}: missing ledger header {CSV_HEADER!r}")
    ts, betas, lams, losses, cums = [], [], [], [], []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 5:
            raise DataCorruptionError(f"{path}: malformed row {line!r}")
        ts.append(int(parts[0]))
        betas.append([float(x) for x in parts[1].split(";")])
        lams.append([float(x) for x in parts[2].split(";")])
        losses.append(float(parts[3]))
        cums.append(float(parts[4]))
    return LedgerFrame(t=np.array(ts), beta=np.array(betas), lam=np.array(lams),
                       loss=np.array(losses), cum_loss=np.array(cums))


def check_frame_integrity(frame: LedgerFrame) -> None:
    """Recompute the running sums and compare bit-for-bit."""
    expected = compensated_cumsum(frame.loss)
    if not np.array_equal(expected, frame.cum_loss):
        raise DataCorruptionError("cum_loss column disagrees with recomputed running sums")
    if not np.array_equal(frame.t, np.arange(1, len(frame.t) + 1)):
        raise DataCorruptionError("round indices are not 1..T")


# ---------------------------------------------------------------------------
# Consistency check: the minimax value over the convex hull of environments
# equals the minimax value over the environment vertices.

def minimax_hull_vs_vertices(envs, space, resolution: float = 1e-4,
                             lambda_resolution: float = 1e-2) -> tuple[float, float]:
    """min over a beta lattice of the worst mixture, by two routes.

    Vertex route: worst single environment at each lattice point. Hull
    route: worst probability vector over a simplex lattice (which includes
    the vertices). Linearity of the mixture risk in the coefficients makes
    the two minimax values equal; both are returned for the caller to
    compare.
    """
    from .spaces import Simplex

    points = space.grid(resolution)
    risks = np.stack([np.asarray(e.risk_batch(points), dtype=float)
                      if e.risk_batch is not None
                      else np.array([e.risk(p) for p in points])
                      for e in envs], axis=1)
    vertex_value = float(np.min(np.max(risks, axis=1)))
    lattice = Simplex(len(envs)).grid(lambda_resolution)
    hull_value = float(np.min(np.max(risks @ lattice.T, axis=1)))
    return hull_value, vertex_value
