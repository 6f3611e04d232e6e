"""Scenario execution: seeds, aggregate curves, fits, files, and checks.

`run_scenario` plays every configured seed, aggregates the regret curves,
fits growth models, and writes the run directory: one ledger CSV per seed,
the mean/std regret curve, a JSON summary, the byte-exact config echo, and
(optionally) a rendered figure. `verify_identities` re-derives the algebraic
facts the engine relies on by two independent routes each and reports the
worst deviation per check.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import format_flat_config, output_root
from .experts import (ExpertInstance, disagreeing_expert_instance,
                      expert_round_environments, run_expert_game)
from .game import (RegretLedger, minimax_hull_vs_vertices, regret_curve,
                   run_game, write_ledger_csv)
from .mixtures import (REGION_AFFINE, REGION_CONVEX, MixturePlay,
                       affine_vertex_coefficients, mixture_risk,
                       mixture_risk_sequential, pooled_sample_mixture_risk)
from .optim import minimize_convex
from .rates import IncrementFit, RateFit, dyadic_increment_fit, fit_rate
from .scenarios import Scenario

logger = logging.getLogger(__name__)

CURVE_HEADER = "t,mean_regret,std_regret"


def _fmt(x: float) -> str:
    return "%.17g" % x


@dataclass
class SeedOutcome:
    seed: int
    ledger: RegretLedger
    curve: np.ndarray
    identity_gap_max: float | None = None


@dataclass
class ScenarioResult:
    scenario: Scenario
    outcomes: list[SeedOutcome]
    t: np.ndarray
    mean_curve: np.ndarray
    std_curve: np.ndarray
    checkpoints: dict[int, tuple[float, float]]
    rate_fit: RateFit | None
    increment_fit: IncrementFit | None
    summary: dict
    out_dir: str | None = None
    paths: dict[str, str] = field(default_factory=dict)


def _boundary_gap(space, x: np.ndarray) -> float:
    """Distance from x to the boundary of the space (0 means on it)."""
    if space.kind == "box":
        return float(min(np.min(x - space.lo), np.min(space.hi - x)))
    if space.kind == "ball":
        return float(space.radius - np.linalg.norm(x - space.center))
    return float(np.min(x))


def _warn_boundary_active(scenario: Scenario) -> None:
    # Convex-region analyses assume each environment's own minimizer is
    # interior; a boundary-active minimizer silently changes the geometry.
    for env in scenario.envs:
        rep = minimize_convex(env.risk, env.gradient, scenario.space,
                              tol=scenario.tolerances.gradient)
        if _boundary_gap(scenario.space, rep.argmin) < 1e-6:
            logger.warning("environment %d has a boundary-active minimizer; "
                           "interior-optimum assumptions do not apply", env.env_id)


def _run_seed(scenario: Scenario, seed: int) -> SeedOutcome:
    if scenario.env_kind == "experts":
        instance = disagreeing_expert_instance(scenario.horizon, scenario.alpha,
                                               seed, scenario.expert_loss)
        res = run_expert_game(instance, player=scenario.player_kind,
                              eta=scenario.player_params.get("eta"), seed=seed,
                              points_per_edge=scenario.expert_lattice,
                              tolerances=scenario.tolerances)
        return SeedOutcome(seed=seed, ledger=res.ledger, curve=res.regret_curve,
                           identity_gap_max=res.identity_gap_max)
    player = scenario.make_player()
    adversary = scenario.make_adversary()
    ledger = run_game(scenario.envs, scenario.space, player, adversary,
                      scenario.horizon, seed=seed, tolerances=scenario.tolerances,
                      expected_region=scenario.region,
                      hindsight_resolution=scenario.hindsight_resolution,
                      multistart_points=scenario.player_params.get("multistart_points"),
                      extra_starts=scenario.extra_starts)
    curve = regret_curve(ledger, scenario.envs, scenario.space, scenario.tolerances,
                         hindsight_resolution=scenario.hindsight_resolution,
                         multistart_points=scenario.player_params.get("multistart_points"),
                         extra_starts=scenario.extra_starts)
    return SeedOutcome(seed=seed, ledger=ledger, curve=curve)


def _constants_block(scenario: Scenario) -> dict | None:
    if scenario.env_kind == "experts" or scenario.space.intrinsic_dim > 3:
        return None
    consts = scenario.constants()
    block = {
        "forceable_gradient": consts.forceable_gradient,
        "sigma_min": consts.sigma_min,
        "sigma_max": consts.sigma_max,
        "lipschitz_bound": consts.lipschitz_bound,
        "log_regret_constant": consts.log_regret_constant,
    }
    if consts.lipschitz_bound is not None:
        block["harmonic_upper_bound"] = consts.harmonic_bound(scenario.horizon)
    return block


def run_scenario(scenario: Scenario, out_root: str | None = None,
                 write: bool = True, figures: bool | None = None) -> ScenarioResult:
    """Play all seeds, aggregate, fit, and (optionally) write the run directory."""
    if scenario.env_kind != "experts" and scenario.region == REGION_CONVEX:
        _warn_boundary_active(scenario)

    seeds = scenario.seeds
    if scenario.workers > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=scenario.workers) as pool:
            outcomes = list(pool.map(lambda s: _run_seed(scenario, s), seeds))
    else:
        outcomes = [_run_seed(scenario, s) for s in seeds]

    horizon = scenario.horizon
    t = np.arange(1, horizon + 1, dtype=float)
    curves = np.stack([o.curve for o in outcomes])
    mean_curve = curves.mean(axis=0)
    std_curve = curves.std(axis=0)

    checkpoint_rounds = sorted({max(1, horizon // 10), max(1, horizon // 2), horizon})
    checkpoints = {r: (float(mean_curve[r - 1]), float(std_curve[r - 1]))
                   for r in checkpoint_rounds}

    rate = None
    try:
        rate = fit_rate(t, mean_curve, t_min=scenario.rate_t_min)
    except ValueError as exc:
        logger.info("rate fit skipped: %s", exc)
    increment = None
    try:
        increment = dyadic_increment_fit(t, mean_curve)
    except ValueError as exc:
        logger.info("increment fit skipped: %s", exc)

    summary = {
        "name": scenario.name,
        "env_kind": scenario.env_kind,
        "region": scenario.region,
        "horizon": horizon,
        "seeds": list(seeds),
        "player": scenario.player_kind,
        "adversary": scenario.adversary_kind,
        "per_seed": {
            str(o.seed): {
                "cumulative_loss": o.ledger.cumulative_loss,
                "hindsight_value": o.ledger.hindsight_value,
                "regret": o.ledger.regret,
                **({"identity_gap_max": o.identity_gap_max}
                   if o.identity_gap_max is not None else {}),
            } for o in outcomes
        },
        "checkpoints": {str(r): {"mean": m, "std": s}
                        for r, (m, s) in checkpoints.items()},
        "config_echo": dict(scenario.echo),
    }
    if rate is not None:
        summary["rate_fit"] = {
            "selected": rate.selected,
            "loglog_exponent": rate.loglog_exponent,
            "t_min": rate.t_min,
            "n_points": rate.n_points,
            "models": {name: {"slope": m.slope, "intercept": m.intercept,
                              "r_squared": m.r_squared}
                       for name, m in rate.models.items()},
        }
    if increment is not None:
        summary["increment_fit"] = {"c": increment.c,
                                    "r_squared": increment.r_squared}
    constants = _constants_block(scenario)
    if constants is not None:
        summary["constants"] = constants

    result = ScenarioResult(scenario=scenario, outcomes=outcomes, t=t,
                            mean_curve=mean_curve, std_curve=std_curve,
                            checkpoints=checkpoints, rate_fit=rate,
                            increment_fit=increment, summary=summary)
    if not write:
        return result

    root = out_root if out_root is not None else output_root()
    out_dir = os.path.join(root, scenario.output_dir)
    os.makedirs(out_dir, exist_ok=True)
    result.out_dir = out_dir

    echo_path = os.path.join(out_dir, "config_echo.cfg")
    with open(echo_path, "w", encoding="utf-8") as fh:
        fh.write(format_flat_config(scenario.echo))
    result.paths["config_echo"] = echo_path

    for outcome in outcomes:
        ledger_path = os.path.join(out_dir, f"seed{outcome.seed}_ledger.csv")
        write_ledger_csv(outcome.ledger, ledger_path)
        result.paths[f"ledger_seed{outcome.seed}"] = ledger_path

    curve_path = os.path.join(out_dir, "regret_curve.csv")
    with open(curve_path, "w", encoding="utf-8") as fh:
        fh.write(CURVE_HEADER + "\n")
        for i in range(horizon):
            fh.write(f"{i + 1},{_fmt(mean_curve[i])},{_fmt(std_curve[i])}\n")
    result.paths["curve"] = curve_path

    summary_path = os.path.join(out_dir, "summary.json")
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    result.paths["summary"] = summary_path

    want_figures = scenario.figures if figures is None else figures
    if want_figures:
        from .plots import render_scenario_figure
        figure_path = os.path.join(out_dir, "regret_curve.png")
        render_scenario_figure(figure_path, t, mean_curve, std_curve,
                               rate_fit=rate, increment_fit=increment,
                               title=scenario.name)
        result.paths["figure"] = figure_path
    return result


# ---------------------------------------------------------------------------
# Identity checks: each one computes the same quantity by two independent
# routes and reports the worst disagreement.

@dataclass(frozen=True)
class IdentityCheck:
    name: str
    passed: bool
    max_deviation: float | None
    tolerance: float | None
    detail: str
    skipped: bool = False


@dataclass(frozen=True)
class IdentityReport:
    checks: list

    @property
    def all_passed(self) -> bool:
        return all(c.passed or c.skipped for c in self.checks)


def _check_envs(scenario: Scenario) -> tuple[list, object]:
    if scenario.env_kind == "experts":
        instance = disagreeing_expert_instance(max(scenario.horizon, 1),
                                               scenario.alpha, seed=0,
                                               loss_name=scenario.expert_loss)
        return list(expert_round_environments(instance, 1)), scenario.space
    return scenario.envs, scenario.space


def _linearity_check(scenario: Scenario, rng, n_draws: int,
                     tol: float) -> IdentityCheck:
    envs, space = _check_envs(scenario)
    samples = None
    if scenario.env_kind == "trap_sample":
        from .adversaries import regression_trap_samples
        samples = regression_trap_samples(scenario.alpha if scenario.alpha else 0.5)
    n = len(envs)
    worst = 0.0
    for _ in range(n_draws):
        beta = space.random_point(rng)
        weights = rng.exponential(size=n)
        lam = MixturePlay(weights / weights.sum(), REGION_CONVEX)
        worst = max(worst, abs(mixture_risk(beta, lam, envs)
                               - mixture_risk_sequential(beta, lam, envs)))
        if scenario.alpha is not None:
            rows = affine_vertex_coefficients(n, scenario.alpha)
            mix = weights / weights.sum() @ rows
            lam_aff = MixturePlay(mix, REGION_AFFINE, scenario.alpha)
            worst = max(worst, abs(mixture_risk(beta, lam_aff, envs)
                                   - mixture_risk_sequential(beta, lam_aff, envs)))
        if samples is not None:
            worst = max(worst, abs(mixture_risk(beta, lam, envs)
                                   - pooled_sample_mixture_risk(beta, lam, samples)))
    detail = f"{n_draws} random points, sequential vs vectorized accumulation"
    if samples is not None:
        detail += " plus pooled-atom route"
    return IdentityCheck(name="mixture-linearity", passed=worst <= tol,
                         max_deviation=worst, tolerance=tol, detail=detail)


def _minimax_check(scenario: Scenario, tol: float) -> IdentityCheck:
    envs, space = _check_envs(scenario)
    if space.intrinsic_dim > 2:
        return IdentityCheck(name="minimax-hull-vs-vertices", passed=True,
                             max_deviation=None, tolerance=tol, skipped=True,
                             detail=f"skipped: lattice infeasible in intrinsic "
                                    f"dimension {space.intrinsic_dim}")
    resolution = 1e-3 if space.intrinsic_dim == 1 else 1e-2
    hull, vertex = minimax_hull_vs_vertices(envs, space, resolution=resolution)
    gap = abs(hull - vertex)
    return IdentityCheck(name="minimax-hull-vs-vertices", passed=gap <= tol,
                         max_deviation=gap, tolerance=tol,
                         detail=f"hull {hull:.12g} vs vertices {vertex:.12g}")


def _affine_max_check(scenario: Scenario, rng, n_draws: int, tol: float,
                      corrupt_alpha: float | None) -> IdentityCheck:
    envs, space = _check_envs(scenario)
    n = len(envs)
    alpha = scenario.alpha if scenario.alpha is not None else 0.5
    alpha_closed = corrupt_alpha if corrupt_alpha is not None else alpha
    rows = affine_vertex_coefficients(n, alpha)
    worst = 0.0
    for _ in range(n_draws):
        beta = space.random_point(rng)
        risks = np.array([float(e.risk(beta)) for e in envs])
        vertex_max = float(np.max(rows @ risks))
        total = float(np.sum(risks))
        closed = float(np.max((1.0 + n * alpha_closed) * risks
                              - alpha_closed * total))
        worst = max(worst, abs(vertex_max - closed))
    detail = (f"{n_draws} random points, alpha {alpha:g}, vertex enumeration vs "
              f"closed form")
    if corrupt_alpha is not None:
        detail += f" (closed form deliberately evaluated at alpha {corrupt_alpha:g})"
    return IdentityCheck(name="affine-vertex-max", passed=worst <= tol,
                         max_deviation=worst, tolerance=tol, detail=detail)


def _cancellation_check(scenario: Scenario, rng, n_draws: int,
                        tol: float) -> IdentityCheck:
    alpha = scenario.alpha if scenario.alpha is not None else 0.5
    loss_name = scenario.expert_loss if scenario.env_kind == "experts" else "absolute"
    worst = 0.0
    for _ in range(n_draws):
        n = int(rng.integers(2, 5))
        predictions = rng.normal(size=(1, n))
        targets = rng.normal(size=1)
        instance = ExpertInstance(alpha=alpha, predictions=predictions,
                                  targets=targets, loss_name=loss_name)
        env1, env2 = expert_round_environments(instance, 1)
        weights = rng.exponential(size=n)
        delta = weights / weights.sum()
        combined = (1.0 + alpha) * env1.risk(delta) - alpha * env2.risk(delta)
        worst = max(worst, abs(combined - instance.round_loss(1, delta)))
    return IdentityCheck(name="curvature-cancellation", passed=worst <= tol,
                         max_deviation=worst, tolerance=tol,
                         detail=f"{n_draws} random simplex points; combined pair"
                                " loss vs raw prediction loss")


def verify_identities(scenario: Scenario, seed: int = 0, n_draws: int = 200,
                      corrupt_alpha: float | None = None) -> IdentityReport:
    """Run every consistency check against the scenario's environments.

    corrupt_alpha deliberately evaluates the closed-form route of the
    affine-vertex-max check at a wrong alpha; a healthy engine must then
    report that check as failed (negative control for the checker itself).
    """
    tolerances = scenario.tolerances
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    checks = [
        _linearity_check(scenario, rng, n_draws, tolerances.identity),
        _minimax_check(scenario, tolerances.oracle),
        _affine_max_check(scenario, rng, n_draws, tolerances.identity,
                          corrupt_alpha),
        _cancellation_check(scenario, rng, max(n_draws, 1000),
                            tolerances.identity),
    ]
    return IdentityReport(checks=checks)
