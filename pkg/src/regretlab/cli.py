"""Command-line interface.

Verbs:
  run       play a scenario file across its seeds and write the run directory
  rates     fit growth models to a regret curve or a recorded ledger
  stableset estimate the maximum stable-set size of a graph through regret
  check     re-derive the engine's algebraic identities by independent routes
  gconst    report the forceable-gradient and curvature constants

Exit codes: 0 success, 2 invalid input or a failed check, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .adversaries import run_stable_set_game
from .config import OUTPUT_ROOT_ENV
from .errors import ConfigError, GameError, SolverFailureError
from .game import (RegretLedger, RoundRecord, check_frame_integrity,
                   read_ledger_csv, regret_curve)
from .mixtures import MixturePlay
from .graphs import ENUM_LIMIT, load_graph
from .rates import fit_rate
from .runner import CURVE_HEADER, run_scenario, verify_identities
from .scenarios import load_scenario

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_SOLVER = 3


def _print_rate_fit(fit) -> None:
    for name in ("logarithmic", "sqrt", "linear"):
        model = fit.models[name]
        marker = "*" if name == fit.selected else " "
        print(f"  {marker} {name:<12} slope={model.slope: .6g}  "
              f"intercept={model.intercept: .6g}  R2={model.r_squared:.6f}")
    if fit.loglog_exponent is not None:
        print(f"  log-log exponent: {fit.loglog_exponent:.4f}")
    print(f"  fitted on {fit.n_points} log-spaced rounds with t >= {fit.t_min}")


def _cmd_run(args) -> int:
    scenario = load_scenario(args.config)
    figures = False if args.no_figures else None
    result = run_scenario(scenario, out_root=args.out_root, figures=figures)
    print(f"scenario {scenario.name}: {len(scenario.seeds)} seed(s), "
          f"horizon {scenario.horizon}")
    for outcome in result.outcomes:
        print(f"  seed {outcome.seed}: cumulative loss "
              f"{outcome.ledger.cumulative_loss:.6g}, regret "
              f"{outcome.ledger.regret:.6g}")
    for r, (mean, std) in result.checkpoints.items():
        print(f"  regret at t={r}: mean {mean:.6g}, std {std:.6g}")
    if result.rate_fit is not None:
        print("growth model fits:")
        _print_rate_fit(result.rate_fit)
    if result.increment_fit is not None:
        print(f"  increment fit: c={result.increment_fit.c:.6g} "
              f"(R2={result.increment_fit.r_squared:.6g})")
    print(f"outputs in {result.out_dir}")
    for name in sorted(result.paths):
        print(f"  {name}: {result.paths[name]}")
    return EXIT_OK


def _read_curve_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    t, mean = [], []
    for line in lines[1:]:
        parts = line.split(",")
        t.append(float(parts[0]))
        mean.append(float(parts[1]))
    return np.array(t), np.array(mean)


def _ledger_from_frame(frame, region: str, alpha: float | None) -> RegretLedger:
    ledger = RegretLedger()
    for i in range(len(frame.t)):
        lam = MixturePlay(frame.lam[i], region, alpha)
        ledger.append(RoundRecord(t=int(frame.t[i]), beta=frame.beta[i],
                                  lam=lam, loss=float(frame.loss[i])))
    return ledger


def _cmd_rates(args) -> int:
    with open(args.csv, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
    if header == CURVE_HEADER:
        t, regret = _read_curve_csv(args.csv)
        fit = fit_rate(t, regret, t_min=args.t_min)
        print(f"growth model fits for {args.csv}:")
        _print_rate_fit(fit)
        return EXIT_OK

    # A raw ledger carries plays and losses but not the hindsight curve;
    # rebuild the scenario from the run's config echo to recompute it.
    frame = read_ledger_csv(args.csv)
    check_frame_integrity(frame)
    echo_path = os.path.join(os.path.dirname(os.path.abspath(args.csv)),
                             "config_echo.cfg")
    if not os.path.exists(echo_path):
        raise ConfigError([("", f"no config echo next to {args.csv}; regret "
                                "needs the scenario's environments")])
    scenario = load_scenario(echo_path)
    if scenario.env_kind == "experts":
        raise ConfigError([("", "expert ledgers lack the per-round instance; "
                                "fit the run's regret_curve.csv instead")])
    ledger = _ledger_from_frame(frame, scenario.region, scenario.alpha)
    curve = regret_curve(ledger, scenario.envs, scenario.space,
                         scenario.tolerances,
                         hindsight_resolution=scenario.hindsight_resolution,
                         multistart_points=scenario.player_params.get("multistart_points"),
                         extra_starts=scenario.extra_starts)
    fit = fit_rate(np.asarray(frame.t, dtype=float), curve, t_min=args.t_min)
    print(f"growth model fits for {args.csv} "
          f"(curve recomputed from {echo_path}):")
    _print_rate_fit(fit)
    return EXIT_OK


def _cmd_stableset(args) -> int:
    graph = load_graph(args.graph)
    player = None
    if args.player != "ftl":
        from .adversaries import stable_set_starts
        from .players import PLAYER_KINDS
        player = PLAYER_KINDS[args.player](extra_starts=stable_set_starts(graph))
    ledger, estimate = run_stable_set_game(graph, alpha=args.alpha,
                                           horizon=args.T, player=player,
                                           seed=args.seed)
    print(f"graph: {graph.n} vertices, {graph.m} edges")
    print(f"estimate: {estimate.gamma_hat:.6f}")
    print(f"interval: [{estimate.interval[0]:.6f}, {estimate.interval[1]:.6f}]")
    print(f"regret: {estimate.regret:.6g} (certification threshold "
          f"{estimate.regret_threshold:.6g})")
    print(f"certified: {'yes' if estimate.certified else 'no'}")
    if graph.n <= ENUM_LIMIT:
        exact = graph.max_stable_set_size()
        # Slack of a few ulps: on zero-regret runs the estimate equals the
        # true size up to the rounding of the cumulative sum.
        slack = 1e-9 * max(1.0, float(exact))
        inside = (estimate.interval[0] - slack <= exact
                  <= estimate.interval[1] + slack)
        print(f"exact size (enumeration): {exact} "
              f"({'inside' if inside else 'OUTSIDE'} the interval)")
    return EXIT_OK


def _cmd_check(args) -> int:
    scenario = load_scenario(args.config)
    report = verify_identities(scenario, seed=args.seed, n_draws=args.draws,
                               corrupt_alpha=args.corrupt_alpha)
    for check in report.checks:
        if check.skipped:
            print(f"SKIP {check.name}: {check.detail}")
            continue
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} {check.name}: max deviation {check.max_deviation:.3e} "
              f"(tolerance {check.tolerance:g}); {check.detail}")
    return EXIT_OK if report.all_passed else EXIT_INVALID


def _cmd_gconst(args) -> int:
    scenario = load_scenario(args.config)
    constants = scenario.constants()
    print(f"forceable gradient g: {constants.forceable_gradient:.12g}")
    print(f"sigma_min: {constants.sigma_min:.12g}")
    print(f"sigma_max: {constants.sigma_max:.12g}")
    print(f"log-regret constant g^2 sigma_min / (16 sigma_max^2): "
          f"{constants.log_regret_constant:.12g}")
    if constants.lipschitz_bound is not None:
        print(f"gradient bound G: {constants.lipschitz_bound:.12g}")
        print(f"harmonic upper bound at T={scenario.horizon}: "
              f"{constants.harmonic_bound(scenario.horizon):.12g}")
    if args.json:
        payload = {"forceable_gradient": constants.forceable_gradient,
                   "sigma_min": constants.sigma_min,
                   "sigma_max": constants.sigma_max,
                   "log_regret_constant": constants.log_regret_constant,
                   "lipschitz_bound": constants.lipschitz_bound}
        print(json.dumps(payload))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regretlab",
        description="Online mixture games: run scenarios, fit regret rates, "
                    "estimate stable sets, and verify engine identities.",
        epilog=f"Run outputs land under ${OUTPUT_ROOT_ENV} (default ./runs).")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="play a scenario file and write outputs")
    p_run.add_argument("config", help="path to a flat scenario file")
    p_run.add_argument("--out-root", default=None,
                       help=f"output root (default ${OUTPUT_ROOT_ENV} or ./runs)")
    p_run.add_argument("--no-figures", action="store_true",
                       help="skip figure rendering")
    p_run.set_defaults(func=_cmd_run)

    p_rates = sub.add_parser("rates", help="fit growth models to a curve or ledger")
    p_rates.add_argument("csv", help="regret_curve.csv or a seed ledger CSV")
    p_rates.add_argument("--t-min", type=int, default=10,
                         help="smallest round included in the fit")
    p_rates.set_defaults(func=_cmd_rates)

    p_ss = sub.add_parser("stableset",
                          help="estimate a graph's maximum stable-set size")
    p_ss.add_argument("graph", help="path to a graph file ('n m' header, one "
                                    "'u v' edge per line)")
    p_ss.add_argument("--alpha", type=float, default=0.5)
    p_ss.add_argument("--T", type=int, default=500, dest="T",
                      help="number of rounds")
    p_ss.add_argument("--player", default="ftl",
                      choices=["ftl", "ftpl", "ogd", "minimax", "best_response"])
    p_ss.add_argument("--seed", type=int, default=0)
    p_ss.set_defaults(func=_cmd_stableset)

    p_check = sub.add_parser("check", help="verify engine identities on a scenario")
    p_check.add_argument("config", help="path to a flat scenario file")
    p_check.add_argument("--seed", type=int, default=0)
    p_check.add_argument("--draws", type=int, default=200,
                         help="random draws per identity")
    p_check.add_argument("--corrupt-alpha", type=float, default=None,
                         help="negative control: evaluate the closed-form "
                              "affine max at this wrong alpha")
    p_check.set_defaults(func=_cmd_check)

    p_g = sub.add_parser("gconst", help="report a scenario's rate constants")
    p_g.add_argument("config", help="path to a flat scenario file")
    p_g.add_argument("--json", action="store_true",
                     help="also print the constants as one JSON line")
    p_g.set_defaults(func=_cmd_gconst)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SolverFailureError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (GameError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
