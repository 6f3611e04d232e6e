"""Online mixture games: engines, strategies, rate fits, and benchmarks.

A player repeatedly commits a point of a convex set; an adversary answers
with a mixture over fixed environment risks (a probability vector, or a
signed affine reweighting summing to one). The package provides the game
engine with byte-exact replayable ledgers, leader-following / perturbed /
gradient players, forcing and trapping adversaries, regret-rate fitting,
a regret-driven stable-set estimator, and a scenario runner behind the
``regretlab`` command.
"""

from .config import Tolerances, output_root
from .environments import (Environment, QuadraticRisk, SampleEnvironment,
                           custom_environment, gradient_check)
from .errors import (ConfigError, DataCorruptionError, DimensionMismatchError,
                     GameError, RegionViolationError, SolverFailureError)
from .game import (RegretLedger, RoundRecord, WeightedMinimizer,
                   compensated_cumsum, ledger_to_csv, minimax_hull_vs_vertices,
                   read_ledger_csv, regret_curve, run_game, write_ledger_csv)
from .mixtures import (REGION_AFFINE, REGION_CONVEX, MixturePlay,
                       WeightedObjective, affine_polytope_max_identity,
                       affine_vertex_coefficients, convex_vertex,
                       mixture_gradient, mixture_risk)
from .optim import (RegretRateConstants, SolverReport, global_min_grid,
                    min_forceable_gradient, minimize_convex, project_simplex)
from .players import (PLAYER_KINDS, BestResponseDiagnostic, FollowTheLeader,
                      FixedMinimax, OnlineGradientDescent, PerturbedLeader)
from .adversaries import (ADVERSARY_KINDS, AffineTrapAdversary,
                          ConstantMixtureAdversary, GradientForcingAdversary,
                          HistoryAverageAdversary, ObliviousSequenceAdversary,
                          StableSetEstimate, StochasticAdversary,
                          StochasticPrior, VertexWorstCaseAdversary,
                          regression_trap_environments, run_stable_set_game,
                          stable_set_environments, stable_set_estimate,
                          trap_environments, trap_space)
from .experts import (ExpertInstance, disagreeing_expert_instance,
                      expert_round_environments, run_expert_game)
from .graphs import GraphInstance, load_graph, petersen_graph, random_graph
from .rates import (IncrementFit, ModelFit, RateFit, dyadic_increment_fit,
                    fit_rate)
from .spaces import Ball, Box, Simplex
from .scenarios import Scenario, build_scenario, load_scenario, scenario_from_text
from .runner import ScenarioResult, run_scenario, verify_identities

__version__ = "0.1.0"

__all__ = [
    "ADVERSARY_KINDS", "AffineTrapAdversary", "Ball", "BestResponseDiagnostic",
    "Box", "ConfigError", "ConstantMixtureAdversary", "DataCorruptionError",
    "DimensionMismatchError", "Environment", "ExpertInstance", "FixedMinimax",
    "FollowTheLeader", "GameError", "GradientForcingAdversary", "GraphInstance",
    "HistoryAverageAdversary", "IncrementFit", "MixturePlay", "ModelFit",
    "ObliviousSequenceAdversary", "OnlineGradientDescent", "PLAYER_KINDS",
    "PerturbedLeader", "QuadraticRisk", "RateFit", "REGION_AFFINE",
    "REGION_CONVEX", "RegionViolationError", "RegretLedger",
    "RegretRateConstants", "RoundRecord", "SampleEnvironment", "Scenario",
    "ScenarioResult", "Simplex", "SolverFailureError", "SolverReport",
    "StableSetEstimate", "StochasticAdversary", "StochasticPrior",
    "Tolerances", "VertexWorstCaseAdversary", "WeightedMinimizer",
    "WeightedObjective", "affine_polytope_max_identity",
    "affine_vertex_coefficients", "build_scenario", "compensated_cumsum",
    "convex_vertex", "custom_environment", "disagreeing_expert_instance",
    "dyadic_increment_fit", "expert_round_environments", "fit_rate",
    "gradient_check", "global_min_grid", "ledger_to_csv", "load_graph",
    "load_scenario", "min_forceable_gradient", "minimax_hull_vs_vertices",
    "minimize_convex", "mixture_gradient", "mixture_risk", "output_root",
    "petersen_graph", "project_simplex", "random_graph", "read_ledger_csv",
    "regression_trap_environments", "regret_curve", "run_expert_game",
    "run_game", "run_scenario", "run_stable_set_game", "scenario_from_text",
    "stable_set_environments", "stable_set_estimate", "trap_environments",
    "trap_space", "verify_identities", "write_ledger_csv",
]
