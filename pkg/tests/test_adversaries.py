"""Adversary tests: forcing branches, trap arithmetic, and the estimator."""

import math

import numpy as np
import pytest

from regretlab.adversaries import (AffineTrapAdversary, ConstantMixtureAdversary,
                                   GradientForcingAdversary, HistoryAverageAdversary,
                                   ObliviousSequenceAdversary, StochasticAdversary,
                                   StochasticPrior, VertexWorstCaseAdversary,
                                   average_history_play, regression_trap_environments,
                                   regression_trap_samples, run_stable_set_game,
                                   stable_set_environments, stable_set_estimate,
                                   stable_set_play, stable_set_quadratic,
                                   stable_set_starts, trap_environments,
                                   trap_half_width, trap_space, vertex_worst_case)
from regretlab.config import Tolerances
from regretlab.environments import QuadraticRisk
from regretlab.errors import GameError
from regretlab.game import RegretLedger, RoundRecord, WeightedMinimizer, run_game
from regretlab.graphs import (complete_graph, cycle_graph, empty_graph, path_graph,
                              petersen_graph, random_graph)
from regretlab.mixtures import MixturePlay, convex_vertex, mixture_risk
from regretlab.optim import RegretRateConstants, global_min_grid
from regretlab.players import FixedMinimax, FollowTheLeader, OnlineGradientDescent
from regretlab.spaces import Box, Simplex


def interpolation_pair():
    e0 = QuadraticRisk(q=[[2.0]], center=[1.0]).to_environment(0, lipschitz_bound=8.0)
    e1 = QuadraticRisk(q=[[2.0]], center=[-1.0]).to_environment(1, lipschitz_bound=8.0)
    return [e0, e1], Box(lo=[-2.0], hi=[2.0])


# ---------------------------------------------------------------------------
# Vertex and averaging plays.

def test_vertex_worst_case_picks_largest_risk_with_low_index_ties():
    envs, _ = interpolation_pair()
    np.testing.assert_array_equal(vertex_worst_case(np.array([0.0]), envs).coefficients,
                                  [1.0, 0.0])
    np.testing.assert_array_equal(vertex_worst_case(np.array([0.5]), envs).coefficients,
                                  [0.0, 1.0])
    single = [envs[0]]
    np.testing.assert_array_equal(vertex_worst_case(np.array([0.0]), single).coefficients,
                                  [1.0])


def test_average_history_play_known_cases():
    a, b = convex_vertex(2, 0), convex_vertex(2, 1)
    np.testing.assert_allclose(average_history_play([a, b]).coefficients, [0.5, 0.5])
    np.testing.assert_allclose(average_history_play([a]).coefficients, [1.0, 0.0])
    half = MixturePlay(np.array([0.5, 0.5]), "convex")
    np.testing.assert_allclose(average_history_play([half] * 3).coefficients, [0.5, 0.5])
    with pytest.raises(GameError):
        average_history_play([])


def test_history_average_has_zero_gradient_at_previous_leader():
    # The averaged mixture's gradient must vanish at the oracle minimizer of
    # the history it averages, on random quadratic histories.
    rng = np.random.default_rng(0)
    cases = 0
    for _ in range(25):
        d = int(rng.integers(1, 3))
        envs = []
        for i in range(2):
            a = rng.normal(size=(d, d))
            envs.append(QuadraticRisk(q=a @ a.T + np.eye(d),
                                      center=rng.uniform(-1, 1, d)).to_environment(i))
        space = Box(lo=-3.0 * np.ones(d), hi=3.0 * np.ones(d))
        solver = WeightedMinimizer(envs, space)
        history = []
        for _ in range(int(rng.integers(1, 6))):
            history.append(MixturePlay(rng.dirichlet(np.ones(2)), "convex"))
        leader = solver.solve(np.sum([h.coefficients for h in history], axis=0)).argmin
        avg = average_history_play(history)
        grad = sum(c * np.asarray(e.gradient(leader), dtype=float)
                   for c, e in zip(avg.coefficients, envs))
        assert np.linalg.norm(grad) <= 1e-8
        cases += 1
    assert cases >= 25


def test_zero_gradient_property_many_histories():
    # Same property exercised as a bulk sweep: one environment pair, one
    # hundred random histories of varying length.
    envs, space = interpolation_pair()
    solver = WeightedMinimizer(envs, space)
    rng = np.random.default_rng(1)
    for _ in range(100):
        n = int(rng.integers(1, 10))
        history = [MixturePlay(rng.dirichlet(np.ones(2)), "convex") for _ in range(n)]
        leader = solver.solve(np.sum([h.coefficients for h in history], axis=0)).argmin
        avg = average_history_play(history)
        grad = sum(c * np.asarray(e.gradient(leader), dtype=float)
                   for c, e in zip(avg.coefficients, envs))
        assert np.linalg.norm(grad) <= 1e-8


# ---------------------------------------------------------------------------
# Gradient-forcing branches.

def make_forcing(envs, space, horizon=10):
    adv = GradientForcingAdversary()
    adv.reset(envs, space, np.random.default_rng(0), horizon, Tolerances())
    return adv


def test_forcing_round_one_plays_worst_vertex():
    envs, space = interpolation_pair()
    adv = make_forcing(envs, space)
    play = adv.choose(1, np.array([0.5]))
    np.testing.assert_array_equal(play.coefficients, [0.0, 1.0])
    assert adv.case_counts["vertex_round_one"] == 1


def test_forcing_near_branch_picks_max_gradient_vertex():
    envs, space = interpolation_pair()
    adv = make_forcing(envs, space)
    half = MixturePlay(np.array([0.5, 0.5]), "convex")
    adv.observe(1, np.array([0.0]), half)
    # Leader of {(0.5,0.5)} is 0; committing exactly there is inside the
    # closeness threshold, and the gradient norms tie at 2 -> lowest index.
    play = adv.choose(2, np.array([0.0]))
    np.testing.assert_array_equal(play.coefficients, [1.0, 0.0])
    assert adv.case_counts["near_force"] == 1


def test_forcing_far_branch_plays_history_average():
    envs, space = interpolation_pair()
    adv = make_forcing(envs, space)
    adv.observe(1, np.array([0.0]), convex_vertex(2, 0))
    adv.observe(2, np.array([0.0]), convex_vertex(2, 1))
    play = adv.choose(3, np.array([1.5]))
    np.testing.assert_allclose(play.coefficients, [0.5, 0.5])
    assert adv.case_counts["far_average"] == 1


def test_forcing_threshold_formula():
    envs, space = interpolation_pair()
    adv = make_forcing(envs, space)
    # g = 2 and sigma_max = 2 on this pair.
    assert adv.constants.forceable_gradient == pytest.approx(2.0, abs=1e-9)
    assert adv.constants.sigma_max == 2.0
    # Just outside g^2/(8 t sigma_max^2) at t=2 -> far branch.
    adv.observe(1, np.array([0.0]), MixturePlay(np.array([0.5, 0.5]), "convex"))
    threshold = 4.0 / (8.0 * 2 * 4.0)
    adv.choose(2, np.array([math.sqrt(threshold) + 1e-9]))
    assert adv.case_counts["far_average"] == 1
    adv.choose(2, np.array([math.sqrt(threshold) - 1e-9]))
    assert adv.case_counts["near_force"] == 1


def test_forcing_drives_log_regret_above_constant():
    envs, space = interpolation_pair()
    horizon = 1000
    ledger = run_game(envs, space, FollowTheLeader(), GradientForcingAdversary(),
                      horizon=horizon, seed=0)
    constants = RegretRateConstants(forceable_gradient=2.0, sigma_min=2.0,
                                    sigma_max=2.0, lipschitz_bound=8.0)
    assert constants.log_regret_constant == pytest.approx(0.125)
    assert ledger.regret >= 0.125 * math.log(horizon)
    assert ledger.regret <= constants.harmonic_bound(horizon)


# ---------------------------------------------------------------------------
# Affine trap.

def test_trap_play_switches_at_unit_distance():
    adv = AffineTrapAdversary(alpha=0.5)
    near = adv.choose(1, np.array([0.5]))
    np.testing.assert_array_equal(near.coefficients, [1.5, -0.5])
    assert near.region == "affine"
    far = adv.choose(2, np.array([1.5]))
    np.testing.assert_array_equal(far.coefficients, [1.0, 0.0])
    boundary = adv.choose(3, np.array([1.0]))
    np.testing.assert_array_equal(boundary.coefficients, [1.0, 0.0])


def test_trap_min_coefficient_is_exactly_minus_alpha():
    for alpha in [0.25, 0.5, 1.0, 2.0]:
        adv = AffineTrapAdversary(alpha=alpha)
        play = adv.choose(1, np.array([0.0]))
        assert float(np.min(play.coefficients)) == -alpha
        assert play.alpha == alpha


def test_trap_rejects_nonpositive_alpha():
    with pytest.raises(ValueError):
        AffineTrapAdversary(alpha=0.0)


def test_trap_realized_losses_match_hand_arithmetic():
    envs = trap_environments(alpha=0.5)
    adv = AffineTrapAdversary(alpha=0.5)
    loss_near = mixture_risk(np.array([0.5]), adv.choose(1, np.array([0.5])), envs)
    assert loss_near == pytest.approx(0.21875, abs=1e-12)
    loss_far = mixture_risk(np.array([1.5]), adv.choose(2, np.array([1.5])), envs)
    assert loss_far == pytest.approx(2.25, abs=1e-12)
    loss_origin = mixture_risk(np.array([0.0]), adv.choose(3, np.array([0.0])), envs)
    assert loss_origin == 0.0


def test_trap_round_losses_nonnegative_with_floors():
    # Near plays pay >= 0, far plays pay >= 1, for any committed point.
    envs = trap_environments(alpha=0.5)
    adv = AffineTrapAdversary(alpha=0.5)
    rng = np.random.default_rng(2)
    width = trap_half_width(0.5)
    for _ in range(200):
        beta = np.array([rng.uniform(-width, width)])
        loss = mixture_risk(beta, adv.choose(1, beta), envs)
        if abs(beta[0]) < 1.0:
            assert loss >= -1e-12
        else:
            assert loss >= 1.0 - 1e-12


def test_trap_hindsight_minimizer_sits_at_known_offset():
    alpha = 0.5
    envs = trap_environments(alpha)
    space = trap_space(alpha)
    ledger = run_game(envs, space, FollowTheLeader(grid_resolution=1e-3),
                      AffineTrapAdversary(alpha), horizon=500,
                      expected_region="affine", hindsight_resolution=1e-4, seed=0)
    # Summed coefficients (c1, c2) with c2 < 0 make the quartic term point
    # down, so the best fixed parameter escapes to the box boundary (the
    # interior stationary point is a local maximum).
    totals = ledger.coefficient_matrix().sum(axis=0)
    c1, c2 = totals
    assert c2 < 0.0
    width = float(space.hi[0])
    argmin = abs(float(ledger.hindsight_argmin[0]))
    assert argmin == pytest.approx(width, abs=1e-9)
    # Independent lattice oracle for the hindsight value.
    pts = space.grid(1e-4)
    vals = c1 * envs[0].risk_batch(pts) + c2 * envs[1].risk_batch(pts)
    assert ledger.hindsight_value <= float(np.min(vals)) + 1e-9


@pytest.mark.parametrize("player_cls", [FollowTheLeader, OnlineGradientDescent,
                                        FixedMinimax])
@pytest.mark.parametrize("horizon", [500, 2000])
def test_trap_forces_linear_regret_on_deterministic_players(player_cls, horizon):
    alpha = 0.5
    envs = trap_environments(alpha)
    space = trap_space(alpha)
    player = player_cls(grid_resolution=1e-3)
    ledger = run_game(envs, space, player, AffineTrapAdversary(alpha),
                      horizon=horizon, expected_region="affine",
                      hindsight_resolution=1e-4, seed=0)
    assert ledger.regret >= horizon / 2.0 - 1e-6


# ---------------------------------------------------------------------------
# Sampled trap realization.

def test_sampled_trap_matches_analytic_risks():
    rng = np.random.default_rng(3)
    for alpha in [0.25, 0.5, 1.0]:
        analytic = trap_environments(alpha)
        sampled = regression_trap_environments(alpha)
        for _ in range(100):
            beta = np.array([rng.uniform(-2.0, 2.0)])
            for a, s in zip(analytic, sampled):
                assert abs(a.risk(beta) - s.risk(beta)) <= 1e-12


def test_sampled_trap_atom_probabilities():
    first, second = regression_trap_samples(0.5)
    assert [p for _, _, p in first.atoms] == [1.0]
    np.testing.assert_allclose([p for _, _, p in second.atoms], [0.5, 0.5])
    s = math.sqrt((2.0 * 0.5 + 1.0) / (2.0 * 0.5))
    assert second.atoms[0][0][1] == pytest.approx(s)
    assert second.atoms[1][0][0] == pytest.approx(s)


def test_sampled_trap_game_reproduces_analytic_transcript():
    # Same seed, same player, same adversary: per-round losses agree to
    # 1e-10 between the analytic pair and its sampled realization.
    alpha = 0.5
    a_led = run_game(trap_environments(alpha), trap_space(alpha),
                     FollowTheLeader(grid_resolution=1e-3), AffineTrapAdversary(alpha),
                     horizon=500, expected_region="affine",
                     hindsight_resolution=1e-4, seed=0)
    s_led = run_game(regression_trap_environments(alpha), trap_space(alpha),
                     FollowTheLeader(grid_resolution=1e-3), AffineTrapAdversary(alpha),
                     horizon=500, expected_region="affine",
                     hindsight_resolution=1e-4, seed=0)
    assert np.max(np.abs(a_led.losses - s_led.losses)) <= 1e-10


# ---------------------------------------------------------------------------
# Stable-set construction and estimator.

def fixture_graphs():
    return [path_graph(4), cycle_graph(5), complete_graph(5), empty_graph(6),
            random_graph(8, 0.4, seed=7), petersen_graph()]


def test_stable_set_combination_exposes_the_graph_quadratic():
    rng = np.random.default_rng(4)
    for graph in fixture_graphs():
        envs = stable_set_environments(graph, alpha=0.5)
        play = stable_set_play(0.5)
        value, _, _ = stable_set_quadratic(graph)
        for _ in range(100):
            beta = Simplex(graph.n).random_point(rng)
            assert abs(mixture_risk(beta, play, envs) - value(beta)) <= 1e-12


def test_stable_set_hand_values():
    value, _, _ = stable_set_quadratic(path_graph(3))
    assert value(np.array([0.5, 0.0, 0.5])) == pytest.approx(0.5, abs=1e-15)
    k3_value, _, _ = stable_set_quadratic(complete_graph(3))
    rng = np.random.default_rng(5)
    for _ in range(20):
        beta = Simplex(3).random_point(rng)
        assert k3_value(beta) == pytest.approx(1.0, abs=1e-12)


def test_motzkin_minimum_equals_inverse_stable_set_size():
    # Brute-force enumeration gives gamma; the simplex minimum of the
    # quadratic must land on 1/gamma within 1e-4 for every small graph.
    for graph in fixture_graphs():
        if graph.n > 8:
            continue
        gamma = graph.max_stable_set_size()
        value, grad, value_batch = stable_set_quadratic(graph)
        report = global_min_grid(value, Simplex(graph.n), mode="multistart",
                                 gradient=grad, value_batch=value_batch,
                                 extra_starts=stable_set_starts(graph))
        assert abs(report.value - 1.0 / gamma) <= 1e-4, graph.n


def test_estimator_on_uniform_play_over_empty_graph():
    graph = empty_graph(4)
    envs = stable_set_environments(graph, alpha=0.5)
    play = stable_set_play(0.5)
    uniform = np.full(4, 0.25)
    ledger = RegretLedger()
    for t in range(1, 11):
        ledger.append(RoundRecord(t=t, beta=uniform, lam=play,
                                  loss=mixture_risk(uniform, play, envs)))
    ledger.hindsight_value = ledger.cumulative_loss
    est = stable_set_estimate(ledger, 4)
    assert est.gamma_hat == pytest.approx(4.0, abs=1e-9)


def test_estimator_on_complete_graph_returns_one():
    graph = complete_graph(3)
    ledger, est = run_stable_set_game(graph, alpha=0.5, horizon=50, seed=0)
    assert est.gamma_hat == pytest.approx(1.0, abs=1e-9)
    assert est.certified


def test_estimates_land_in_the_certified_band():
    for graph in fixture_graphs():
        gamma = graph.max_stable_set_size()
        ledger, est = run_stable_set_game(graph, alpha=0.5, horizon=300, seed=0)
        slack = 1e-9 * max(1.0, gamma)
        assert gamma / 2.0 - slack <= est.gamma_hat <= gamma + slack, graph.n
        assert est.certified
        assert est.interval[0] == est.gamma_hat
        assert est.interval[1] == pytest.approx(2.0 * est.gamma_hat)
        assert gamma <= est.interval[1] + slack


def test_estimator_rejects_corrupt_cumulative_loss():
    from regretlab.errors import DataCorruptionError
    ledger = RegretLedger()
    ledger.append(RoundRecord(t=1, beta=np.array([1.0]),
                              lam=convex_vertex(1, 0), loss=-1.0))
    ledger.hindsight_value = 0.0
    with pytest.raises(DataCorruptionError):
        stable_set_estimate(ledger, 4)


# ---------------------------------------------------------------------------
# Oblivious and stochastic adversaries.

def test_oblivious_sequence_must_cover_the_horizon():
    envs, space = interpolation_pair()
    adv = ObliviousSequenceAdversary([convex_vertex(2, 0)] * 5)
    with pytest.raises(GameError):
        adv.reset(envs, space, np.random.default_rng(0), 10, Tolerances())


def test_stochastic_point_mass_is_constant():
    envs, space = interpolation_pair()
    prior = StochasticPrior(support=(convex_vertex(2, 1),), weights=np.array([1.0]))
    adv = StochasticAdversary(prior)
    adv.reset(envs, space, np.random.default_rng(0), 20, Tolerances())
    for t in range(1, 21):
        np.testing.assert_array_equal(adv.choose(t, np.zeros(1)).coefficients,
                                      [0.0, 1.0])


def test_stochastic_uniform_frequencies_within_three_sigma():
    envs, space = interpolation_pair()
    n = 10_000
    prior = StochasticPrior(support=(convex_vertex(2, 0), convex_vertex(2, 1)),
                            weights=np.array([0.5, 0.5]))
    adv = StochasticAdversary(prior)
    adv.reset(envs, space, np.random.default_rng(0), n, Tolerances())
    firsts = sum(adv.choose(t, np.zeros(1)).coefficients[0] for t in range(1, n + 1))
    sigma = math.sqrt(n * 0.25)
    assert abs(firsts - n / 2.0) <= 3.0 * sigma


def test_stochastic_fixed_seed_reproduces_the_draw_sequence():
    envs, space = interpolation_pair()
    prior = StochasticPrior(support=(convex_vertex(2, 0), convex_vertex(2, 1)),
                            weights=np.array([0.3, 0.7]))
    seqs = []
    for _ in range(2):
        adv = StochasticAdversary(prior)
        adv.reset(envs, space, np.random.default_rng(42), 50, Tolerances())
        seqs.append([tuple(adv.choose(t, np.zeros(1)).coefficients)
                     for t in range(1, 51)])
    assert seqs[0] == seqs[1]
