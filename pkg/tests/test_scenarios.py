"""Scenario config validation tests: fixtures, errors, echoes, factories."""

import os

import numpy as np
import pytest

from regretlab.config import format_flat_config, parse_flat_config
from regretlab.errors import ConfigError
from regretlab.mixtures import REGION_AFFINE, REGION_CONVEX
from regretlab.scenarios import build_scenario, load_scenario, scenario_from_text
from regretlab.spaces import Box, Simplex

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "scenarios")

MINIMAL_QUADRATIC = """
name = demo
envs.kind = quadratic
envs.count = 2
envs.dim = 1
envs.0.q = 2
envs.0.center = 1
envs.1.q = 2
envs.1.center = -1
space.kind = box
space.lo = -2
space.hi = 2
player.kind = ftl
adversary.kind = vertex_worst
horizon = 50
"""


def cfg_path(name):
    return os.path.join(SCENARIO_DIR, name)


def problem_paths(excinfo):
    return {path for path, _ in excinfo.value.problems}


# ---------------------------------------------------------------------------
# The shipped fixture files all build, with the settings they claim.

def test_fixture_files_all_build():
    for fname in sorted(os.listdir(SCENARIO_DIR)):
        if fname.endswith(".cfg"):
            scenario = load_scenario(cfg_path(fname))
            assert scenario.name == fname[: -len(".cfg")]
            assert scenario.output_dir == scenario.name


def test_interpolation_fixture():
    s = load_scenario(cfg_path("interpolation_ftl.cfg"))
    assert s.env_kind == "quadratic"
    assert s.region == REGION_CONVEX
    assert len(s.envs) == 2
    assert isinstance(s.space, Box)
    assert s.player_kind == "ftl"
    assert s.adversary_kind == "gradient_forcing"
    assert s.horizon == 10000
    assert s.lipschitz == 8.0
    assert s.seeds == [0]


def test_trap_fixtures():
    ftl = load_scenario(cfg_path("trap_ftl.cfg"))
    ogd = load_scenario(cfg_path("trap_ogd.cfg"))
    sample = load_scenario(cfg_path("trap_sample_ftl.cfg"))
    for s in (ftl, ogd, sample):
        assert s.region == REGION_AFFINE
        assert s.alpha == 0.5
        assert s.adversary_kind == "affine_trap"
        assert s.adversary_params == {"alpha": 0.5}
        assert s.horizon == 2000
        assert s.hindsight_resolution == 1e-4
        # Default trap space: box of half-width 1.05 * sqrt(1 + 3/alpha).
        assert isinstance(s.space, Box)
        assert s.space.hi[0] == pytest.approx(1.05 * np.sqrt(7.0), rel=1e-12)
    assert ftl.env_kind == "trap"
    assert sample.env_kind == "trap_sample"
    assert ogd.player_kind == "ogd"
    assert ftl.player_params["grid_resolution"] == 1e-3


def test_stable_set_fixture():
    s = load_scenario(cfg_path("stable_set_petersen.cfg"))
    assert s.env_kind == "stable_set"
    assert s.graph is not None and s.graph.n == 10 and s.graph.m == 15
    assert isinstance(s.space, Simplex) and s.space.dim == 10
    assert s.adversary_kind == "constant"
    # The reduction's signed mixture is filled in when the config omits it.
    play = s.adversary_params["play"]
    assert play.region == REGION_AFFINE
    assert min(play.coefficients) == -0.5
    # Face starts are threaded into the player so the global solve sees them.
    assert s.extra_starts is not None and len(s.extra_starts) >= s.graph.n
    assert s.player_params["extra_starts"] is s.extra_starts


def test_experts_fixture():
    s = load_scenario(cfg_path("experts_ftpl.cfg"))
    assert s.env_kind == "experts"
    assert s.player_kind == "ftpl"
    assert s.envs is None
    assert s.adversary_kind is None
    assert s.make_adversary() is None
    assert s.seeds == list(range(20))
    assert s.workers == 4
    assert s.expert_loss == "absolute"


# ---------------------------------------------------------------------------
# Defaults and typed getters.

def test_minimal_quadratic_defaults():
    s = scenario_from_text(MINIMAL_QUADRATIC)
    assert s.region == REGION_CONVEX
    assert s.seeds == [0]
    assert s.workers == 1
    assert s.figures is True
    assert s.output_dir == "demo"
    assert s.rate_t_min == 10
    assert s.alpha is None
    assert s.hindsight_resolution is None


def test_boolean_and_seed_list_parsing():
    s = scenario_from_text(MINIMAL_QUADRATIC + "figures = off\nseeds = 3, 1 2\n")
    assert s.figures is False
    assert s.seeds == [3, 1, 2]


def test_comments_and_blank_lines_ignored():
    text = "# header\n\n" + MINIMAL_QUADRATIC + "   # trailing comment line\n"
    assert scenario_from_text(text).name == "demo"


# ---------------------------------------------------------------------------
# Error collection: every offense in one raise, addressed by field path.

def test_all_problems_reported_together():
    bad = """
    envs.kind = quadratic
    envs.count = 0
    horizon = 0
    workers = 0
    player.kind = zen
    adversary.kind = nope
    bogus.key = 1
    """
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(bad)
    paths = problem_paths(excinfo)
    assert {"name", "envs.count", "space.kind", "horizon", "workers",
            "player.kind", "adversary.kind", "bogus.key"} <= paths


def test_unknown_key_rejected():
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(MINIMAL_QUADRATIC + "colour = blue\n")
    assert problem_paths(excinfo) == {"colour"}


def test_missing_env_kind_fails_fast():
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text("name = x\nhorizon = 5\n")
    assert "envs.kind" in problem_paths(excinfo)


def test_affine_region_requires_positive_alpha():
    base = "name = x\nenvs.kind = trap\nplayer.kind = ftl\n" \
           "adversary.kind = affine_trap\nhorizon = 5\n"
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(base)
    assert "alpha" in problem_paths(excinfo)
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(base + "alpha = -1\n")
    assert "alpha" in problem_paths(excinfo)


def test_region_adversary_compatibility():
    convex_only = MINIMAL_QUADRATIC.replace("adversary.kind = vertex_worst",
                                            "adversary.kind = gradient_forcing")
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(convex_only + "region = affine\nalpha = 0.5\n")
    assert "adversary.kind" in problem_paths(excinfo)

    affine_only = (
        "name = x\nenvs.kind = trap\nregion = convex\nplayer.kind = ftl\n"
        "adversary.kind = affine_trap\nhorizon = 5\n")
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(affine_only)
    assert "adversary.kind" in problem_paths(excinfo)


def test_oblivious_adversary_cannot_be_configured():
    text = MINIMAL_QUADRATIC.replace("adversary.kind = vertex_worst",
                                     "adversary.kind = oblivious")
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(text)
    assert "adversary.kind" in problem_paths(excinfo)


def test_missing_graph_file_reports_path():
    text = ("name = x\nenvs.kind = stable_set\nenvs.graph = nowhere.graph\n"
            "region = affine\nalpha = 0.5\nplayer.kind = ftl\n"
            "adversary.kind = constant\nhorizon = 5\n")
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(text, base_dir="/tmp")
    paths = problem_paths(excinfo)
    assert "envs.graph" in paths
    messages = dict(excinfo.value.problems)
    assert "nowhere.graph" in messages["envs.graph"]


def test_stable_set_space_is_derived():
    text = ("name = x\nenvs.kind = stable_set\nenvs.graph = graphs/path4.graph\n"
            "region = affine\nalpha = 0.5\nplayer.kind = ftl\n"
            "adversary.kind = constant\nhorizon = 5\nspace.kind = simplex\n")
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(text, base_dir=SCENARIO_DIR)
    assert "space.kind" in problem_paths(excinfo)


def test_quadratic_dimension_mismatch():
    text = MINIMAL_QUADRATIC.replace("space.lo = -2", "space.lo = -2;-2")
    text = text.replace("space.hi = 2", "space.hi = 2;2")
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(text)
    assert "space.kind" in problem_paths(excinfo)


def test_quadratic_rejects_bad_matrix():
    text = MINIMAL_QUADRATIC.replace("envs.0.q = 2", "envs.0.q = -2")
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(text)
    assert "envs.0.q" in problem_paths(excinfo)


def test_constant_adversary_needs_matching_lambda():
    text = MINIMAL_QUADRATIC.replace("adversary.kind = vertex_worst",
                                     "adversary.kind = constant")
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(text)
    assert "adversary.lambda" in problem_paths(excinfo)
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(text + "adversary.lambda = 1\n")
    assert "adversary.lambda" in problem_paths(excinfo)
    s = scenario_from_text(text + "adversary.lambda = 0.25;0.75\n")
    assert np.allclose(s.adversary_params["play"].coefficients, [0.25, 0.75])


def test_stochastic_adversary_rows_and_weights():
    text = MINIMAL_QUADRATIC.replace("adversary.kind = vertex_worst",
                                     "adversary.kind = stochastic")
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(text)
    assert "adversary.support.0" in problem_paths(excinfo)
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(text + "adversary.support.0 = 1;0\n"
                                  "adversary.weights = 0.5;0.5\n")
    assert "adversary.weights" in problem_paths(excinfo)
    s = scenario_from_text(text + "adversary.support.0 = 1;0\n"
                                  "adversary.support.1 = 0;1\n")
    prior = s.adversary_params["prior"]
    assert len(prior.support) == 2
    assert np.allclose(prior.weights, [0.5, 0.5])


def test_expert_scenario_key_restrictions():
    text = ("name = x\nenvs.kind = experts\nregion = affine\nalpha = 0.5\n"
            "player.kind = ogd\nplayer.initial = 0.5;0.5\n"
            "adversary.kind = constant\nhorizon = 10\n")
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(text)
    assert {"player.kind", "player.initial", "adversary.kind"} <= problem_paths(excinfo)


def test_expert_scenario_requires_affine_region():
    text = ("name = x\nenvs.kind = experts\nregion = convex\n"
            "player.kind = ftl\nhorizon = 10\n")
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(text)
    assert "region" in problem_paths(excinfo)


def test_eta_only_for_perturbed_leader():
    with pytest.raises(ConfigError) as excinfo:
        scenario_from_text(MINIMAL_QUADRATIC + "player.eta = 10\n")
    assert "player.eta" in problem_paths(excinfo)
    text = MINIMAL_QUADRATIC.replace("player.kind = ftl", "player.kind = ftpl")
    s = scenario_from_text(text + "player.eta = 10\n")
    assert s.player_params["eta"] == 10.0


def test_duplicate_and_malformed_lines():
    with pytest.raises(ConfigError) as excinfo:
        parse_flat_config("a = 1\na = 2\n")
    assert ("a", "duplicate key") in excinfo.value.problems
    with pytest.raises(ConfigError) as excinfo:
        parse_flat_config("just some words\n")
    assert "line 1" in problem_paths(excinfo)


# ---------------------------------------------------------------------------
# Echo fidelity and factory independence.

def test_echo_preserves_every_key():
    items = parse_flat_config(MINIMAL_QUADRATIC)
    s = build_scenario(items)
    assert s.echo == items
    assert parse_flat_config(format_flat_config(s.echo)) == items


def test_fixture_echo_round_trips():
    for fname in ("trap_ftl.cfg", "interpolation_ftl.cfg"):
        with open(cfg_path(fname), "r", encoding="utf-8") as fh:
            items = parse_flat_config(fh.read())
        s = load_scenario(cfg_path(fname))
        assert s.echo == items


def test_factories_return_fresh_objects():
    s = scenario_from_text(MINIMAL_QUADRATIC)
    p1, p2 = s.make_player(), s.make_player()
    a1, a2 = s.make_adversary(), s.make_adversary()
    assert p1 is not p2
    assert a1 is not a2
    assert type(p1).__name__ == "FollowTheLeader"
    assert type(a1).__name__ == "VertexWorstCaseAdversary"


def test_constants_on_interpolation_pair():
    s = load_scenario(cfg_path("interpolation_ftl.cfg"))
    consts = s.constants()
    assert consts.forceable_gradient == pytest.approx(2.0, abs=1e-6)
    assert consts.sigma_min == pytest.approx(2.0)
    assert consts.sigma_max == pytest.approx(2.0)
    assert consts.log_regret_constant == pytest.approx(0.125, abs=1e-6)
    assert consts.lipschitz_bound == 8.0


def test_constants_undefined_for_experts():
    s = load_scenario(cfg_path("experts_ftpl.cfg"))
    with pytest.raises(ConfigError):
        s.constants()


def test_random_scenarios_round_trip_through_echo():
    # Property: for random valid configs, the echo is byte-faithful and
    # rebuilding from its rendered text reproduces the scenario.
    rng = np.random.default_rng(20240817)
    players = ["ftl", "ogd", "ftpl", "minimax"]
    for case in range(120):
        dim = int(rng.integers(1, 3))
        count = int(rng.integers(1, 4))
        lines = [f"name = rand{case}", "envs.kind = quadratic",
                 f"envs.count = {count}", f"envs.dim = {dim}"]
        for i in range(count):
            diag = rng.uniform(0.5, 3.0, size=dim)
            q = np.diag(diag).ravel()
            center = rng.uniform(-1.0, 1.0, size=dim)
            lines.append(f"envs.{i}.q = " + ";".join("%.17g" % v for v in q))
            lines.append(f"envs.{i}.center = "
                         + ";".join("%.17g" % v for v in center))
        lines.append("space.kind = box")
        lines.append("space.lo = " + ";".join(["-3"] * dim))
        lines.append("space.hi = " + ";".join(["3"] * dim))
        player = players[int(rng.integers(len(players)))]
        lines.append(f"player.kind = {player}")
        adversary = ["vertex_worst", "history_average", "constant"][
            int(rng.integers(3))]
        lines.append(f"adversary.kind = {adversary}")
        if adversary == "constant":
            lam = rng.exponential(size=count)
            lam /= lam.sum()
            lines.append("adversary.lambda = "
                         + ";".join("%.17g" % v for v in lam))
        horizon = int(rng.integers(1, 200))
        lines.append(f"horizon = {horizon}")
        seeds = sorted(set(rng.integers(0, 50, size=rng.integers(1, 4)).tolist()))
        lines.append("seeds = " + " ".join(str(s) for s in seeds))
        text = "\n".join(lines) + "\n"

        s = scenario_from_text(text)
        assert s.echo == parse_flat_config(text)
        again = scenario_from_text(format_flat_config(s.echo))
        assert again.name == s.name
        assert again.horizon == s.horizon
        assert again.seeds == s.seeds
        assert again.player_kind == s.player_kind
        assert again.adversary_kind == s.adversary_kind
        assert again.space.dim == s.space.dim
        assert len(again.envs) == len(s.envs)
        assert s.make_player() is not s.make_player()
