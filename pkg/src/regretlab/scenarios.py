"""Scenario configuration: flat files -> runnable game descriptions.

A scenario file fixes the environments, the feasible set, the player, the
adversary, the horizon and the seeds. Everything is validated up front with
field-path error messages; a valid scenario hands out fresh player and
adversary instances so seeds can run independently (including in parallel).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .adversaries import (ADVERSARY_KINDS, AffineTrapAdversary,
                          ConstantMixtureAdversary, GradientForcingAdversary,
                          HistoryAverageAdversary, StochasticAdversary,
                          StochasticPrior, VertexWorstCaseAdversary,
                          regression_trap_environments, stable_set_environments,
                          stable_set_play, stable_set_starts, trap_environments,
                          trap_space)
from .config import ConfigView, Tolerances, load_flat_config, parse_flat_config
from .environments import Environment, QuadraticRisk
from .errors import ConfigError
from .graphs import GraphInstance, load_graph
from .mixtures import REGION_AFFINE, REGION_CONVEX, MixturePlay
from .optim import RegretRateConstants, min_forceable_gradient
from .players import PLAYER_KINDS
from .spaces import Ball, Box, Simplex

ENV_KINDS = ("quadratic", "trap", "trap_sample", "stable_set", "experts")
SPACE_KINDS = ("box", "ball", "simplex")

# Adversaries whose plays are probability vectors vs. signed affine mixtures.
_CONVEX_ONLY_ADVERSARIES = ("vertex_worst", "history_average", "gradient_forcing")
_AFFINE_ONLY_ADVERSARIES = ("affine_trap",)


@dataclass
class Scenario:
    """A fully validated, runnable experiment description."""

    name: str
    env_kind: str
    region: str
    alpha: float | None
    horizon: int
    seeds: list[int]
    output_dir: str
    workers: int
    figures: bool
    envs: list[Environment] | None
    space: object
    player_kind: str
    player_params: dict
    adversary_kind: str | None
    adversary_params: dict
    lipschitz: float | None
    hindsight_resolution: float | None
    rate_t_min: int
    tolerances: Tolerances = field(default_factory=Tolerances)
    graph: GraphInstance | None = None
    extra_starts: list | None = None
    expert_loss: str = "absolute"
    expert_lattice: int = 2000
    echo: dict[str, str] = field(default_factory=dict)

    def make_player(self):
        cls = PLAYER_KINDS[self.player_kind]
        return cls(**self.player_params)

    def make_adversary(self):
        if self.env_kind == "experts":
            return None
        cls = ADVERSARY_KINDS[self.adversary_kind]
        return cls(**self.adversary_params)

    def constants(self) -> RegretRateConstants:
        """Forceable-gradient and curvature constants for the scenario.

        Undefined for expert scenarios, whose environments change per round.
        """
        if self.env_kind == "experts":
            raise ConfigError([("envs.kind",
                                "rate constants are undefined for expert scenarios")])
        report = min_forceable_gradient(self.envs, self.space)
        return RegretRateConstants(
            forceable_gradient=report.value,
            sigma_min=min(e.sigma_min for e in self.envs),
            sigma_max=max(e.sigma_max for e in self.envs),
            lipschitz_bound=self._lipschitz_bound())

    def _lipschitz_bound(self) -> float | None:
        if self.lipschitz is not None:
            return self.lipschitz
        bounds = [e.lipschitz_bound for e in self.envs]
        if all(b is not None for b in bounds):
            return max(bounds)
        return None


def _space_from_config(view: ConfigView, default_kind: str | None,
                       default_dim: int) -> object | None:
    kind = view.get_str("space.kind", default=default_kind, choices=SPACE_KINDS)
    if kind is None:
        view.error("space.kind", f"expected one of {sorted(SPACE_KINDS)}")
        return None
    if kind == "box":
        lo = view.get_vector("space.lo")
        hi = view.get_vector("space.hi")
        if lo is None or hi is None:
            view.error("space.lo" if lo is None else "space.hi",
                       "box spaces need space.lo and space.hi")
            return None
        try:
            return Box(lo, hi)
        except Exception as exc:
            view.error("space.lo", str(exc))
            return None
    if kind == "ball":
        center = view.get_vector("space.center")
        radius = view.get_float("space.radius")
        if center is None or radius is None:
            view.error("space.center" if center is None else "space.radius",
                       "ball spaces need space.center and space.radius")
            return None
        try:
            return Ball(center, radius)
        except Exception as exc:
            view.error("space.center", str(exc))
            return None
    dim = view.get_int("space.dim", default=default_dim)
    if dim is None or dim < 2:
        view.error("space.dim", "simplex spaces need space.dim >= 2")
        return None
    return Simplex(dim)


def _quadratic_envs(view: ConfigView) -> tuple[list[Environment] | None, int]:
    count = view.get_int("envs.count")
    dim = view.get_int("envs.dim", default=1)
    if count is None or count < 1:
        view.error("envs.count", "quadratic scenarios need envs.count >= 1")
        return None, dim or 1
    envs = []
    for i in range(count):
        q = view.get_vector(f"envs.{i}.q")
        center = view.get_vector(f"envs.{i}.center")
        offset = view.get_float(f"envs.{i}.offset", default=0.0)
        if q is None or center is None:
            view.error(f"envs.{i}.q" if q is None else f"envs.{i}.center",
                       "each quadratic needs envs.<i>.q and envs.<i>.center")
            return None, dim
        if len(q) != dim * dim or len(center) != dim:
            view.error(f"envs.{i}.q",
                       f"expected {dim * dim} matrix entries and {dim} center "
                       f"entries, got {len(q)} and {len(center)}")
            return None, dim
        try:
            quad = QuadraticRisk(q.reshape(dim, dim), center, offset)
        except Exception as exc:
            view.error(f"envs.{i}.q", str(exc))
            return None, dim
        envs.append(quad.to_environment(env_id=i))
    return envs, dim


def _constant_play(view: ConfigView, n_envs: int, region: str,
                   alpha: float | None) -> MixturePlay | None:
    coeffs = view.get_vector("adversary.lambda")
    if coeffs is None:
        view.error("adversary.lambda",
                   "constant adversaries need adversary.lambda")
        return None
    if len(coeffs) != n_envs:
        view.error("adversary.lambda",
                   f"expected {n_envs} coefficients, got {len(coeffs)}")
        return None
    try:
        return MixturePlay(coeffs, region, alpha)
    except Exception as exc:
        view.error("adversary.lambda", str(exc))
        return None


def _stochastic_prior(view: ConfigView, n_envs: int, region: str,
                      alpha: float | None) -> StochasticPrior | None:
    rows = []
    i = 0
    while view.has(f"adversary.support.{i}"):
        coeffs = view.get_vector(f"adversary.support.{i}")
        if coeffs is None or len(coeffs) != n_envs:
            view.error(f"adversary.support.{i}",
                       f"expected {n_envs} coefficients")
            return None
        try:
            rows.append(MixturePlay(coeffs, region, alpha))
        except Exception as exc:
            view.error(f"adversary.support.{i}", str(exc))
            return None
        i += 1
    if not rows:
        view.error("adversary.support.0",
                   "stochastic adversaries need adversary.support.<i> rows")
        return None
    weights = view.get_vector("adversary.weights",
                              default=np.full(len(rows), 1.0 / len(rows)))
    if weights is None or len(weights) != len(rows):
        view.error("adversary.weights", f"expected {len(rows)} weights")
        return None
    try:
        return StochasticPrior(tuple(rows), weights)
    except Exception as exc:
        view.error("adversary.weights", str(exc))
        return None


def build_scenario(items: dict[str, str], base_dir: str = ".") -> Scenario:
    """Validate a parsed flat config and construct the scenario.

    All problems are collected and raised together as one ConfigError with
    field paths, so a bad file reports every offense in a single pass.
    """
    view = ConfigView(items)

    name = view.get_str("name")
    if name is None:
        view.error("name", "missing required key")
        name = "unnamed"
    env_kind = view.get_str("envs.kind", choices=set(ENV_KINDS))
    if env_kind is None:
        if not view.has("envs.kind"):
            view.error("envs.kind", f"missing required key; one of {sorted(ENV_KINDS)}")
        view.raise_if_problems()

    default_region = REGION_CONVEX if env_kind == "quadratic" else REGION_AFFINE
    region = view.get_str("region", default=default_region,
                          choices={REGION_CONVEX, REGION_AFFINE})
    alpha = view.get_float("alpha")
    if region == REGION_AFFINE:
        if alpha is None:
            view.error("alpha", "affine mixture regions need alpha")
        elif alpha <= 0:
            view.error("alpha", "alpha must be positive")

    horizon = view.get_int("horizon")
    if horizon is None or horizon < 1:
        view.error("horizon", "horizon must be an integer >= 1")
        horizon = 1
    seeds = view.get_int_list("seeds", default=[0])
    if not seeds or any(s < 0 for s in seeds):
        view.error("seeds", "seeds must be a nonempty list of nonnegative integers")
        seeds = [0]
    if len(set(seeds)) != len(seeds):
        view.error("seeds", "duplicate seeds")
    output_dir = view.get_str("output_dir", default=name)
    workers = view.get_int("workers", default=1)
    if workers is None or workers < 1:
        view.error("workers", "workers must be an integer >= 1")
        workers = 1
    figures = view.get_bool("figures", default=True)
    lipschitz = view.get_float("lipschitz")
    hindsight_resolution = view.get_float("hindsight_resolution")
    rate_t_min = view.get_int("rate_t_min", default=10)

    # Environments and the feasible set, per kind.
    envs: list[Environment] | None = None
    space = None
    graph = None
    extra_starts = None
    expert_loss = "absolute"
    expert_lattice = 2000

    if env_kind == "quadratic":
        envs, dim = _quadratic_envs(view)
        space = _space_from_config(view, default_kind=None, default_dim=dim)
        if space is not None and envs is not None and space.dim != dim:
            view.error("space.kind", f"space dimension {space.dim} does not match "
                                     f"environment dimension {dim}")
    elif env_kind in ("trap", "trap_sample"):
        a = alpha if alpha is not None and alpha > 0 else 0.5
        half_width = view.get_float("envs.half_width")
        builder = trap_environments if env_kind == "trap" else regression_trap_environments
        envs = builder(a, half_width)
        if any(view.has(k) for k in view.keys_with_prefix("space.")):
            space = _space_from_config(view, default_kind="box", default_dim=1)
        else:
            space = trap_space(a, half_width)
    elif env_kind == "stable_set":
        rel = view.get_str("envs.graph")
        if rel is None:
            view.error("envs.graph", "stable-set scenarios need envs.graph")
        else:
            path = rel if os.path.isabs(rel) else os.path.join(base_dir, rel)
            try:
                graph = load_graph(path)
            except Exception as exc:
                view.error("envs.graph", f"{path}: {exc}")
        if graph is not None:
            a = alpha if alpha is not None and alpha > 0 else 0.5
            envs = stable_set_environments(graph, a)
            space = Simplex(graph.n)
            extra_starts = stable_set_starts(graph)
        if view.keys_with_prefix("space."):
            view.error("space.kind", "stable-set spaces are derived from the graph")
    else:
        n_experts = view.get_int("envs.experts", default=2)
        if n_experts != 2:
            view.error("envs.experts",
                       "the built-in expert instance uses two opposing experts")
        expert_loss = view.get_str("envs.loss", default="absolute",
                                   choices={"absolute", "squared"}) or "absolute"
        expert_lattice = view.get_int("envs.lattice", default=2000)
        if expert_lattice is None or expert_lattice < 2:
            view.error("envs.lattice", "lattice must be an integer >= 2")
            expert_lattice = 2000
        space = Simplex(2)
        if region != REGION_AFFINE:
            view.error("region", "the expert reduction plays affine mixtures")

    # Player.
    player_kind = view.get_str("player.kind", choices=set(PLAYER_KINDS))
    if player_kind is None:
        if not view.has("player.kind"):
            view.error("player.kind",
                       f"missing required key; one of {sorted(PLAYER_KINDS)}")
        player_kind = "ftl"
    player_params: dict = {}
    initial = view.get_vector("player.initial")
    if initial is not None:
        player_params["initial_point"] = initial
    grid_res = view.get_float("player.grid_resolution")
    if grid_res is not None:
        player_params["grid_resolution"] = grid_res
    multistart = view.get_int("player.multistart")
    if multistart is not None:
        player_params["multistart_points"] = multistart
    eta = view.get_float("player.eta")
    if eta is not None:
        if player_kind != "ftpl":
            view.error("player.eta", "eta only applies to the perturbed leader")
        else:
            player_params["eta"] = eta
    if env_kind == "experts":
        if player_kind not in ("ftl", "ftpl"):
            view.error("player.kind",
                       "expert scenarios support ftl and ftpl players")
        for key in ("player.initial", "player.grid_resolution", "player.multistart"):
            if view.has(key):
                view.error(key, "not meaningful for the lattice-based expert runner")
    elif extra_starts is not None:
        player_params["extra_starts"] = extra_starts

    # Adversary.
    adversary_kind = None
    adversary_params: dict = {}
    if env_kind == "experts":
        if view.has("adversary.kind"):
            view.error("adversary.kind",
                       "expert scenarios fix the reduction mixture; drop this key")
    else:
        adversary_kind = view.get_str("adversary.kind", choices=set(ADVERSARY_KINDS))
        if adversary_kind is None:
            if not view.has("adversary.kind"):
                view.error("adversary.kind",
                           f"missing required key; one of {sorted(ADVERSARY_KINDS)}")
            adversary_kind = "constant"
        if adversary_kind in _CONVEX_ONLY_ADVERSARIES and region != REGION_CONVEX:
            view.error("adversary.kind",
                       f"{adversary_kind} plays probability vectors; set region = convex")
        if adversary_kind in _AFFINE_ONLY_ADVERSARIES and region != REGION_AFFINE:
            view.error("adversary.kind",
                       f"{adversary_kind} plays signed mixtures; set region = affine")
        n_envs = len(envs) if envs is not None else 0
        if adversary_kind == "affine_trap":
            adversary_params["alpha"] = alpha if alpha is not None else 0.5
        elif adversary_kind == "constant":
            if env_kind == "stable_set" and not view.has("adversary.lambda"):
                play = stable_set_play(alpha if alpha is not None else 0.5)
            else:
                play = _constant_play(view, n_envs, region, alpha)
            if play is not None:
                adversary_params["play"] = play
        elif adversary_kind == "stochastic":
            prior = _stochastic_prior(view, n_envs, region, alpha)
            if prior is not None:
                adversary_params["prior"] = prior
        elif adversary_kind == "oblivious":
            view.error("adversary.kind",
                       "oblivious sequences cannot be written in a flat config; "
                       "construct the adversary in code")

    unknown = view.unconsumed()
    for key in unknown:
        view.error(key, "unknown key")
    view.raise_if_problems()

    return Scenario(name=name, env_kind=env_kind, region=region, alpha=alpha,
                    horizon=horizon, seeds=seeds, output_dir=output_dir,
                    workers=workers, figures=figures, envs=envs, space=space,
                    player_kind=player_kind, player_params=player_params,
                    adversary_kind=adversary_kind, adversary_params=adversary_params,
                    lipschitz=lipschitz, hindsight_resolution=hindsight_resolution,
                    rate_t_min=rate_t_min, graph=graph, extra_starts=extra_starts,
                    expert_loss=expert_loss, expert_lattice=expert_lattice,
                    echo=dict(items))


def scenario_from_text(text: str, base_dir: str = ".") -> Scenario:
    return build_scenario(parse_flat_config(text), base_dir=base_dir)


def load_scenario(path: str) -> Scenario:
    return build_scenario(load_flat_config(path),
                          base_dir=os.path.dirname(os.path.abspath(path)))
