"""Experiment configuration, round orchestration, seeds and sweeps.

A config is a YAML file with five sections::

    graph:          generator (erdos_renyi | random_regular | edge_list), n,
                    p or mean_degree, d, path, seed
    options:        etas (list) or m (etas then default to 0.9 .. 0.5)
    protocol:       epsilon (number or "infinity"), beta, mu
    dissemination:  sigma, h_override, g_choice (log2 | sqrt | number),
                    alpha, slot_cap, gap, walk_multiplier, dense_threshold
    run:            rounds, seeds, output, per_agent_quality

Unknown keys are rejected.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import logging
import math
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from . import rng as _rng
from .dissemination import DisseminationParams, launch_tokens, run_round
from .environment import OptionSet, draw_qualities
from .errors import ConfigError
from .graph import (
    DENSE_THRESHOLD,
    DEFAULT_WALK_MULTIPLIER,
    Graph,
    TransitionModel,
    generate_erdos_renyi,
    generate_random_regular,
    mixing_model,
    read_edge_list,
)
from .metrics import (
    RoundMetrics,
    RunTrace,
    convergence_check,
    popularity,
    regret_update,
    write_aggregate_csv,
    write_trace_csv,
)
from .protocol import (
    ProtocolParams,
    adopt_all,
    choices_to_vectors,
    estimate_all,
    perturb_all,
    round_robin,
    sample_options,
)

log = logging.getLogger(__name__)

SWEEP_AXES = ("n", "g_choice", "m", "epsilon")

_SCHEMA = {
    "graph": {"generator", "n", "p", "mean_degree", "d", "path", "seed"},
    "options": {"etas", "m"},
    "protocol": {"epsilon", "beta", "mu"},
    "dissemination": {
        "sigma",
        "h_override",
        "g_choice",
        "alpha",
        "slot_cap",
        "gap",
        "walk_multiplier",
        "dense_threshold",
    },
    "run": {"rounds", "seeds", "output", "per_agent_quality"},
}


@dataclass
class GraphSpec:
    generator: str = "random_regular"
    n: int = 256
    p: float | None = None
    mean_degree: float | None = None
    d: int | None = 8
    path: str | None = None
    seed: int | None = None  # fixed topology seed; None derives it from the run seed


@dataclass
class ExperimentConfig:
    graph: GraphSpec = field(default_factory=GraphSpec)
    etas: tuple[float, ...] = (0.9, 0.8, 0.7, 0.6, 0.5)
    epsilon: float = math.log(2)
    beta: float = 0.52
    mu: float = 0.001
    sigma: float = 15.0
    h_override: float | None = None
    g_choice: str | float = "log2"
    alpha: float | None = None
    slot_cap: int | None = None
    gap: float | None = None
    walk_multiplier: float = DEFAULT_WALK_MULTIPLIER
    dense_threshold: int = DENSE_THRESHOLD
    rounds: int = 400
    seeds: tuple[int, ...] = tuple(range(10))
    output: str | None = None
    per_agent_quality: bool = False

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def m(self) -> int:
        return len(self.etas)

    @property
    def protocol(self) -> ProtocolParams:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return ProtocolParams(self.epsilon, self.beta, self.mu)

    def g_value(self, n: int | None = None) -> float:
        n = self.n if n is None else n
        if self.g_choice == "log2":
            return math.log(n) ** 2
        if self.g_choice == "sqrt":
            return math.sqrt(n)
        return float(self.g_choice)

    @property
    def h(self) -> float:
        if self.h_override is not None:
            return float(self.h_override)
        return DisseminationParams.theoretical_h(self.sigma, self.beta)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["etas"] = list(self.etas)
        d["seeds"] = list(self.seeds)
        if math.isinf(self.epsilon):
            d["epsilon"] = "infinity"
        return d

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(copy.deepcopy(self), **changes)


def _parse_epsilon(value) -> float:
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "∞"):
            return math.inf
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"epsilon must be a number or 'infinity', got {value!r}") from None
    return float(value)


def _parse_g(value):
    if isinstance(value, str) and value in ("log2", "sqrt"):
        return value
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"g_choice must be 'log2', 'sqrt' or a number, got {value!r}") from None


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of sections")
    unknown = set(raw) - set(_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for section, keys in _SCHEMA.items():
        body = raw.get(section) or {}
        if not isinstance(body, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        bad = set(body) - keys
        if bad:
            raise ConfigError(f"unknown keys in {section!r}: {sorted(bad)}")

    g = dict(raw.get("graph") or {})
    graph = GraphSpec(**g)
    if graph.generator not in ("erdos_renyi", "random_regular", "edge_list"):
        raise ConfigError(f"unknown graph generator {graph.generator!r}")
    if graph.generator == "edge_list":
        if not graph.path:
            raise ConfigError("edge_list graphs need a path")
        if "n" not in g:
            graph.n = read_edge_list(graph.path).n
    if graph.generator == "erdos_renyi" and graph.p is None and graph.mean_degree is None:
        raise ConfigError("erdos_renyi graphs need p or mean_degree")

    opts = raw.get("options") or {}
    if "etas" in opts:
        etas = tuple(float(e) for e in opts["etas"])
        if "m" in opts and int(opts["m"]) != len(etas):
            raise ConfigError(f"m = {opts['m']} disagrees with {len(etas)} etas")
    else:
        etas = OptionSet.linear(int(opts.get("m", 5))).etas

    kw: dict[str, Any] = {"graph": graph, "etas": etas}
    proto = raw.get("protocol") or {}
    if "epsilon" in proto:
        kw["epsilon"] = _parse_epsilon(proto["epsilon"])
    for key in ("beta", "mu"):
        if key in proto:
            kw[key] = float(proto[key])
    dis = raw.get("dissemination") or {}
    for key in ("sigma", "h_override", "alpha", "gap", "walk_multiplier"):
        if dis.get(key) is not None:
            kw[key] = float(dis[key])
    for key in ("slot_cap", "dense_threshold"):
        if dis.get(key) is not None:
            kw[key] = int(dis[key])
    if "g_choice" in dis:
        kw["g_choice"] = _parse_g(dis["g_choice"])
    run = raw.get("run") or {}
    if "rounds" in run:
        kw["rounds"] = int(run["rounds"])
    if "seeds" in run:
        kw["seeds"] = tuple(int(s) for s in run["seeds"])
    if "output" in run:
        kw["output"] = run["output"]
    if "per_agent_quality" in run:
        kw["per_agent_quality"] = bool(run["per_agent_quality"])
    cfg = ExperimentConfig(**kw)
    if cfg.rounds < 0:
        raise ConfigError("rounds must be non-negative")
    cfg.protocol  # range checks
    return cfg


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    raw = raw or {}
    gpath = (raw.get("graph") or {}).get("path")
    if gpath and not os.path.isabs(gpath):
        raw["graph"]["path"] = str(Path(path).parent / gpath)
    return config_from_dict(raw)


def check_conditions(cfg: ExperimentConfig) -> dict:
    """Evaluate the theoretical parameter conditions; never raises."""
    delta = cfg.protocol.delta
    n, g = cfg.n, cfg.g_value()
    conditions = {
        "sigma_at_least_11": cfg.sigma >= 11,
        "six_mu_le_delta_sq": 6 * cfg.mu <= delta**2,
        "ln_n_lt_g_lt_n": math.log(n) < g < n,
        "beta_in_half_to_e_over_e_plus_1": 0.5 < cfg.beta < math.e / (math.e + 1),
        "theoretical_h": cfg.h_override is None,
    }
    messages = {
        "sigma_at_least_11": f"sigma = {cfg.sigma} < 11",
        "six_mu_le_delta_sq": f"6*mu = {6 * cfg.mu:.4g} > delta^2 = {delta**2:.4g}",
        "ln_n_lt_g_lt_n": f"g(N) = {g:.4g} outside (ln N, N) = ({math.log(n):.4g}, {n})",
        "beta_in_half_to_e_over_e_plus_1": f"beta = {cfg.beta} outside (1/2, e/(e+1))",
        "theoretical_h": (
            f"h overridden to {cfg.h_override} (theoretical h = "
            f"{DisseminationParams.theoretical_h(cfg.sigma, cfg.beta):.4g}); "
            "outside theoretical constants"
        ),
    }
    warns = [messages[k] for k, ok in conditions.items() if not ok]
    return {
        "conditions": conditions,
        "warnings": warns,
        "all_hold": all(conditions.values()),
        "delta": delta,
        "six_delta": 6 * delta,
        "h": cfg.h,
        "g_of_n": g,
        "cap": math.floor(cfg.h * g + 1e-9),
    }


def build_topology(cfg: ExperimentConfig, seed: int) -> tuple[Graph, TransitionModel]:
    gs = cfg.graph
    gseed = gs.seed if gs.seed is not None else seed
    if gs.generator == "erdos_renyi":
        p = gs.p if gs.p is not None else gs.mean_degree / (gs.n - 1)
        g = generate_erdos_renyi(gs.n, min(1.0, p), gseed)
    elif gs.generator == "random_regular":
        g = generate_random_regular(gs.n, gs.d, gseed)
    else:
        g = read_edge_list(gs.path, gs.n)
    tm = mixing_model(
        g,
        alpha=cfg.alpha,
        gap=cfg.gap,
        dense_threshold=cfg.dense_threshold,
        walk_multiplier=cfg.walk_multiplier,
    )
    return g, tm


def simulate(
    cfg: ExperimentConfig,
    seed: int,
    topology: tuple[Graph, TransitionModel] | None = None,
) -> RunTrace:
    """Run ``cfg.rounds`` rounds for one seed and return the trace."""
    g, tm = topology if topology is not None else build_topology(cfg, seed)
    params = cfg.protocol
    opts = OptionSet(cfg.etas)
    m, n = opts.m, g.n
    with warnings.catch_warnings():
        # condition violations are reported once, through check_conditions
        warnings.simplefilter("ignore")
        dparams = DisseminationParams(
            h=cfg.h, g_of_n=cfg.g_value(n), walk_len=tm.walk_length, sigma=cfg.sigma, slot_cap=cfg.slot_cap
        )

    choices = round_robin(n, m)
    pop = popularity(choices, m)
    trace = RunTrace(
        config=cfg.to_dict(), eta1=opts.best, epsilon=cfg.epsilon, q0=pop.q, seed=seed
    )
    for r in range(1, cfg.rounds + 1):
        # Stage 1: perturb last round's adoptions
        active, bits = perturb_all(
            choices_to_vectors(choices, m), params, _rng.stream(seed, _rng.PERTURB, r)
        )
        # Stage 2: disseminate
        state = launch_tokens(n, np.flatnonzero(active), bits, dparams)
        res = run_round(state, tm, _rng.stream(seed, _rng.DISSEMINATE, r))
        # Stage 3: estimate, normalize, sample
        _, q_hat = estimate_all(res.counts, res.v, params)
        candidates = sample_options(q_hat, params, _rng.stream(seed, _rng.SAMPLE, r))
        # Stage 4: adopt under this round's quality signal
        draw = draw_qualities(opts, r, seed, n if cfg.per_agent_quality else None)
        q_prev = pop.q
        choices = adopt_all(candidates, draw.phi, params, _rng.stream(seed, _rng.ADOPT, r))
        pop = popularity(choices, m)
        metrics = RoundMetrics(
            round=r,
            q=pop.q,
            d_j=pop.counts,
            d_total=pop.total,
            s_j=np.bincount(candidates, minlength=m),
            phi=np.asarray(draw.phi),
            slots=res.slots,
            messages=res.messages,
            max_edge_messages=res.max_edge_messages,
            truncated=res.truncated,
            empty=pop.empty,
        )
        regret_update(trace, metrics, q_prev, draw.phi)
    return trace


@dataclass
class ExperimentResult:
    traces: list[RunTrace]
    manifest: dict

    @property
    def mean_running_regret(self) -> np.ndarray:
        return np.mean([t.running_regret for t in self.traces], axis=0)


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def run_experiment(
    cfg: ExperimentConfig,
    seeds: Sequence[int] | None = None,
    out: str | os.PathLike | None = None,
) -> ExperimentResult:
    """Run every seed, then write per-seed CSVs, an aggregate CSV and a manifest.

    Nothing is written when neither ``out`` nor ``cfg.output`` is set.
    """
    seeds = tuple(cfg.seeds if seeds is None else seeds)
    cfg = cfg.replace(seeds=seeds)
    out = out if out is not None else cfg.output
    report = check_conditions(cfg)
    for w in report["warnings"]:
        log.warning(w)

    manifest = {
        "config": cfg.to_dict(),
        "config_hash": config_hash(cfg),
        "seeds": list(seeds),
        "warnings": report["warnings"],
        "conditions": report["conditions"],
        "theoretical_conditions_hold": report["all_hold"],
        "outside_theoretical_constants": cfg.h_override is not None,
        "delta": report["delta"],
        "six_delta": report["six_delta"],
        "h": report["h"],
        "g_of_n": report["g_of_n"],
        "cap": report["cap"],
        "total_privacy_loss": cfg.rounds * cfg.epsilon if cfg.rounds else 0.0,
        "complete": False,
        "runs": [],
    }
    if math.isinf(cfg.epsilon) and cfg.rounds:
        manifest["total_privacy_loss"] = "infinity"
    out_dir = Path(out) if out is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    traces = []
    try:
        for seed in seeds:
            g, tm = build_topology(cfg, seed)
            trace = simulate(cfg, seed, (g, tm))
            traces.append(trace)
            converged, plateau = convergence_check(trace, window=max(2, min(50, cfg.rounds)), tol=0.01)
            entry = {
                "seed": seed,
                "n": g.n,
                "edges": g.num_edges,
                "gap": tm.gap,
                "walk_length": tm.walk_length,
                "truncated_rounds": [rm.round for rm in trace.rounds if rm.truncated],
                "converged": converged if cfg.rounds else False,
                "plateau": None if math.isnan(plateau) else plateau,
                "final_running_regret": float(trace.running_regret[-1]) if cfg.rounds else None,
            }
            if out_dir is not None:
                name = f"trace_seed{seed}.csv"
                write_trace_csv(trace, out_dir / name)
                entry["file"] = name
            manifest["runs"].append(entry)
        if out_dir is not None and traces:
            write_aggregate_csv(traces, out_dir / "aggregate.csv")
            manifest["aggregate_file"] = "aggregate.csv"
        manifest["complete"] = True
    finally:
        if out_dir is not None:
            with open(out_dir / "manifest.json", "w") as fh:
                json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
                fh.write("\n")
    return ExperimentResult(traces=traces, manifest=manifest)


def _apply_axis(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "n":
        return cfg.replace(graph=dataclasses.replace(cfg.graph, n=int(value)))
    if axis == "g_choice":
        return cfg.replace(g_choice=_parse_g(value))
    if axis == "m":
        return cfg.replace(etas=OptionSet.linear(int(value)).etas)
    if axis == "epsilon":
        return cfg.replace(epsilon=_parse_epsilon(value))
    raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")


def run_sweep(
    base: ExperimentConfig,
    axis: str,
    values: Sequence,
    out: str | os.PathLike | None = None,
) -> dict:
    """Run one experiment per value on shared seeds.

    Returns ``{value: ExperimentResult}`` and, with an output directory, writes
    one sub-directory per value plus ``comparison.csv`` in long format
    (value, round, mean and std of running regret).
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
    out = out if out is not None else base.output
    results = {}
    for value in values:
        cfg = _apply_axis(base, axis, value)
        sub = None if out is None else Path(out) / f"{axis}={value}"
        results[value] = run_experiment(cfg, out=sub)
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        with open(Path(out) / "comparison.csv", "w") as fh:
            fh.write("value,round,running_regret_mean,running_regret_std\n")
            for value, res in results.items():
                if not res.traces or not res.traces[0].rounds:
                    continue
                reg = np.array([t.running_regret for t in res.traces])
                for k in range(reg.shape[1]):
                    fh.write(f"{value},{k + 1},{float(reg[:, k].mean())!r},{float(reg[:, k].std())!r}\n")
    return results
