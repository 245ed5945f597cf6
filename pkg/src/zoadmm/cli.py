"""Benchmark command line: run experiment grids, validate configs, derive
hyperparameters.

Config files are INI-style (configparser), three sections:

  [problem]     name = <catalog entry>, remaining keys are builder kwargs
  [experiment]  algorithms, seeds, output_dir, trace_every, x0, x_update,
                query_budget
  [hyper]       mode = derive (alpha/epsilon/C/L/K) or explicit
                (eta/rho/q/b/b1/b2/K/mu/nu/smoothing/r_x/L)

Exit codes: 0 ok, 1 config error, 2 solver failure. The ZOADMM_SEED
environment variable overrides the seed list with a single seed.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .diagnostics import CSV_FIELDS
from .errors import ConfigError, ZoadmmError
from .estimators import SmoothingParams
from .problems import CATALOG
from .solver import (ALGORITHMS, SolverConfig, derive_hyperparams, run,
                     validate_config)


@dataclass
class ExperimentConfig:
    problem_name: str
    problem_kwargs: dict
    algorithms: list
    seeds: list
    output_dir: str
    trace_every: int
    x0: str
    x_update: str
    query_budget: int | None
    hyper_mode: str
    hyper: dict


def _coerce(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _get_int(section, key, default=None, minimum=1):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing required key {key!r}", field=key)
        return default
    try:
        v = int(section[key])
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {section[key]!r}", field=key)
    if v < minimum:
        raise ConfigError(f"{key} must be >= {minimum}", field=key)
    return v


def _get_float(section, key, default=None):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing required key {key!r}", field=key)
        return default
    try:
        return float(section[key])
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {section[key]!r}", field=key)


def load_config(path: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}")
    except configparser.Error as e:
        raise ConfigError(f"config parse failure: {e}")

    if "problem" not in parser:
        raise ConfigError("missing [problem] section", field="problem")
    prob = parser["problem"]
    name = prob.get("name")
    if name not in CATALOG:
        raise ConfigError(f"unknown problem {name!r}; choose from "
                          f"{sorted(CATALOG)}", field="name")
    kwargs = {k: _coerce(v) for k, v in prob.items() if k != "name"}

    if "experiment" not in parser:
        raise ConfigError("missing [experiment] section", field="experiment")
    exp = parser["experiment"]
    algos = [a.strip() for a in exp.get("algorithms", "").split(",") if a.strip()]
    if not algos:
        raise ConfigError("no algorithms listed", field="algorithms")
    for a in algos:
        if a not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {a!r}", field="algorithms")
    try:
        seeds = [int(s) for s in exp.get("seeds", "0").split(",") if s.strip()]
    except ValueError:
        raise ConfigError("seeds must be a comma-separated integer list", field="seeds")
    env_seed = os.environ.get("ZOADMM_SEED")
    if env_seed is not None:
        try:
            seeds = [int(env_seed)]
        except ValueError:
            raise ConfigError(f"ZOADMM_SEED must be an integer, got {env_seed!r}",
                              field="seeds")
    x0 = exp.get("x0", "zeros")
    if x0 not in ("zeros", "ones"):
        raise ConfigError(f"x0 must be zeros or ones, got {x0!r}", field="x0")
    x_update = exp.get("x_update", "linearized")
    if x_update not in ("linearized", "exact"):
        raise ConfigError(f"x_update must be linearized or exact", field="x_update")
    budget = None
    if "query_budget" in exp:
        budget = _get_int(exp, "query_budget")

    if "hyper" not in parser:
        raise ConfigError("missing [hyper] section", field="hyper")
    hyp = parser["hyper"]
    mode = hyp.get("mode", "derive")
    if mode not in ("derive", "explicit"):
        raise ConfigError(f"hyper mode must be derive or explicit, got {mode!r}",
                          field="mode")
    hyper = {k: v for k, v in hyp.items() if k != "mode"}

    return ExperimentConfig(
        problem_name=name, problem_kwargs=kwargs, algorithms=algos,
        seeds=seeds, output_dir=exp.get("output_dir", "out"),
        trace_every=_get_int(exp, "trace_every", default=1),
        x0=x0, x_update=x_update, query_budget=budget,
        hyper_mode=mode, hyper=hyper)


def build_catalog_problem(cfg: ExperimentConfig):
    builder = CATALOG[cfg.problem_name]
    try:
        return builder(**cfg.problem_kwargs)
    except TypeError as e:
        raise ConfigError(f"bad problem parameters: {e}", field="problem")


def _resolve_L(cfg: ExperimentConfig, prob) -> float:
    raw = cfg.hyper.get("l", "auto")
    if isinstance(raw, str) and raw.strip().lower() == "auto":
        if prob.L is None:
            raise ConfigError("problem supplies no smoothness constant; set L",
                              field="l")
        return float(prob.L)
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"L must be a number or auto, got {raw!r}", field="l")


def make_solver_config(cfg: ExperimentConfig, prob, algorithm: str,
                       seed: int) -> SolverConfig:
    hyp = dict(cfg.hyper)
    L = _resolve_L(cfg, prob)
    if cfg.hyper_mode == "derive":
        recipe = derive_hyperparams(
            prob.spec, L, algorithm,
            alpha=_get_float(hyp, "alpha", default=1.0),
            epsilon=_get_float(hyp, "epsilon", default=1e-2),
            C=_get_float(hyp, "c", default=1.0))
        K = recipe.K
        if "k" in hyp:
            K = _get_int(hyp, "k")
        elif cfg.query_budget is not None:
            K = cfg.query_budget  # safe upper bound; the budget terminates
        return recipe.to_config(seed=seed, K=K, x0=cfg.x0,
                                x_update=cfg.x_update,
                                query_budget=cfg.query_budget)
    # explicit mode
    if "k" not in hyp and cfg.query_budget is None:
        raise ConfigError("explicit mode needs K (or a query_budget)", field="k")
    K = _get_int(hyp, "k", default=cfg.query_budget or 0)
    schedule = hyp.get("smoothing", "decaying")
    if schedule not in ("fixed", "decaying"):
        raise ConfigError("smoothing must be fixed or decaying", field="smoothing")
    smoothing = SmoothingParams(schedule=schedule,
                                mu=_get_float(hyp, "mu", default=1e-3),
                                nu=_get_float(hyp, "nu", default=1e-4))
    r_x = _get_float(hyp, "r_x", default=0.0) or None
    return SolverConfig(
        algorithm=algorithm,
        eta=_get_float(hyp, "eta"),
        rho=_get_float(hyp, "rho"),
        K=K, lipschitz_L=L,
        q=_get_int(hyp, "q", default=1),
        b=_get_int(hyp, "b", default=1),
        b1=_get_int(hyp, "b1", default=1),
        b2=_get_int(hyp, "b2", default=1),
        smoothing=smoothing, seed=seed, x_update=cfg.x_update,
        r_x=r_x, x0=cfg.x0, query_budget=cfg.query_budget)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_trace_csv(path: str, trace, trace_every: int) -> None:
    last_k = trace.records[-1].k
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_FIELDS) + "\n")
        for rec in trace.records:
            if rec.k % trace_every and rec.k not in (0, last_k):
                continue
            fh.write(",".join(_fmt(getattr(rec, f)) for f in CSV_FIELDS) + "\n")


def _record_dict(rec) -> dict:
    out = {}
    for f in CSV_FIELDS:
        v = getattr(rec, f)
        out[f] = int(v) if f in ("k", "queries_cum") else float(v)
    return out


def _config_dict(config: SolverConfig) -> dict:
    d = dataclasses.asdict(config)
    d["smoothing"] = dataclasses.asdict(config.smoothing)
    if d.get("r_y") is not None:
        d["r_y"] = list(d["r_y"])
    if not isinstance(d.get("x0"), str):
        d["x0"] = list(np.asarray(d["x0"], dtype=float))
    return d


def _one_run(cfg: ExperimentConfig, algorithm: str, seed: int, out_dir: str):
    # fresh problem instance per run keeps the query ledger isolated
    prob = build_catalog_problem(cfg)
    config = make_solver_config(cfg, prob, algorithm, seed)
    diag = prob if prob.value is not None else None
    trace = run(prob.spec, config, diag=diag)
    csv_name = f"{algorithm}_{seed}.csv"
    write_trace_csv(os.path.join(out_dir, csv_name), trace, cfg.trace_every)
    return {
        "algorithm": algorithm,
        "seed": seed,
        "csv": csv_name,
        "iterations": len(trace.records),
        "zeta": trace.zeta,
        "k_star": trace.k_star,
        "at_zeta": _record_dict(trace.records[trace.zeta]),
        "at_k_star": _record_dict(trace.records[trace.k_star]),
        "final": _record_dict(trace.records[-1]),
        "queries": trace.queries,
        "wall_time_s": trace.wall_time,
        "config": _config_dict(config),
    }


def cmd_run(cfg: ExperimentConfig, out_override: str | None, jobs: int) -> int:
    out_dir = out_override or cfg.output_dir
    os.makedirs(out_dir, exist_ok=True)
    tasks = [(a, s) for a in cfg.algorithms for s in cfg.seeds]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda t: _one_run(cfg, t[0], t[1], out_dir), tasks))
    else:
        results = [_one_run(cfg, a, s, out_dir) for a, s in tasks]
    summary = {
        "problem": {"name": cfg.problem_name, "params": cfg.problem_kwargs},
        "runs": results,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def cmd_validate(cfg: ExperimentConfig) -> int:
    prob = build_catalog_problem(cfg)
    for algorithm in cfg.algorithms:
        config = make_solver_config(cfg, prob, algorithm, cfg.seeds[0])
        validate_config(prob.spec, config)
    return 0


def cmd_derive(cfg: ExperimentConfig) -> int:
    prob = build_catalog_problem(cfg)
    L = _resolve_L(cfg, prob)
    hyp = cfg.hyper
    out = {}
    for algorithm in cfg.algorithms:
        recipe = derive_hyperparams(
            prob.spec, L, algorithm,
            alpha=_get_float(hyp, "alpha", default=1.0),
            epsilon=_get_float(hyp, "epsilon", default=1e-2),
            C=_get_float(hyp, "c", default=1.0))
        d = dataclasses.asdict(recipe)
        d["r_y"] = list(d["r_y"])
        d["notes"] = list(d["notes"])
        out[algorithm] = d
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="zoadmm",
                                     description="zeroth-order ADMM benchmark runner")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "validate", "derive"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI config path")
        if name == "run":
            p.add_argument("--out", default=None, help="output directory override")
            p.add_argument("--jobs", type=int, default=1,
                           help="parallel (algorithm, seed) runs")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "run":
            return cmd_run(cfg, args.out, max(args.jobs, 1))
        if args.command == "validate":
            return cmd_validate(cfg)
        return cmd_derive(cfg)
    except ConfigError as e:
        field = f" [{e.field}]" if e.field else ""
        print(f"config error{field}: {e}", file=sys.stderr)
        return 1
    except ZoadmmError as e:
        print(f"solver error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
