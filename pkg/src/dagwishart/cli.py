"""Command-line interface.

Subcommands: gen-data, score, search, baseline, sim-ratio, sim-selection,
enum-study, diagnose-assumptions.  Hyperparameters come from a JSON config
{"U": "identity" | matrix, "alpha_offset": real, "q": real, "r": int}.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .baselines import GridSpec, Method, lasso_dag_fit, path_fit_and_select, quantile_lambdas
from .dag import Dag, support_dag
from .diagnostics import AsymptoticConfig, assumption_diagnostics
from .errors import ConfigError, DagWishartError, NumericalError
from .experiments import (
    ExperimentConfig,
    exact_enumeration_study,
    run_search_pipeline,
    run_sim_ratio,
    run_sim_selection,
    stream,
)
from .synth import default_hyper, gen_true_model, sample_data
from .wishart import DagWishartHyper, DataStats, NonLocalConfig, log_posterior_ratio, log_score

__all__ = ["main"]


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read JSON from {path}: {exc}") from exc


def _load_matrix_csv(path: str) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read matrix from {path}: {exc}") from exc


def _write_matrix_csv(path: Path, M: np.ndarray) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(M):
            writer.writerow([repr(float(x)) for x in row])


def parse_hyper_config(obj: dict, p: int) -> tuple[DagWishartHyper, float | None, NonLocalConfig]:
    """Hyper JSON -> (DagWishartHyper, q or None, NonLocalConfig)."""
    u_spec = obj.get("U", "identity")
    if isinstance(u_spec, str):
        if u_spec != "identity":
            raise ConfigError(f"unknown scale matrix spec {u_spec!r}")
        U = np.eye(p)
    else:
        U = np.asarray(u_spec, dtype=float)
        if U.shape != (p, p):
            raise ConfigError(f"scale matrix must be {p}x{p}, got {U.shape}")
    offset = float(obj.get("alpha_offset", 10.0))
    q = obj.get("q")
    r = int(obj.get("r", 1))
    try:
        hyper = DagWishartHyper(U=U, alpha_offset=offset)
    except (ValueError, DagWishartError) as exc:
        raise ConfigError(str(exc)) from exc
    return hyper, (None if q is None else float(q)), NonLocalConfig(r=r)


def _experiment_config(args) -> ExperimentConfig:
    obj = _load_json(args.config) if args.config else {}
    if args.seed is not None:
        obj["seed"] = args.seed
    if args.threads is not None:
        obj["threads"] = args.threads
    try:
        return ExperimentConfig.from_dict(obj)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad experiment config: {exc}") from exc


def _cmd_gen_data(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = stream(args.seed, 1)
    model = gen_true_model(args.p, args.fill, args.max_parents, rng)
    Y, _ = sample_data(model, args.n, rng)
    _write_matrix_csv(out / "Y.csv", Y)
    meta = {
        "p": args.p,
        "n": args.n,
        "seed": args.seed,
        "fill": args.fill,
        "max_parents": args.max_parents,
        "keep_rule": "min(1, max_parents / (p - j)) per strictly-lower column entry",
        "D0": "identity",
        "dag0": model.dag0.to_json_dict(),
    }
    (out / "true_model.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    print(f"wrote {out / 'Y.csv'} and {out / 'true_model.json'}")
    return 0


def _cmd_score(args) -> int:
    Y = _load_matrix_csv(args.data)
    n, p = Y.shape
    hyper, q, _ = parse_hyper_config(_load_json(args.config) if args.config else {}, p)
    q = (1.0 / p) if q is None else q
    data = DataStats.from_samples(Y, hyper.U)
    dag = Dag.from_json_dict(_load_json(args.dag))
    if args.dag2:
        other = Dag.from_json_dict(_load_json(args.dag2))
        result = {"log_ratio": log_posterior_ratio(dag, other, data, hyper, q)}
    else:
        result = {"log_score": log_score(dag, data, hyper, q), "q": q}
    print(json.dumps(result, sort_keys=True))
    return 0


def _cmd_search(args) -> int:
    Y = _load_matrix_csv(args.data)
    n, p = Y.shape
    hyper, q, _ = parse_hyper_config(_load_json(args.config) if args.config else {}, p)
    q = (1.0 / p) if q is None else q
    data = DataStats.from_samples(Y, hyper.U)
    cfg = _experiment_config(args) if args.config_search else ExperimentConfig(seed=args.seed or 0)
    if args.budget is not None:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "max_edges": args.budget})
    rng = stream(args.seed or cfg.seed, 2)
    best, best_score, pool = run_search_pipeline(Y, data, hyper, q, cfg, rng)
    result = {
        "selected": best.to_json_dict(),
        "log_score": best_score,
        "pool_size": len(pool),
        "provenance_counts": pool.provenance_counts(),
        "q": q,
        "seed": args.seed or cfg.seed,
        "config": cfg.to_dict(),
    }
    text = json.dumps(result, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_baseline(args) -> int:
    Y = _load_matrix_csv(args.data)
    n, p = Y.shape
    data = DataStats.from_samples(Y)
    if args.method == "lasso-dag-q":
        lam = quantile_lambdas(p, n)[::-1]
        factor = lasso_dag_fit(data.S, lam)
        dag = support_dag(factor, 0.0)
        result = {
            "method": args.method,
            "selected": dag.to_json_dict(),
            "lambdas": [float(x) for x in lam],
        }
    else:
        method = Method.LASSO_DAG if args.method == "lasso-dag" else Method.CSCS
        if args.grid == "auto":
            spec = GridSpec()
        else:
            grid = _load_json(args.grid)
            spec = GridSpec(lambdas=tuple(float(x) for x in grid["lambdas"]))
        path, best = path_fit_and_select(method, data.S, n, spec)
        result = {
            "method": args.method,
            "selected": best.to_json_dict(),
            "path": [
                {"lambda": pt.lam, "edges": pt.dag.num_edges, "bic": pt.bic, "dag": pt.dag.to_json_dict()}
                for pt in path.points
            ],
        }
    text = json.dumps(result, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_sim(args, runner, name: str) -> int:
    cfg = _experiment_config(args)
    table = runner(cfg)
    if args.out:
        table.write(args.out)
        print(f"wrote {name} tables to {args.out}")
    else:
        sys.stdout.write(table.to_csv_str())
    return 0


def _cmd_enum_study(args) -> int:
    report = exact_enumeration_study(
        args.p, args.n, seed=args.seed or 0, q=args.q, replicate=args.replicate
    )
    result = {
        "p": report.p,
        "n": report.n,
        "prob_true": report.prob_true,
        "mode": report.mode.to_json_dict(),
        "mode_is_true": report.mode_is_true,
        "mode_matches_select_best": report.mode_matches_select_best,
    }
    text = json.dumps(result, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_diagnose(args) -> int:
    meta = _load_json(args.model)
    p = int(meta["p"])
    dag0 = Dag.from_json_dict(meta["dag0"])
    fill = float(meta.get("fill", 0.5))
    L0 = np.eye(p)
    for i, j in dag0.edges:
        L0[i - 1, j - 1] = fill
    omega0 = L0 @ L0.T
    hyper_obj = _load_json(args.config) if args.config else {}
    hyper, q, _ = parse_hyper_config(hyper_obj, p)
    hyper = default_hyper(dag0, hyper.alpha_offset if hyper.alpha_offset else 10.0)
    cfg = AsymptoticConfig(
        k=args.k, q=q if q is not None else 1.0 / p, c=args.c, delta1=args.delta1, delta2=args.delta2
    )
    report = assumption_diagnostics(omega0, dag0, hyper, cfg, int(meta["n"]), p)
    print(json.dumps({"all_passed": report.all_passed, "assumptions": report.to_json_dict()}, sort_keys=True, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dagwishart", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="generate a true model and Gaussian samples")
    gen.add_argument("--p", type=int, required=True)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--fill", type=float, default=0.5)
    gen.add_argument("--max-parents", type=float, default=3.0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(fn=_cmd_gen_data)

    score = sub.add_parser("score", help="log score of a DAG (or ratio of two)")
    score.add_argument("--data", required=True)
    score.add_argument("--config")
    score.add_argument("--dag", required=True)
    score.add_argument("--dag2")
    score.set_defaults(fn=_cmd_score)

    search = sub.add_parser("search", help="hybrid stochastic graph search")
    search.add_argument("--data", required=True)
    search.add_argument("--config")
    search.add_argument("--config-search", dest="config_search", action="store_true")
    search.add_argument("--seed", type=int)
    search.add_argument("--budget", type=int, help="max edges per candidate")
    search.add_argument("--threads", type=int)
    search.add_argument("--out")
    search.set_defaults(fn=_cmd_search)

    base = sub.add_parser("baseline", help="penalized-likelihood baselines")
    base.add_argument("--method", choices=["lasso-dag", "lasso-dag-q", "cscs"], required=True)
    base.add_argument("--data", required=True)
    base.add_argument("--grid", default="auto", help="'auto' or a JSON file with {'lambdas': [...]}")
    base.add_argument("--out")
    base.set_defaults(fn=_cmd_baseline)

    for name, runner in [("sim-ratio", run_sim_ratio), ("sim-selection", run_sim_selection)]:
        sim = sub.add_parser(name, help=f"run the {name} experiment")
        sim.add_argument("--config", help="JSON ExperimentConfig")
        sim.add_argument("--seed", type=int)
        sim.add_argument("--threads", type=int)
        sim.add_argument("--out")
        sim.set_defaults(fn=lambda a, r=runner, n=name: _cmd_sim(a, r, n))

    enum = sub.add_parser("enum-study", help="exhaustive posterior at tiny p")
    enum.add_argument("--p", type=int, required=True)
    enum.add_argument("--n", type=int, required=True)
    enum.add_argument("--seed", type=int, default=0)
    enum.add_argument("--q", type=float, default=0.1)
    enum.add_argument("--replicate", type=int, default=0)
    enum.add_argument("--out")
    enum.set_defaults(fn=_cmd_enum_study)

    diag = sub.add_parser("diagnose-assumptions", help="regularity assumption report")
    diag.add_argument("--model", required=True, help="true_model.json from gen-data")
    diag.add_argument("--config")
    diag.add_argument("--k", type=float, default=1.0)
    diag.add_argument("--c", type=float, default=12.0)
    diag.add_argument("--delta1", type=float, default=1.0)
    diag.add_argument("--delta2", type=float, default=1.0)
    diag.set_defaults(fn=_cmd_diagnose)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except DagWishartError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
