"""Command line entry point: ``dm2l <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from . import experiments as ex
from .dataset_io import (
    apply_mask,
    feature_stats,
    generate_mask,
    generate_synthetic,
    generate_xor,
    load_dataset,
    save_dataset,
)
from .kernels import KernelSpec
from .metrics import evaluate_all
from .model import kernel_model, linear_model, load_model, predict_scores, save_model

FORMATS = ("sparse-multilabel", "dense-csv")


def _write_matrix(M, path, header):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in M:
            w.writerow([repr(float(v)) for v in row])


def _read_matrix(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array([[float(v) for v in r] for r in rows[1:] if r])


def cmd_gen_synth(args):
    if args.kind == "xor":
        ds = generate_xor(args.n, args.d, args.c, args.seed)
    else:
        ds = generate_synthetic(args.n, args.d, args.c, args.rank, args.noise, args.seed)
    save_dataset(ds, args.out, args.format)
    print(f"wrote {ds.n} x {ds.d} features, {ds.c} labels to {args.out}")


def cmd_train(args):
    ds = load_dataset(args.data, args.format)
    stats = feature_stats(ds.features)
    X = stats.apply(ds.features)
    mask = generate_mask(ds.n, ds.c, args.rho, args.seed)
    observed = apply_mask(ds.labels, mask)
    solver = ex.CccpConfig(max_outer=args.max_outer, max_inner=args.max_inner,
                           delta=args.delta, seed=args.seed)
    lam, sigma = args.lam, args.sigma
    if args.cv:
        choice = ex.cross_validate(X, observed, args.method, args.lam_grid, args.sigma_grid,
                                   args.folds, ex.child_seed(args.seed, 2), solver)
        lam, sigma = choice.lam, choice.sigma
        print(f"cv selected lam={lam:g} sigma={sigma:g} (validation AP {choice.score:.4f})")
    coef, trace = ex.fit_method(args.method, X, observed, lam, sigma, solver)
    meta = {"method": args.method, "lam": lam, "rho": args.rho, "seed": args.seed,
            "objective": float(trace.best_objectives[-1]), "status": trace.status}
    if ex.METHODS[args.method][0] == ex.GAUSSIAN:
        meta["sigma"] = sigma
        model = kernel_model(coef, X, KernelSpec.gaussian(sigma), stats, **meta)
    else:
        model = linear_model(coef, stats, **meta)
    save_model(model, args.out)
    if args.trace:
        trace.to_csv(args.trace)
    print(f"{trace.status} after {trace.outer_iterations} outer iterations, "
          f"objective {meta['objective']:.6g}; model written to {args.out}")


def cmd_predict(args):
    model = load_model(args.model)
    ds = load_dataset(args.data, args.format)
    S = predict_scores(model, ds.features)
    _write_matrix(S, args.out, [f"y{j + 1}" for j in range(S.shape[1])])
    print(f"wrote {S.shape[0]} x {S.shape[1]} scores to {args.out}")


def cmd_evaluate(args):
    ds = load_dataset(args.data, args.format)
    S = _read_matrix(args.scores)
    report = evaluate_all(S, ds.labels)
    print(json.dumps(report.as_dict(), indent=1))


def cmd_experiment(args):
    cfg = ex.load_config(args.config) if args.config else ex.ExperimentConfig()
    if args.repetitions:
        cfg = replace(cfg, repetitions=args.repetitions)
    table = ex.run_ablation(cfg) if args.ablation else ex.run_experiment(cfg)
    for a in table.aggregates():
        print(f"{a.method:12s} rho={a.rho:<4g} " + "  ".join(
            f"{k}={a.mean[k]:.4f}+-{a.std[k]:.4f}" for k in ex.METRIC_KEYS))
    if args.out:
        ex.emit_results(table, args.out, args.out_format)


def cmd_nemenyi(args):
    print(f"{ex.nemenyi_cd(args.k, args.N, args.q):.4f}")


def _floats(text):
    return tuple(float(v) for v in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dm2l", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-synth", help="write a synthetic multi-label dataset")
    g.add_argument("--kind", choices=("rank", "xor"), default="rank")
    g.add_argument("--n", type=int, default=500)
    g.add_argument("--d", type=int, default=20)
    g.add_argument("--c", type=int, default=10)
    g.add_argument("--rank", type=int, default=3)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--format", choices=FORMATS, default="sparse-multilabel")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_synth)

    t = sub.add_parser("train", help="fit a model on a dataset file")
    t.add_argument("--data", required=True)
    t.add_argument("--format", choices=FORMATS, default="sparse-multilabel")
    t.add_argument("--method", choices=sorted(ex.METHODS), default="dm2l-l")
    t.add_argument("--lam", type=float, default=0.1)
    t.add_argument("--sigma", type=float, default=1.0)
    t.add_argument("--rho", type=float, default=1.0, help="fraction of label cells observed")
    t.add_argument("--cv", action="store_true", help="select lam/sigma by cross-validation")
    t.add_argument("--lam-grid", type=_floats, default=ex.DEFAULT_LAM_GRID)
    t.add_argument("--sigma-grid", type=_floats, default=ex.DEFAULT_SIGMA_GRID)
    t.add_argument("--folds", type=int, default=5)
    t.add_argument("--max-outer", type=int, default=50)
    t.add_argument("--max-inner", type=int, default=200)
    t.add_argument("--delta", type=float, default=0.005)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.add_argument("--trace", help="CSV file for the per-iteration objective trace")
    t.set_defaults(func=cmd_train)

    r = sub.add_parser("predict", help="score a dataset with a saved model")
    r.add_argument("--model", required=True)
    r.add_argument("--data", required=True)
    r.add_argument("--format", choices=FORMATS, default="sparse-multilabel")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_predict)

    e = sub.add_parser("evaluate", help="ranking metrics of a score file against a dataset")
    e.add_argument("--scores", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--format", choices=FORMATS, default="sparse-multilabel")
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("experiment", help="run the split/mask/CV/evaluate protocol")
    x.add_argument("--config", help="flat key = value config file")
    x.add_argument("--ablation", action="store_true")
    x.add_argument("--repetitions", type=int)
    x.add_argument("--out")
    x.add_argument("--out-format", choices=("csv", "json"), default="csv")
    x.set_defaults(func=cmd_experiment)

    m = sub.add_parser("nemenyi", help="Nemenyi critical difference")
    m.add_argument("--k", type=int, required=True, help="number of methods")
    m.add_argument("--N", type=int, required=True, help="number of datasets")
    m.add_argument("--q", type=float, default=3.102, help="critical value q_alpha")
    m.set_defaults(func=cmd_nemenyi)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001 - every failure becomes a one-line error
        print(f"dm2l: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
