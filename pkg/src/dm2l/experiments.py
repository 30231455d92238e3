"""Experiment harness: split, mask, cross-validate, fit, score, aggregate.

Every random choice draws from a child seed derived from the run seed and
a tuple of integer keys (see :func:`child_seed`), so repetitions and folds
can run in any order or in parallel and still produce identical numbers.
For repetition ``r`` the keys are ``(r, 0)`` for the train/test split,
``(r, 1)`` for the label mask and ``(r, 2)`` for the CV fold assignment.
All methods share the split, mask and folds of a repetition.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from .dataset_io import (
    Dataset,
    ObservedLabelMatrix,
    apply_mask,
    feature_stats,
    generate_mask,
    generate_synthetic,
    generate_xor,
    load_dataset,
    split_train_test,
)
from .kernels import GAUSSIAN, LINEAR, KernelSpec, cross_kernel, gram_matrix
from .metrics import average_precision, evaluate_all
from .objective import ObjectiveSpec, build_label_groups
from .optimizer import CccpConfig, fit

log = logging.getLogger(__name__)

# method -> (kernel kind, objective form); ridge is the lam = 0 fit
METHODS = {
    "dm2l-l": (LINEAR, "dm2l"),
    "dm2l-nl": (GAUSSIAN, "dm2l"),
    "dm2l-lo": (LINEAR, "local"),
    "global-only": (LINEAR, "global"),
    "ridge": (LINEAR, "dm2l"),
}
ABLATION_METHODS = ("dm2l-l", "dm2l-lo", "global-only", "ridge")
DEFAULT_LAM_GRID = tuple(10.0 ** k for k in range(-5, 6))
DEFAULT_SIGMA_GRID = (0.5, 1.0, 1.5, 2.0)
METRIC_KEYS = ("rkl", "auc", "cvg", "ap")


def child_seed(seed: int, *keys: int) -> int:
    """Independent 32-bit seed for the stream identified by ``keys``."""
    return int(np.random.SeedSequence([int(seed), *map(int, keys)]).generate_state(1)[0])


def n_threads() -> int:
    try:
        return max(1, int(os.environ.get("DM2L_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = ""
    data_format: str = "sparse-multilabel"
    synthetic: str = "rank"
    synth_n: int = 500
    synth_d: int = 20
    synth_c: int = 10
    synth_rank: int = 3
    synth_noise: float = 0.0
    methods: tuple = ("dm2l-l",)
    rho: tuple = (1.0,)
    train_frac: float = 0.6
    repetitions: int = 10
    lam_grid: tuple = DEFAULT_LAM_GRID
    sigma_grid: tuple = DEFAULT_SIGMA_GRID
    cv_folds: int = 5
    seed: int = 0
    max_outer: int = 50
    max_inner: int = 200
    inner_step: str = "auto"
    outer_rel_tol: float = 1e-5
    delta: float = 0.005

    def __post_init__(self):
        for name in ("methods", "rho", "lam_grid", "sigma_grid"):
            value = getattr(self, name)
            if isinstance(value, (str, int, float)):
                value = (value,)
            object.__setattr__(self, name, tuple(value))
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown method(s) {unknown}; choose from {sorted(METHODS)}")
        if not self.lam_grid or not self.sigma_grid:
            raise ValueError("hyper-parameter grids must be non-empty")
        if not all(0 < r <= 1 for r in self.rho):
            raise ValueError("rho values must lie in (0, 1]")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be at least 2")
        if self.repetitions < 1:
            raise ValueError("repetitions must be positive")

    def solver(self, lam=0.0) -> CccpConfig:
        step = self.inner_step if self.inner_step == "auto" else float(self.inner_step)
        return CccpConfig(max_outer=self.max_outer, max_inner=self.max_inner,
                          inner_step=step, outer_rel_tol=self.outer_rel_tol,
                          delta=self.delta, lam=lam, seed=self.seed)


def _coerce(text, template):
    text = text.strip()
    if isinstance(template, tuple):
        items = [t for t in (s.strip() for s in text.split(",")) if t]
        conv = float if template and isinstance(template[0], float) else str
        return tuple(conv(t) for t in items)
    if isinstance(template, bool):
        return text.lower() in ("1", "true", "yes")
    if isinstance(template, int):
        return int(text)
    if isinstance(template, float):
        return float(text)
    return text


def load_config(path) -> ExperimentConfig:
    """Read a flat ``key = value`` file (``#`` comments, lists comma-separated)."""
    defaults = ExperimentConfig()
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or key not in known:
                raise ValueError(f"{path}:{lineno}: unrecognized config line {raw.strip()!r}")
            try:
                values[key] = _coerce(value, getattr(defaults, key))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return ExperimentConfig(**values)


def make_dataset(cfg: ExperimentConfig, seed=None) -> Dataset:
    if cfg.dataset:
        return load_dataset(cfg.dataset, cfg.data_format)
    seed = cfg.seed if seed is None else seed
    if cfg.synthetic == "xor":
        return generate_xor(cfg.synth_n, cfg.synth_d, cfg.synth_c, seed)
    if cfg.synthetic == "rank":
        return generate_synthetic(cfg.synth_n, cfg.synth_d, cfg.synth_c,
                                  cfg.synth_rank, cfg.synth_noise, seed)
    raise ValueError(f"unknown synthetic family {cfg.synthetic!r}")


# ----------------------------------------------------------------------------
# fitting one method


def fit_method(method, X, observed: ObservedLabelMatrix, lam, sigma, solver: CccpConfig,
               gram=None):
    """Fit ``method`` on normalized features; returns ``(coef, trace)``.

    ``gram`` may carry a precomputed Gram matrix of ``X`` for kernel methods.
    """
    kind, form = METHODS[method]
    if method == "ridge":
        lam = 0.0
    if kind == LINEAR:
        design = X
    else:
        design = gram if gram is not None else gram_matrix(X, KernelSpec.gaussian(sigma)).values
    spec = ObjectiveSpec(design, observed, build_label_groups(observed), lam, solver.delta, form)
    return fit(spec, replace(solver, lam=lam))


def _score(method, coef, X_fit, X_eval, sigma, cross=None):
    kind, _ = METHODS[method]
    if kind == LINEAR:
        return X_eval @ coef
    if cross is None:
        cross = cross_kernel(X_eval, X_fit, KernelSpec.gaussian(sigma))
    return cross @ coef


def masked_average_precision(scores, observed: ObservedLabelMatrix) -> float:
    """AP restricted to the observed label cells of each instance.

    Unobserved cells get score ``-inf`` and a negative label: they never rank
    above an observed label and AP only counts positives, so the value equals
    AP over the observed cells alone.
    """
    m = observed.mask.observed
    S = np.where(m, scores, -np.inf)
    Y = np.where(observed.values > 0, 1.0, -1.0)
    return average_precision(S, Y)


@dataclass(frozen=True)
class CvChoice:
    lam: float
    sigma: float
    score: float
    table: tuple = ()


def cross_validate(X, observed: ObservedLabelMatrix, method, lam_grid=DEFAULT_LAM_GRID,
                   sigma_grid=DEFAULT_SIGMA_GRID, folds=5, seed=0,
                   solver: CccpConfig | None = None) -> CvChoice:
    """Pick the grid point with the best mean validation AP over instance folds.

    Validation AP uses only the observed cells of held-out instances. Ties go
    to the smaller ``lam``, then the smaller ``sigma``.
    """
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if not len(lam_grid) or not len(sigma_grid):
        raise ValueError("empty hyper-parameter grid")
    solver = solver or CccpConfig()
    kind, _ = METHODS[method]
    lams = sorted(set(float(v) for v in lam_grid))
    if method == "ridge":
        lams = [0.0]
    sigmas = sorted(set(float(v) for v in sigma_grid)) if kind == GAUSSIAN else [float("nan")]
    n = X.shape[0]
    fold_of = np.empty(n, dtype=int)
    fold_of[np.random.default_rng(seed).permutation(n)] = np.arange(n) % folds
    table = []
    best = None
    for sigma in sigmas:
        K = gram_matrix(X, KernelSpec.gaussian(sigma)).values if kind == GAUSSIAN else None
        for lam in lams:
            scores = []
            for f in range(folds):
                tr, va = np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)
                obs_tr, obs_va = observed.rows(tr), observed.rows(va)
                if K is None:
                    coef, _ = fit_method(method, X[tr], obs_tr, lam, sigma, solver)
                    S = X[va] @ coef
                else:
                    coef, _ = fit_method(method, X[tr], obs_tr, lam, sigma, solver,
                                         gram=K[np.ix_(tr, tr)])
                    S = K[np.ix_(va, tr)] @ coef
                ap = masked_average_precision(S, obs_va)
                if not math.isnan(ap):
                    scores.append(ap)
            mean = math.fsum(scores) / len(scores) if scores else -math.inf
            table.append((lam, sigma, mean))
    # strict improvement over the (lam, sigma)-ascending order keeps ties small
    for lam, sigma, mean in sorted(table, key=lambda r: (r[0], 0.0 if math.isnan(r[1]) else r[1])):
        if best is None or mean > best.score:
            best = CvChoice(lam, sigma, mean)
    return replace(best, table=tuple(table))


# ----------------------------------------------------------------------------
# protocol


@dataclass(frozen=True)
class RunRecord:
    method: str
    rho: float
    rep: int
    rkl: float
    auc: float
    cvg: float
    ap: float
    lam: float
    sigma: float
    seconds: float = 0.0
    counts: tuple = ()

    def metric(self, key) -> float:
        return getattr(self, key)


@dataclass(frozen=True)
class AggregateRow:
    method: str
    rho: float
    count: int
    mean: dict
    std: dict


@dataclass
class ResultTable:
    records: list = field(default_factory=list)

    def extend(self, other: "ResultTable") -> "ResultTable":
        self.records.extend(other.records)
        return self

    def select(self, method=None, rho=None) -> list:
        return [r for r in self.records
                if (method is None or r.method == method) and (rho is None or r.rho == rho)]

    def aggregates(self) -> list:
        """Mean and sample standard deviation per (method, rho), in first-seen order."""
        keys = []
        for r in self.records:
            if (r.method, r.rho) not in keys:
                keys.append((r.method, r.rho))
        rows = []
        for method, rho in keys:
            group = self.select(method, rho)
            mean, std = {}, {}
            for k in METRIC_KEYS:
                vals = [r.metric(k) for r in group]
                mu = math.fsum(vals) / len(vals)
                mean[k] = mu
                std[k] = (math.sqrt(math.fsum((v - mu) ** 2 for v in vals) / (len(vals) - 1))
                          if len(vals) > 1 else 0.0)
            rows.append(AggregateRow(method, rho, len(group), mean, std))
        return rows

    def mean(self, method, metric, rho=None) -> float:
        vals = [r.metric(metric) for r in self.select(method, rho)]
        if not vals:
            raise KeyError(f"no records for method={method!r}, rho={rho!r}")
        return math.fsum(vals) / len(vals)


def _run_one(cfg: ExperimentConfig, ds: Dataset, rep: int, rho: float, rho_index: int):
    split = split_train_test(ds, cfg.train_frac, child_seed(cfg.seed, rep, 0))
    stats = feature_stats(ds.features[split.train_indices])
    Xtr = stats.apply(ds.features[split.train_indices])
    Xte = stats.apply(ds.features[split.test_indices])
    Ytr = ds.labels[split.train_indices]
    Yte = ds.labels[split.test_indices]
    # the mask depends on rho, so rho is part of its key
    mask = generate_mask(*Ytr.shape, rho, child_seed(cfg.seed, rep, 1, rho_index))
    observed = apply_mask(Ytr, mask)
    out = []
    for method in cfg.methods:
        tic = time.perf_counter()
        choice = cross_validate(Xtr, observed, method, cfg.lam_grid, cfg.sigma_grid,
                                cfg.cv_folds, child_seed(cfg.seed, rep, 2), cfg.solver())
        coef, _ = fit_method(method, Xtr, observed, choice.lam, choice.sigma, cfg.solver())
        scores = _score(method, coef, Xtr, Xte, choice.sigma)
        rep_ = evaluate_all(scores, Yte)
        out.append(RunRecord(method, rho, rep, rep_.ranking_loss, rep_.macro_auc,
                             rep_.coverage, rep_.average_precision, choice.lam,
                             choice.sigma, time.perf_counter() - tic,
                             (rep_.rkl_count, rep_.auc_count, rep_.cvg_count, rep_.ap_count)))
        log.info("%s rho=%g rep=%d lam=%g sigma=%g auc=%.4f ap=%.4f", method, rho, rep,
                 choice.lam, choice.sigma, rep_.macro_auc, rep_.average_precision)
    return out


def run_experiment(cfg: ExperimentConfig, n_jobs=None) -> ResultTable:
    """Full protocol over ``cfg.rho`` x ``cfg.repetitions``; mask only touches training labels."""
    ds = make_dataset(cfg)
    jobs = [(rep, rho, i) for i, rho in enumerate(cfg.rho) for rep in range(cfg.repetitions)]
    n_jobs = n_threads() if n_jobs is None else n_jobs
    if n_jobs == 1:
        chunks = [_run_one(cfg, ds, rep, rho, i) for rep, rho, i in jobs]
    else:
        chunks = Parallel(n_jobs=min(n_jobs, len(jobs)))(
            delayed(_run_one)(cfg, ds, rep, rho, i) for rep, rho, i in jobs)
    records = [r for chunk in chunks for r in chunk]
    order = {m: k for k, m in enumerate(cfg.methods)}
    records.sort(key=lambda r: (order[r.method], cfg.rho.index(r.rho), r.rep))
    return ResultTable(records)


def run_ablation(cfg: ExperimentConfig, n_jobs=None) -> ResultTable:
    """Compare the full objective against its local-only, global-only and lam = 0 variants."""
    return run_experiment(replace(cfg, methods=ABLATION_METHODS), n_jobs)


def nemenyi_cd(k: int, N: int, q_alpha: float = 3.102) -> float:
    """Critical difference ``q_alpha * sqrt(k (k + 1) / (6 N))`` of average ranks."""
    if k < 2 or N < 1:
        raise ValueError("need k >= 2 methods and N >= 1 datasets")
    return q_alpha * math.sqrt(k * (k + 1) / (6.0 * N))


# ----------------------------------------------------------------------------
# result files

CSV_HEADER = ["method", "rho", "rep", "rkl", "auc", "cvg", "ap", "lambda", "sigma"]


def _fmt(v):
    return repr(float(v))


def emit_results(table: ResultTable, path, format="csv") -> None:
    """Write per-repetition rows then aggregate rows (``rep`` = ``mean`` / ``std``)."""
    path = Path(path)
    aggs = table.aggregates()
    if format == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_HEADER)
            for r in table.records:
                w.writerow([r.method, _fmt(r.rho), r.rep, _fmt(r.rkl), _fmt(r.auc),
                            _fmt(r.cvg), _fmt(r.ap), _fmt(r.lam), _fmt(r.sigma)])
            for a in aggs:
                for tag, vals in (("mean", a.mean), ("std", a.std)):
                    w.writerow([a.method, _fmt(a.rho), tag]
                               + [_fmt(vals[k]) for k in METRIC_KEYS] + ["", ""])
    elif format == "json":
        doc = {
            "runs": [asdict(r) for r in table.records],
            "aggregates": [asdict(a) for a in aggs],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
    else:
        raise ValueError(f"unknown result format {format!r}")


def load_results(path) -> ResultTable:
    """Read back the per-repetition rows of a CSV or JSON result file."""
    path = Path(path)
    with open(path) as fh:
        head = fh.read(1)
    if head == "{":
        with open(path) as fh:
            doc = json.load(fh)
        return ResultTable([RunRecord(**{**r, "counts": tuple(r.get("counts", ()))})
                            for r in doc["runs"]])
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected result header {reader.fieldnames}")
        for row in reader:
            if row["rep"] in ("mean", "std"):
                continue
            records.append(RunRecord(row["method"], float(row["rho"]), int(row["rep"]),
                                     float(row["rkl"]), float(row["auc"]), float(row["cvg"]),
                                     float(row["ap"]), float(row["lambda"]),
                                     float(row["sigma"])))
    return ResultTable(records)
