"""Multi-label datasets: containers, file formats, splits, masks.

Labels are held in the {-1, +1} alphabet throughout. A missing-label
problem is described by an :class:`ObservationMask` over the label matrix
and the matching :class:`ObservedLabelMatrix`, which carries zeros in the
unobserved cells.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DatasetFormatError(ValueError):
    """Raised when a dataset file cannot be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    label_names: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        Y = np.asarray(self.labels, dtype=float)
        if X.ndim != 2 or Y.ndim != 2:
            raise ValueError("features and labels must be 2-d")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(
                f"features have {X.shape[0]} rows but labels have {Y.shape[0]}")
        if min(X.shape) < 1 or Y.shape[1] < 1:
            raise ValueError("dataset needs n >= 1, d >= 1, c >= 1")
        if not np.all(np.abs(Y) == 1.0):
            raise ValueError("label entries must be exactly -1 or +1")
        names = tuple(self.label_names) or tuple(
            f"y{j + 1}" for j in range(Y.shape[1]))
        if len(names) != Y.shape[1]:
            raise ValueError("label_names length must equal label count")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", Y)
        object.__setattr__(self, "label_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def c(self) -> int:
        return self.labels.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.features[rows], self.labels[rows], self.label_names)


@dataclass(frozen=True)
class ObservationMask:
    """Set of observed (row, col) cells, stored as a boolean n x c array."""

    observed: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.observed, dtype=bool)
        if m.ndim != 2:
            raise ValueError("mask must be 2-d")
        object.__setattr__(self, "observed", m)

    @classmethod
    def from_pairs(cls, pairs, shape) -> "ObservationMask":
        m = np.zeros(shape, dtype=bool)
        for i, j in pairs:
            if not (0 <= i < shape[0] and 0 <= j < shape[1]):
                raise IndexError(f"entry {(i, j)} outside shape {shape}")
            if m[i, j]:
                raise ValueError(f"duplicate entry {(i, j)}")
            m[i, j] = True
        return cls(m)

    @classmethod
    def full(cls, shape) -> "ObservationMask":
        return cls(np.ones(shape, dtype=bool))

    @property
    def shape(self):
        return self.observed.shape

    @property
    def entries(self) -> list:
        return [(int(i), int(j)) for i, j in np.argwhere(self.observed)]

    def __len__(self):
        return int(self.observed.sum())

    def __contains__(self, ij):
        i, j = ij
        return bool(self.observed[i, j])

    def rows(self, rows) -> "ObservationMask":
        return ObservationMask(self.observed[np.asarray(rows, dtype=int)])


@dataclass(frozen=True)
class ObservedLabelMatrix:
    values: np.ndarray
    mask: ObservationMask

    def __post_init__(self):
        V = np.asarray(self.values, dtype=float)
        if V.shape != self.mask.shape:
            raise ValueError("values and mask shapes differ")
        m = self.mask.observed
        if not (np.all(np.abs(V[m]) == 1.0) and np.all(V[~m] == 0.0)):
            raise ValueError("observed cells must be +-1 and unobserved cells 0")
        object.__setattr__(self, "values", V)

    @property
    def shape(self):
        return self.values.shape

    def rows(self, rows) -> "ObservedLabelMatrix":
        rows = np.asarray(rows, dtype=int)
        return ObservedLabelMatrix(self.values[rows], self.mask.rows(rows))


@dataclass(frozen=True)
class DataSplit:
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int = 0


def restrict(M, mask: ObservationMask) -> np.ndarray:
    """Zero every entry of ``M`` outside the observed set (the R_Omega map)."""
    M = np.asarray(M, dtype=float)
    if M.shape != mask.shape:
        raise ValueError(f"matrix shape {M.shape} does not match mask {mask.shape}")
    return np.where(mask.observed, M, 0.0)


def apply_mask(Y, mask: ObservationMask) -> ObservedLabelMatrix:
    return ObservedLabelMatrix(restrict(Y, mask), mask)


def mask_residual(P, observed: ObservedLabelMatrix) -> np.ndarray:
    """``R_Omega(P) - Y_obs``: residual on observed cells, zero elsewhere."""
    return restrict(P, observed.mask) - observed.values


def generate_mask(n: int, c: int, rho: float, seed: int) -> ObservationMask:
    """Observe ``round(rho * n * c)`` cells chosen uniformly without replacement."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    k = round_half_up(rho * n * c)
    rng = np.random.default_rng(seed)
    flat = np.zeros(n * c, dtype=bool)
    flat[rng.choice(n * c, size=k, replace=False)] = True
    return ObservationMask(flat.reshape(n, c))


def split_train_test(ds: Dataset, train_frac: float, seed: int) -> DataSplit:
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must lie strictly between 0 and 1")
    n_train = round_half_up(train_frac * ds.n)
    if n_train == 0 or n_train == ds.n:
        raise ValueError(
            f"train_frac={train_frac} leaves an empty side for n={ds.n}")
    perm = np.random.default_rng(seed).permutation(ds.n)
    return DataSplit(np.sort(perm[:n_train]), np.sort(perm[n_train:]), seed)


# ----------------------------------------------------------------------------
# normalization


@dataclass(frozen=True)
class FeatureStats:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.mean.shape[0]:
            raise ValueError(
                f"expected {self.mean.shape[0]} features, got {X.shape[1]}")
        safe = np.where(self.std > 0, self.std, 1.0)
        Z = (X - self.mean) / safe
        Z[:, self.std == 0] = 0.0
        return Z


def feature_stats(X) -> FeatureStats:
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    # guard constant columns against round-off residue in the std
    const = np.all(X == X[:1], axis=0)
    std[const] = 0.0
    return FeatureStats(mean, std)


def normalize_features(X) -> np.ndarray:
    """Z-score every column with population statistics; constant columns become 0."""
    return feature_stats(X).apply(X)


# ----------------------------------------------------------------------------
# synthetic data


def generate_synthetic(n, d, c, rank, noise=0.0, seed=0) -> Dataset:
    """Labels are the signs of a rank-``rank`` linear score ``X U V^T`` plus noise."""
    if rank > min(d, c) or rank < 1:
        raise ValueError(f"rank must lie in [1, min(d, c)] = [1, {min(d, c)}]")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    U = rng.standard_normal((d, rank))
    V = rng.standard_normal((c, rank))
    S = X @ U @ V.T + noise * rng.standard_normal((n, c))
    return Dataset(X, np.where(S >= 0, 1.0, -1.0))


def generate_xor(n, d, c, seed=0) -> Dataset:
    """Nonlinear companion set: each label is an XOR pattern in the first two features.

    Label ``k`` is ``sign((x . u_k) (x . v_k))`` with ``u_k, v_k`` an orthonormal
    pair in the plane of features 0 and 1, rotated by ``pi k / (2c)``; the
    remaining ``d - 2`` features are pure noise. No linear scorer does better
    than chance on such labels.
    """
    if d < 2:
        raise ValueError("the XOR set needs d >= 2")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    angles = np.pi * np.arange(c) / (2 * c)
    a = X[:, :1] * np.cos(angles) + X[:, 1:2] * np.sin(angles)
    b = -X[:, :1] * np.sin(angles) + X[:, 1:2] * np.cos(angles)
    return Dataset(X, np.where(a * b >= 0, 1.0, -1.0))


# ----------------------------------------------------------------------------
# file formats
#
# sparse: one instance per line, "<labels> <idx:val> <idx:val> ...", labels are
# comma-separated 1-based indices of the positive labels (an empty field means
# all negative, written as a leading blank), feature indices are 0-based.
# Optional header comments "# dims <d> <c>" and "# labels <name> ...".


def _parse_sparse(path, n_features, n_labels):
    rows = []
    header_dims = None
    names = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[:1] == ["dims"] and len(parts) == 3:
                    header_dims = (int(parts[1]), int(parts[2]))
                elif parts[:1] == ["labels"]:
                    names = tuple(parts[1:])
                continue
            if not line.strip():
                continue
            tokens = line.split()
            if line[0].isspace() or ":" in tokens[0]:
                label_tok, feat_toks = "", tokens
            else:
                label_tok, feat_toks = tokens[0], tokens[1:]
            try:
                pos = [int(t) - 1 for t in label_tok.split(",") if t]
            except ValueError:
                raise DatasetFormatError(f"bad label field {label_tok!r}", lineno) from None
            if any(j < 0 for j in pos):
                raise DatasetFormatError("label indices are 1-based", lineno)
            feats = {}
            for tok in feat_toks:
                idx, sep, val = tok.partition(":")
                try:
                    if not sep:
                        raise ValueError
                    feats[int(idx)] = float(val)
                except ValueError:
                    raise DatasetFormatError(f"bad feature pair {tok!r}", lineno) from None
                if int(idx) < 0:
                    raise DatasetFormatError("negative feature index", lineno)
            rows.append((lineno, pos, feats))
    if not rows:
        raise DatasetFormatError("no instances found")
    d = n_features or (header_dims[0] if header_dims else None)
    c = n_labels or (header_dims[1] if header_dims else None)
    if d is None:
        d = 1 + max((max(f) for _, _, f in rows if f), default=0)
    if c is None:
        c = 1 + max((max(p) for _, p, _ in rows if p), default=0)
    X = np.zeros((len(rows), d))
    Y = -np.ones((len(rows), c))
    for r, (lineno, pos, feats) in enumerate(rows):
        for j in pos:
            if j >= c:
                raise DatasetFormatError(f"label index {j + 1} exceeds c={c}", lineno)
            Y[r, j] = 1.0
        for k, v in feats.items():
            if k >= d:
                raise DatasetFormatError(f"feature index {k} exceeds d={d}", lineno)
            X[r, k] = v
    return Dataset(X, Y, names or ())


def _parse_dense_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError("empty file") from None
        label_cols = [k for k, h in enumerate(header) if h.strip().startswith("y")]
        feat_cols = [k for k, h in enumerate(header) if h.strip().startswith("x")]
        if not label_cols or not feat_cols or len(label_cols) + len(feat_cols) != len(header):
            raise DatasetFormatError("header must be y1..yc,x1..xd", 1)
        X, Y = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise DatasetFormatError(
                    f"expected {len(header)} columns, found {len(rec)}", lineno)
            try:
                vals = [float(v) for v in rec]
            except ValueError as exc:
                raise DatasetFormatError(str(exc), lineno) from None
            labels = [vals[k] for k in label_cols]
            if any(v not in (-1.0, 0.0, 1.0) for v in labels):
                raise DatasetFormatError("label values must be in {0, 1} or {-1, +1}", lineno)
            Y.append([1.0 if v == 1.0 else -1.0 for v in labels])
            X.append([vals[k] for k in feat_cols])
    if not X:
        raise DatasetFormatError("no instances found")
    return Dataset(np.array(X), np.array(Y))


def load_dataset(path, format="sparse-multilabel", n_features=None, n_labels=None) -> Dataset:
    """Read a dataset in the sparse multi-label text format or as dense CSV."""
    path = Path(path)
    if format == "sparse-multilabel":
        return _parse_sparse(path, n_features, n_labels)
    if format == "dense-csv":
        return _parse_dense_csv(path)
    raise ValueError(f"unknown dataset format {format!r}")


def save_dataset(ds: Dataset, path, format="sparse-multilabel") -> None:
    path = Path(path)
    if format == "sparse-multilabel":
        with open(path, "w") as fh:
            fh.write(f"# dims {ds.d} {ds.c}\n")
            fh.write("# labels " + " ".join(ds.label_names) + "\n")
            for x, y in zip(ds.features, ds.labels):
                labels = ",".join(str(j + 1) for j in np.flatnonzero(y > 0))
                keep = np.flatnonzero((x != 0) | np.signbit(x))
                if keep.size == 0:
                    keep = np.array([0])
                feats = " ".join(f"{k}:{float(x[k])!r}" for k in keep)
                fh.write(f"{labels} {feats}\n")
    elif format == "dense-csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"y{j + 1}" for j in range(ds.c)] + [f"x{k + 1}" for k in range(ds.d)])
            for x, y in zip(ds.features, ds.labels):
                w.writerow([int(v) for v in y] + [repr(float(v)) for v in x])
    else:
        raise ValueError(f"unknown dataset format {format!r}")
