"""Trained models, scoring and the binary model file.

File layout (all little-endian)::

    b"DM2L"  magic
    u16      format version
    u8       variant tag (0 linear, 1 kernel)
    u8       kernel kind (0 linear, 1 gaussian)
    f64      kernel sigma
    u32      metadata length, then that many bytes of UTF-8 JSON
    matrices, each as u32 rows, u32 cols, rows*cols f64 row-major:
      linear: W, mean, std
      kernel: A, X_train, mean, std
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .dataset_io import FeatureStats
from .kernels import GAUSSIAN, LINEAR, KernelSpec, cross_kernel

MAGIC = b"DM2L"
VERSION = 1
_HEAD = struct.Struct("<4sHBBd")
_SHAPE = struct.Struct("<II")
_LEN = struct.Struct("<I")


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TrainedModel:
    variant: str
    coef: np.ndarray
    stats: FeatureStats
    kernel: KernelSpec = KernelSpec()
    x_train: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in ("linear", "kernel"):
            raise ValueError(f"unknown model variant {self.variant!r}")
        if self.variant == "linear" and self.coef.shape[0] != self.stats.mean.shape[0]:
            raise ValueError("W rows must equal the feature dimension")
        if self.variant == "kernel":
            if self.x_train is None or self.coef.shape[0] != self.x_train.shape[0]:
                raise ValueError("A rows must equal the stored training instance count")

    @property
    def n_labels(self) -> int:
        return self.coef.shape[1]

    @property
    def n_features(self) -> int:
        return self.stats.mean.shape[0]


def linear_model(W, stats, **metadata) -> TrainedModel:
    return TrainedModel("linear", np.asarray(W, dtype=float), stats, metadata=metadata)


def kernel_model(A, x_train, spec, stats, **metadata) -> TrainedModel:
    """``x_train`` must already be normalized with ``stats``."""
    return TrainedModel("kernel", np.asarray(A, dtype=float), stats, spec,
                        np.asarray(x_train, dtype=float), metadata)


def predict_scores(model: TrainedModel, X_test) -> np.ndarray:
    """Real-valued label scores (m x c) for raw test features."""
    X = np.asarray(X_test, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got shape {X.shape}")
    Z = model.stats.apply(X)
    if model.variant == "linear":
        return Z @ model.coef
    return cross_kernel(Z, model.x_train, model.kernel) @ model.coef


def _pack(M):
    M = np.ascontiguousarray(np.atleast_2d(M), dtype="<f8")
    return _SHAPE.pack(*M.shape) + M.tobytes()


def save_model(model: TrainedModel, path) -> None:
    meta = json.dumps(model.metadata, sort_keys=True).encode()
    kind = 1 if model.kernel.kind == GAUSSIAN else 0
    parts = [_HEAD.pack(MAGIC, VERSION, int(model.variant == "kernel"), kind,
                        float(model.kernel.sigma)),
             _LEN.pack(len(meta)), meta, _pack(model.coef)]
    if model.variant == "kernel":
        parts.append(_pack(model.x_train))
    parts += [_pack(model.stats.mean), _pack(model.stats.std)]
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


class _Reader:
    def __init__(self, buf):
        self.buf, self.pos = buf, 0

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise ModelFormatError("model file is truncated")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def matrix(self):
        rows, cols = _SHAPE.unpack(self.take(_SHAPE.size))
        data = self.take(8 * rows * cols)
        return np.frombuffer(data, dtype="<f8").reshape(rows, cols).astype(float)


def load_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        r = _Reader(fh.read())
    magic, version, tag, kind, sigma = _HEAD.unpack(r.take(_HEAD.size))
    if magic != MAGIC:
        raise ModelFormatError(f"bad magic bytes {magic!r}, not a DM2L model file")
    if version != VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    if tag not in (0, 1) or kind not in (0, 1):
        raise ModelFormatError("corrupt variant or kernel tag")
    (n_meta,) = _LEN.unpack(r.take(_LEN.size))
    try:
        metadata = json.loads(r.take(n_meta).decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"corrupt metadata: {exc}") from None
    coef = r.matrix()
    x_train = r.matrix() if tag == 1 else None
    stats = FeatureStats(r.matrix().ravel(), r.matrix().ravel())
    if r.pos != len(r.buf):
        raise ModelFormatError("trailing bytes after model payload")
    spec = KernelSpec(GAUSSIAN, sigma) if kind == 1 else KernelSpec(LINEAR, sigma)
    try:
        return TrainedModel("kernel" if tag else "linear", coef, stats, spec, x_train, metadata)
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None
