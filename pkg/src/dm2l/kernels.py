"""Gram and cross-kernel matrices for the linear and Gaussian kernels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

LINEAR = "linear"
GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class KernelSpec:
    kind: str = LINEAR
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in (LINEAR, GAUSSIAN):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == GAUSSIAN and not self.sigma > 0:
            raise ValueError("Gaussian kernel needs sigma > 0")

    @classmethod
    def gaussian(cls, sigma) -> "KernelSpec":
        return cls(GAUSSIAN, float(sigma))


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    spec: KernelSpec


def _check_finite(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("feature matrix must be 2-d")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    return X


def cross_kernel(X_test, X_train, spec: KernelSpec) -> np.ndarray:
    """Kernel values between every test row and every training row (m x n)."""
    A = _check_finite(X_test)
    B = _check_finite(X_train)
    if A.shape[1] != B.shape[1]:
        raise ValueError(
            f"feature dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.kind == LINEAR:
        return A @ B.T
    # cdist works on differences directly, so zero distances come out exact
    sq = cdist(A, B, "sqeuclidean")
    return np.exp(-sq / (2.0 * spec.sigma ** 2))


def gram_matrix(X, spec: KernelSpec) -> GramMatrix:
    X = _check_finite(X)
    if X.shape[0] < 1:
        raise ValueError("need at least one instance")
    K = cross_kernel(X, X, spec)
    # exact symmetry; the linear product can differ in the last bit
    K = 0.5 * (K + K.T)
    return GramMatrix(K, spec)


def group_rows(M, group) -> np.ndarray:
    """Row submatrix ``M[group]`` in the given order (``X_k`` or ``K_k``)."""
    M = np.asarray(M)
    idx = np.asarray(group, dtype=int).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= M.shape[0]):
        raise IndexError(f"row index out of range for {M.shape[0]} rows")
    return M[idx]
