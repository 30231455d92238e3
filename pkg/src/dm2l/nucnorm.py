"""Nuclear norm and the thresholded-SVD subgradient."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_DELTA = 0.005


@dataclass(frozen=True)
class SubgradientResult:
    G: np.ndarray
    retained: int
    threshold: float


def _finite(M):
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    return M


def nuclear_norm(M) -> float:
    """Sum of the singular values of ``M`` (0 for an empty matrix)."""
    M = _finite(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False).sum())


def norm_and_subgradient(M, delta=DEFAULT_DELTA):
    """Return ``(||M||_*, G, s)`` from a single thin SVD.

    ``G = U1 V1^T`` keeps the ``s`` singular pairs with value strictly above
    ``delta``. Wide inputs are handled through the transpose.
    """
    M = _finite(M)
    if M.size == 0:
        return 0.0, np.zeros_like(M), 0
    if M.shape[1] > M.shape[0]:
        value, Gt, s = norm_and_subgradient(M.T, delta)
        return value, Gt.T, s
    U, sv, Vt = np.linalg.svd(M, full_matrices=False)
    s = int(np.count_nonzero(sv > delta))
    G = U[:, :s] @ Vt[:s]
    return float(sv.sum()), G, s


def nuclear_norm_subgradient(M, delta=DEFAULT_DELTA) -> SubgradientResult:
    if not delta > 0:
        raise ValueError("delta must be positive")
    _, G, s = norm_and_subgradient(M, delta)
    return SubgradientResult(G, s, float(delta))
