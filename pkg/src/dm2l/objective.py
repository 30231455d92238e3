"""The DM2L objective, its convex/concave split and the CCCP surrogate.

The same code serves the linear problem (design ``Z = X``, parameters
``W``) and the kernel problem (design ``Z = K``, parameters ``A``)::

    J(T) = 1/2 ||R_Omega(Z T) - Y_obs||_F^2
           + lam * (sum_k ||Z[group_k] T||_* - ||Z T||_*)

``J_vex`` is the loss plus the local sum; ``J_cave = -lam ||Z T||_*``.
Two ablation forms reuse the machinery: ``"local"`` drops the subtracted
global term, ``"global"`` keeps only ``+lam ||Z T||_*`` (fully convex).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset_io import ObservedLabelMatrix
from .nucnorm import DEFAULT_DELTA, norm_and_subgradient

FORMS = ("dm2l", "local", "global")


@dataclass(frozen=True)
class LabelGroups:
    """Per-label row indices of the observed positive instances."""

    groups: tuple

    def __len__(self):
        return len(self.groups)

    def __getitem__(self, k):
        return self.groups[k]

    def covered_rows(self) -> np.ndarray:
        if not self.groups:
            return np.array([], dtype=int)
        return np.unique(np.concatenate(self.groups))


def build_label_groups(observed: ObservedLabelMatrix) -> LabelGroups:
    V = observed.values
    return LabelGroups(tuple(np.flatnonzero(V[:, k] > 0) for k in range(V.shape[1])))


@dataclass(frozen=True)
class ObjectiveSpec:
    design: np.ndarray
    observed: ObservedLabelMatrix
    groups: LabelGroups
    lam: float = 0.0
    delta: float = DEFAULT_DELTA
    form: str = "dm2l"

    def __post_init__(self):
        Z = np.asarray(self.design, dtype=float)
        if Z.ndim != 2 or Z.shape[0] != self.observed.shape[0]:
            raise ValueError(
                f"design has shape {Z.shape}, labels have {self.observed.shape}")
        if len(self.groups) != self.observed.shape[1]:
            raise ValueError("need one label group per label")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}")
        n = Z.shape[0]
        for g in self.groups:
            if len(g) and (g.min() < 0 or g.max() >= n):
                raise IndexError("label group index out of range")
        object.__setattr__(self, "design", Z)

    @property
    def n_params(self) -> int:
        return self.design.shape[1]

    @property
    def n_labels(self) -> int:
        return self.observed.shape[1]

    def with_lam(self, lam) -> "ObjectiveSpec":
        return ObjectiveSpec(self.design, self.observed, self.groups, lam,
                             self.delta, self.form)


@dataclass(frozen=True)
class ObjectiveParts:
    loss: float
    local_sum: float
    global_: float
    total: float


def _check_theta(theta, spec):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.n_params, spec.n_labels):
        raise ValueError(
            f"parameters must be {(spec.n_params, spec.n_labels)}, got {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("parameters contain non-finite values")
    return theta


def _residual(P, spec):
    obs = spec.observed
    return np.where(obs.mask.observed, P, 0.0) - obs.values


def _local_terms(P, spec, with_grad):
    """Left-to-right sum of group nuclear norms, and their scattered subgradients."""
    total = 0.0
    scatter = np.zeros_like(P) if with_grad else None
    for g in spec.groups:
        if len(g) == 0:
            continue
        value, G, _ = norm_and_subgradient(P[g], spec.delta)
        total += value
        if with_grad:
            scatter[g] += G
    return total, scatter


def objective_value(theta, spec: ObjectiveSpec) -> ObjectiveParts:
    theta = _check_theta(theta, spec)
    P = spec.design @ theta
    R = _residual(P, spec)
    loss = 0.5 * float(np.sum(R * R))
    local, _ = _local_terms(P, spec, with_grad=False)
    glob, _, _ = norm_and_subgradient(P, spec.delta)
    if spec.form == "dm2l":
        reg = local - glob
    elif spec.form == "local":
        reg = local
    else:
        reg = glob
    return ObjectiveParts(loss, local, glob, loss + spec.lam * reg)


def convex_value_and_subgradient(theta, spec: ObjectiveSpec):
    """``(J_vex(T), subgradient of J_vex at T)`` sharing one set of SVDs."""
    theta = _check_theta(theta, spec)
    P = spec.design @ theta
    R = _residual(P, spec)
    loss = 0.5 * float(np.sum(R * R))
    if spec.lam == 0:
        return loss, spec.design.T @ R
    if spec.form == "global":
        reg, G, _ = norm_and_subgradient(P, spec.delta)
    else:
        reg, G = _local_terms(P, spec, with_grad=True)
    grad = spec.design.T @ (R + spec.lam * G)
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite subgradient")
    return loss + spec.lam * reg, grad


def convex_subgradient(theta, spec: ObjectiveSpec) -> np.ndarray:
    return convex_value_and_subgradient(theta, spec)[1]


def concave_linearization(theta_t, spec: ObjectiveSpec):
    """Tangent affine map ``T -> <C, T> + offset`` of ``J_cave`` at ``theta_t``."""
    theta_t = _check_theta(theta_t, spec)
    if spec.form != "dm2l" or spec.lam == 0:
        return np.zeros_like(theta_t), 0.0
    value, G, _ = norm_and_subgradient(spec.design @ theta_t, spec.delta)
    C = -spec.lam * (spec.design.T @ G)
    offset = -spec.lam * value - float(np.sum(C * theta_t))
    return C, offset


def convex_value(theta, spec: ObjectiveSpec) -> float:
    parts = objective_value(theta, spec)
    if spec.lam == 0:
        return parts.loss
    reg = parts.global_ if spec.form == "global" else parts.local_sum
    return parts.loss + spec.lam * reg


def surrogate_value(theta, theta_t, spec: ObjectiveSpec, linearization=None) -> float:
    """``J_vex(T) + <C_t, T> + offset``; pass ``linearization`` to reuse ``(C_t, offset)``."""
    if linearization is None:
        linearization = concave_linearization(theta_t, spec)
    C, offset = linearization
    theta = np.asarray(theta, dtype=float)
    return convex_value(theta, spec) + float(np.sum(C * theta)) + offset
