"""CCCP outer loop with a subgradient-descent inner solver."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .dataset_io import ObservedLabelMatrix
from .nucnorm import DEFAULT_DELTA
from .objective import (
    LabelGroups,
    ObjectiveSpec,
    build_label_groups,
    concave_linearization,
    convex_value_and_subgradient,
    objective_value,
)

log = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITERS = "max_iters"
STALLED = "stalled"


@dataclass(frozen=True)
class CccpConfig:
    """Solver settings.

    ``inner_step`` is the base step ``eta0`` of the inner schedule
    ``eta0 / sqrt(t)``. The default ``"auto"`` uses ``1 / ||Z||_2^2``, the
    reciprocal Lipschitz constant of the loss gradient, so one setting works
    for feature matrices and Gram matrices alike.
    """

    max_outer: int = 50
    max_inner: int = 200
    inner_step: float | str = "auto"
    outer_rel_tol: float = 1e-5
    delta: float = DEFAULT_DELTA
    lam: float = 0.0
    seed: int = 0
    stall_patience: int = 5

    def __post_init__(self):
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration limits must be positive")
        if self.inner_step != "auto" and not float(self.inner_step) > 0:
            raise ValueError("inner_step must be positive or 'auto'")
        if not self.outer_rel_tol > 0 or not self.delta > 0 or self.lam < 0:
            raise ValueError("outer_rel_tol and delta must be positive, lam nonnegative")


@dataclass
class OuterStep:
    iteration: int
    objective: float
    best_objective: float
    surrogate: float
    inner_iters: int
    seconds: float


@dataclass
class CccpTrace:
    steps: list = field(default_factory=list)
    status: str = MAX_ITERS

    @property
    def objectives(self) -> np.ndarray:
        return np.array([s.objective for s in self.steps])

    @property
    def best_objectives(self) -> np.ndarray:
        return np.array([s.best_objective for s in self.steps])

    @property
    def outer_iterations(self) -> int:
        return len(self.steps) - 1

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "objective", "surrogate", "inner_iters", "seconds"])
            for s in self.steps:
                w.writerow([s.iteration, repr(s.objective), repr(s.surrogate),
                            s.inner_iters, f"{s.seconds:.6f}"])


def init_parameters(p: int, c: int) -> np.ndarray:
    """Rectangular truncation of the identity."""
    if p < 1 or c < 1:
        raise ValueError("p and c must be positive")
    return np.eye(p, c)


def resolve_step(spec: ObjectiveSpec, cfg: CccpConfig) -> float:
    if cfg.inner_step != "auto":
        return float(cfg.inner_step)
    L = np.linalg.norm(spec.design, 2) ** 2
    return 1.0 / L if L > 0 else 1.0


def _inner(spec, theta_t, lin, eta0, max_inner):
    C, offset = lin
    value, grad = convex_value_and_subgradient(theta_t, spec)
    start = value + float(np.sum(C * theta_t)) + offset
    best, best_val = theta_t, start
    theta = theta_t
    used = 0
    for t in range(1, max_inner + 1):
        g = grad + C
        if not np.any(g):
            break
        theta = theta - (eta0 / np.sqrt(t)) * g
        if not np.all(np.isfinite(theta)):
            raise FloatingPointError(
                f"inner iterate became non-finite at step {t} (eta0={eta0:g}, lam={spec.lam:g})")
        used = t
        value, grad = convex_value_and_subgradient(theta, spec)
        val = value + float(np.sum(C * theta)) + offset
        if val < best_val:
            best, best_val = theta, val
    return best, best_val, start, used


def inner_solve(spec: ObjectiveSpec, theta_t, cfg: CccpConfig | None = None) -> np.ndarray:
    """Best iterate of ``max_inner`` subgradient steps on the surrogate at ``theta_t``.

    Never returns a point with larger surrogate value than ``theta_t``.
    """
    cfg = cfg or CccpConfig()
    theta_t = np.asarray(theta_t, dtype=float)
    lin = concave_linearization(theta_t, spec)
    best, _, _, _ = _inner(spec, theta_t, lin, resolve_step(spec, cfg), cfg.max_inner)
    return best


def fit(spec: ObjectiveSpec, cfg: CccpConfig | None = None, theta0=None):
    """Run CCCP; returns ``(theta_best, trace)``."""
    cfg = cfg or CccpConfig()
    eta0 = resolve_step(spec, cfg)
    theta = init_parameters(spec.n_params, spec.n_labels) if theta0 is None else np.array(theta0, dtype=float)
    t0 = time.perf_counter()
    J = objective_value(theta, spec).total
    best_theta, best_J = theta, J
    trace = CccpTrace()
    trace.steps.append(OuterStep(0, J, J, J, 0, time.perf_counter() - t0))
    flat = 0
    for it in range(1, cfg.max_outer + 1):
        tic = time.perf_counter()
        lin = concave_linearization(theta, spec)
        new_theta, sur, _, used = _inner(spec, theta, lin, eta0, cfg.max_inner)
        J_new = objective_value(new_theta, spec).total
        if J_new < best_J:
            best_theta, best_J = new_theta, J_new
        trace.steps.append(OuterStep(it, J_new, best_J, sur, used, time.perf_counter() - tic))
        scale = cfg.outer_rel_tol * max(1.0, abs(J))
        if abs(J_new - J) <= scale:
            trace.status = CONVERGED
            break
        flat = flat + 1 if J - J_new < scale else 0
        if flat >= cfg.stall_patience:
            trace.status = STALLED
            break
        theta, J = new_theta, J_new
    log.debug("cccp %s after %d outer iterations, objective %.6g",
              trace.status, trace.outer_iterations, best_J)
    return best_theta, trace


def _groups_for(observed, groups):
    return build_label_groups(observed) if groups is None else groups


def fit_linear(X, observed: ObservedLabelMatrix, groups: LabelGroups | None = None,
               lam=None, cfg: CccpConfig | None = None, form="dm2l"):
    """Fit ``W`` (d x c) on features ``X``; returns ``(W, trace)``."""
    cfg = cfg or CccpConfig()
    spec = ObjectiveSpec(X, observed, _groups_for(observed, groups),
                         cfg.lam if lam is None else lam, cfg.delta, form)
    return fit(spec, cfg)


def fit_kernel(K, observed: ObservedLabelMatrix, groups: LabelGroups | None = None,
               lam=None, cfg: CccpConfig | None = None, form="dm2l"):
    """Fit coefficients ``A`` (n x c) on a Gram matrix ``K``; returns ``(A, trace)``."""
    cfg = cfg or CccpConfig()
    K = getattr(K, "values", K)
    spec = ObjectiveSpec(K, observed, _groups_for(observed, groups),
                         cfg.lam if lam is None else lam, cfg.delta, form)
    return fit(spec, cfg)
