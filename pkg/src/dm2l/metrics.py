"""Ranking metrics for multi-label scores: Rkl, macro-AUC, coverage, AP.

Tie conventions are fixed: a positive/negative label pair with equal scores
counts as a ranking error in Rkl, while an equal-score positive/negative
instance pair counts as correctly ordered in AUC. For coverage and AP, label
ranks break ties by ascending label index.

Instances (or labels, for AUC) without both classes present are excluded
from the corresponding average; the report records how many were used.
Averages are formed with ``math.fsum`` so the result does not depend on
summation order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

ORACLE_MAX_P = 50
ORACLE_MAX_C = 20


@dataclass(frozen=True)
class EvaluationReport:
    ranking_loss: float
    macro_auc: float
    coverage: float
    average_precision: float
    rkl_count: int
    auc_count: int
    cvg_count: int
    ap_count: int

    def as_dict(self) -> dict:
        return asdict(self)


def _check(scores, labels):
    S = np.asarray(scores, dtype=float)
    Y = np.asarray(labels, dtype=float)
    if S.ndim != 2 or S.shape != Y.shape:
        raise ValueError(f"scores {S.shape} and labels {Y.shape} must be equal 2-d shapes")
    if not np.all(np.abs(Y) == 1):
        raise ValueError("labels must be -1 or +1")
    if np.any(np.isnan(S)):
        raise ValueError("scores contain NaN")
    return S, Y > 0


def _mean(values):
    return math.fsum(values) / len(values) if values else float("nan")


def label_ranks(scores) -> np.ndarray:
    """1-based rank of each label per row; higher score first, ties by label index."""
    S = np.asarray(scores, dtype=float)
    order = np.argsort(-S, axis=1, kind="stable")
    ranks = np.empty_like(order)
    rows = np.arange(S.shape[0])[:, None]
    ranks[rows, order] = np.arange(1, S.shape[1] + 1)
    return ranks


def _rkl_terms(S, P):
    terms = []
    for s, pos in zip(S, P):
        n_pos = int(pos.sum())
        n_neg = pos.size - n_pos
        if n_pos == 0 or n_neg == 0:
            continue
        neg = np.sort(s[~pos])
        # negatives scoring >= each positive
        bad = n_neg - np.searchsorted(neg, s[pos], side="left")
        terms.append(int(bad.sum()) / (n_pos * n_neg))
    return terms


def _auc_terms(S, P):
    terms = []
    for s, pos in zip(S.T, P.T):
        n_pos = int(pos.sum())
        n_neg = pos.size - n_pos
        if n_pos == 0 or n_neg == 0:
            continue
        neg = np.sort(s[~pos])
        # negatives scoring <= each positive
        good = np.searchsorted(neg, s[pos], side="right")
        terms.append(int(good.sum()) / (n_pos * n_neg))
    return terms


def _cvg_terms(S, P):
    R = label_ranks(S)
    return [float(r[pos].max() - 1) for r, pos in zip(R, P) if pos.any()]


def _ap_terms(S, P):
    R = label_ranks(S)
    terms = []
    for r, pos in zip(R, P):
        if not pos.any():
            continue
        pr = np.sort(r[pos])
        # the k-th best-ranked positive has exactly k positives at or above it
        terms.append(math.fsum(np.arange(1, pr.size + 1) / pr) / pr.size)
    return terms


def ranking_loss(scores, labels) -> float:
    terms = _rkl_terms(*_check(scores, labels))
    if not terms:
        raise ValueError("no instance has both positive and negative labels")
    return _mean(terms)


def macro_auc(scores, labels) -> float:
    terms = _auc_terms(*_check(scores, labels))
    if not terms:
        raise ValueError("no label has both positive and negative instances")
    return _mean(terms)


def coverage(scores, labels) -> float:
    """Mean depth of the worst-ranked positive label, minus one (NaN if no row has a positive)."""
    return _mean(_cvg_terms(*_check(scores, labels)))


def average_precision(scores, labels) -> float:
    return _mean(_ap_terms(*_check(scores, labels)))


def evaluate_all(scores, labels) -> EvaluationReport:
    S, P = _check(scores, labels)
    rkl, auc = _rkl_terms(S, P), _auc_terms(S, P)
    if not rkl:
        raise ValueError("no instance has both positive and negative labels")
    if not auc:
        raise ValueError("no label has both positive and negative instances")
    cvg, ap = _cvg_terms(S, P), _ap_terms(S, P)
    return EvaluationReport(_mean(rkl), _mean(auc), _mean(cvg), _mean(ap),
                            len(rkl), len(auc), len(cvg), len(ap))


def brute_force_oracle(scores, labels) -> EvaluationReport:
    """Literal enumeration of every pair and rank; test-scale inputs only."""
    S, P = _check(scores, labels)
    p, c = S.shape
    if p > ORACLE_MAX_P or c > ORACLE_MAX_C:
        raise ValueError(f"oracle limited to p <= {ORACLE_MAX_P}, c <= {ORACLE_MAX_C}")
    S = S.tolist()
    P = P.tolist()

    def rank(i, j):
        return 1 + sum(1 for k in range(c)
                       if S[i][k] > S[i][j] or (S[i][k] == S[i][j] and k < j))

    rkl, auc, cvg, ap = [], [], [], []
    for i in range(p):
        pos = [j for j in range(c) if P[i][j]]
        neg = [j for j in range(c) if not P[i][j]]
        if pos and neg:
            q = sum(1 for a in pos for b in neg if S[i][a] <= S[i][b])
            rkl.append(q / (len(pos) * len(neg)))
        if pos:
            cvg.append(float(max(rank(i, j) for j in pos) - 1))
            terms = []
            for y in pos:
                ry = rank(i, y)
                q = sum(1 for j in pos if rank(i, j) <= ry)
                terms.append(q / ry)
            ap.append(math.fsum(terms) / len(pos))
    for j in range(c):
        pos = [i for i in range(p) if P[i][j]]
        neg = [i for i in range(p) if not P[i][j]]
        if pos and neg:
            q = sum(1 for a in pos for b in neg if S[a][j] >= S[b][j])
            auc.append(q / (len(pos) * len(neg)))
    if not rkl:
        raise ValueError("no instance has both positive and negative labels")
    if not auc:
        raise ValueError("no label has both positive and negative instances")
    return EvaluationReport(_mean(rkl), _mean(auc), _mean(cvg), _mean(ap),
                            len(rkl), len(auc), len(cvg), len(ap))
