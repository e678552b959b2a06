"""Distances, hard-in-batch triplet margin loss, the generalized n-positive
loss, and hardness scores used for dataset reduction.

All math runs in float64. A 1e-8 stabilizer inside the sqrt keeps distances
gradient-safe; independent oracles must add it too.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DIST_EPS = 1e-8


@dataclass
class LossReport:
    total: float
    per_anchor: list
    d_pos: list
    d_neg: list


def distance_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances, D[i, j] = d(a_i, b_j)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * (a @ b.T)
    return np.sqrt(np.maximum(sq, 0.0) + DIST_EPS)


def _check_pairs(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"anchor/positive shape mismatch: {a.shape} vs {b.shape}")
    if a.shape[0] < 2:
        raise ValueError("no negatives in batch: need at least 2 pairs")
    return a, b


def _hard_negatives(a, b):
    """Per anchor i: d_pos, d_neg1 (min_j d(a_i, b_j)), d_neg2 (min_j d(a_j, b_i))."""
    d = distance_matrix(a, b)
    n = d.shape[0]
    d_pos = np.diag(d).copy()
    off = d + np.diag(np.full(n, np.inf))
    d_neg1 = off.min(axis=1)
    d_neg2 = off.min(axis=0)
    return d_pos, np.minimum(d_neg1, d_neg2)


def hard_triplet_loss(a, b, margin: float = 1.0) -> LossReport:
    """Hard-in-batch triplet margin loss over corresponding pairs (a_i, b_i)."""
    a, b = _check_pairs(a, b)
    d_pos, d_neg = _hard_negatives(a, b)
    per_anchor = np.maximum(0.0, margin + d_pos - d_neg)
    return LossReport(total=float(per_anchor.mean()),
                      per_anchor=per_anchor.tolist(),
                      d_pos=d_pos.tolist(), d_neg=d_neg.tolist())


def hardness_scores(a, b) -> np.ndarray:
    """e_i = d(a_i, b_i) - min(d_neg1, d_neg2); negative means an easy pair."""
    a, b = _check_pairs(a, b)
    d_pos, d_neg = _hard_negatives(a, b)
    return d_pos - d_neg


def generalized_loss(e: np.ndarray, labels, margin: float = 1.0) -> LossReport:
    """N-positive generalization: per label, the largest within-label distance
    against the smallest distance to any other label; total is the SUM over
    unique labels (the pairwise loss averages, this one does not)."""
    e = np.asarray(e, dtype=np.float64)
    labels = np.asarray(labels)
    if e.ndim != 2 or e.shape[0] != labels.shape[0]:
        raise ValueError("embeddings and labels must align")
    uniq = []
    seen = set()
    for l in labels.tolist():  # first-appearance order
        if l not in seen:
            seen.add(l)
            uniq.append(l)
    if len(uniq) < 2:
        raise ValueError("need at least 2 distinct labels")
    d = distance_matrix(e, e)
    per_label, d_pos_all, d_neg_all = [], [], []
    for l in uniq:
        same = labels == l
        ds = d[np.ix_(same, same)]
        if same.sum() >= 2:
            d_pos = float(ds[~np.eye(ds.shape[0], dtype=bool)].max())
        else:
            d_pos = 0.0
        d_neg = float(d[np.ix_(same, ~same)].min())
        per_label.append(max(0.0, margin + d_pos - d_neg))
        d_pos_all.append(d_pos)
        d_neg_all.append(d_neg)
    return LossReport(total=float(np.sum(per_label)), per_anchor=per_label,
                      d_pos=d_pos_all, d_neg=d_neg_all)
