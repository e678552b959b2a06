"""Descriptor evaluation metrics: FPR95, average precision and its mAP
wrappers for the verification/retrieval/matching protocols, and mean
average accuracy over angular-error thresholds.

Score ties are handled deterministically: equal scores enter an FPR95
prefix together; AP breaks them by original index (stable sort).
"""

from __future__ import annotations

import numpy as np

from .metric import distance_matrix


def fpr95(scores, labels) -> float:
    """False positive rate at the shortest score prefix reaching 95% recall.

    Samples are taken most-confident first; all samples sharing a score
    enter the prefix together.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    n_pos = int(labels.sum())
    n_neg = int((~labels).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("FPR95 needs at least one positive and one negative")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    l = labels[order]
    tp = fp = 0
    i = 0
    n = len(s)
    while i < n:
        j = i
        while j < n and s[j] == s[i]:  # ties enter together
            j += 1
        tp += int(l[i:j].sum())
        fp += int((~l[i:j]).sum())
        if tp / n_pos >= 0.95:
            return fp / n_neg
        i = j
    return fp / n_neg


def average_precision(scores, labels) -> float:
    """AP as the sum over positive ranks of precision times the recall step."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("AP needs at least one positive")
    order = np.argsort(-scores, kind="stable")
    l = labels[order]
    hits = np.cumsum(l)
    ranks = np.arange(1, len(l) + 1)
    return float((hits[l] / ranks[l]).sum() / n_pos)


def verification_ap(scores, labels) -> float:
    """Verification task: one global ranked list of scored pairs."""
    return average_precision(scores, labels)


def retrieval_map(queries) -> float:
    """Mean AP over per-query ranked pools with several positives each."""
    queries = list(queries)
    if not queries:
        raise ValueError("need at least one query")
    return float(np.mean([average_precision(s, l) for s, l in queries]))


def matching_map(desc_ref: np.ndarray, desc_tgt: np.ndarray, gt) -> float:
    """Matching task: each reference descriptor queries all targets, with a
    single positive at its ground-truth index; score is negative distance."""
    desc_ref = np.asarray(desc_ref, dtype=np.float64)
    desc_tgt = np.asarray(desc_tgt, dtype=np.float64)
    gt = np.asarray(gt, dtype=int)
    if desc_ref.shape[0] != desc_tgt.shape[0] or desc_ref.shape[0] != gt.shape[0]:
        raise ValueError("reference, target and ground truth must align")
    d = distance_matrix(desc_ref, desc_tgt)
    aps = []
    for i in range(d.shape[0]):
        labels = np.zeros(d.shape[1], dtype=bool)
        labels[gt[i]] = True
        aps.append(average_precision(-d[i], labels))
    return float(np.mean(aps))


def maa(angular_errors, max_deg: float, step_deg: float = 1.0) -> float:
    """Mean, over thresholds step..max_deg, of the fraction of errors within."""
    errors = np.asarray(angular_errors, dtype=np.float64)
    if errors.size == 0:
        raise ValueError("need at least one angular error")
    if max_deg <= 0 or step_deg <= 0:
        raise ValueError("max_deg and step_deg must be positive")
    thresholds = np.arange(step_deg, max_deg + step_deg / 2, step_deg)
    acc = [(errors <= t).mean() for t in thresholds]
    return float(np.mean(acc))
