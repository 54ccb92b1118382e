"""AUC, ROC and stratified fold assignment shared by selection and evaluation."""

from __future__ import annotations

from typing import List, Tuple

import numpy as np


def auc(pos_scores, neg_scores) -> float:
    """Mann-Whitney AUC: share of (pos, neg) pairs ordered correctly, ties count half."""
    pos = np.asarray(pos_scores, dtype=float).ravel()
    neg = np.sort(np.asarray(neg_scores, dtype=float).ravel())
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("auc needs at least one positive and one negative score")
    below = np.searchsorted(neg, pos, side="left")
    upto = np.searchsorted(neg, pos, side="right")
    wins = 2 * int(below.sum()) + int((upto - below).sum())
    return wins / (2.0 * len(pos) * len(neg))


def roc_curve(pos_scores, neg_scores) -> List[Tuple[float, float, float]]:
    """``(fpr, tpr, threshold)`` for every distinct threshold, from (0,0) to (1,1).

    A subject is called positive when its score is >= the threshold. The
    first point uses threshold +inf.
    """
    pos = np.asarray(pos_scores, dtype=float).ravel()
    neg = np.asarray(neg_scores, dtype=float).ravel()
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("roc_curve needs both classes")
    pts = [(0.0, 0.0, float("inf"))]
    ps = np.sort(pos)
    ns = np.sort(neg)
    for t in np.unique(np.concatenate([pos, neg]))[::-1]:
        tp = len(ps) - np.searchsorted(ps, t, side="left")
        fp = len(ns) - np.searchsorted(ns, t, side="left")
        pts.append((fp / len(ns), tp / len(ps), float(t)))
    return pts


def trapezoid_area(curve) -> float:
    area = 0.0
    for (f0, t0, _), (f1, t1, _) in zip(curve, curve[1:]):
        area += (f1 - f0) * (t0 + t1) / 2.0
    return area


def stratified_folds(labels, n_folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold index per row; each class is shuffled and dealt round-robin."""
    y = np.asarray(labels)
    folds = np.empty(len(y), dtype=np.int64)
    offset = 0
    for cls in (1, 0):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(len(idx))]
        folds[idx] = (np.arange(len(idx)) + offset) % n_folds
        offset += len(idx)
    return folds
