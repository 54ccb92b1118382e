"""Cross-validated AUC of a feature subset, with per-fold caching."""

from __future__ import annotations

import hashlib
import threading
from typing import Dict, FrozenSet, Sequence

import numpy as np

from ..featgen.matrix import CohortMatrix
from ..learners import _kernels as K
from ..learners.models import ModelSpec, fit_core
from ..learners.preprocess import preprocess_apply, preprocess_fit
from ..metrics import auc, stratified_folds


def subset_seed(seed: int, subset) -> int:
    """Model seed derived from the run seed and the subset's content."""
    key = f"{int(seed)}:" + ",".join(str(int(f)) for f in sorted(subset))
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "little")


class _Fold:
    __slots__ = ("train", "test", "keep", "Ztr", "Zte", "ytr", "yte", "order", "vals")


class CVScorer:
    """Scores feature subsets of one matrix by stratified k-fold mean AUC.

    Preprocessing acts column by column, so it is fitted once per training
    fold over every column and reused for all subsets. Fold assignment and
    model seeds depend only on ``seed`` and the subset, which makes each
    score a pure function of ``(subset, seed)``.
    """

    def __init__(self, matrix: CohortMatrix, model_spec: ModelSpec, folds: int = 5, seed: int = 0):
        if folds < 2:
            raise ValueError("cv needs at least 2 folds")
        y = matrix.labels
        for cls in (0, 1):
            if np.sum(y == cls) < folds:
                raise ValueError(f"class {cls} has fewer members ({int(np.sum(y == cls))}) "
                                 f"than folds ({folds}); a fold would lack that class")
        self.matrix = matrix
        self.spec = model_spec
        self.seed = int(seed)
        self.n_folds = folds
        self.col_of = {int(f): j for j, f in enumerate(matrix.feature_ids)}
        assign = stratified_folds(y, folds, np.random.default_rng(self.seed))
        X = matrix.values
        self.folds = []
        for k in range(folds):
            fd = _Fold()
            fd.test = np.flatnonzero(assign == k)
            fd.train = np.flatnonzero(assign != k)
            pre = preprocess_fit(X[fd.train])
            fd.keep = pre.keep
            # dropped columns become all-zero, which no model can use
            Ztr = np.zeros((len(fd.train), X.shape[1]))
            Zte = np.zeros((len(fd.test), X.shape[1]))
            Ztr[:, pre.keep] = preprocess_apply(pre, X[fd.train])
            Zte[:, pre.keep] = preprocess_apply(pre, X[fd.test])
            fd.Ztr, fd.Zte = Ztr, Zte
            fd.ytr = y[fd.train].astype(np.float64)
            fd.yte = y[fd.test].astype(np.float64)
            self.folds.append(fd)
        if self.spec.kind == "gb":
            self._stack()
        self._cache: Dict[FrozenSet[int], float] = {}
        self._lock = threading.Lock()
        self.n_evaluations = 0

    def _stack(self):
        """Concatenate fold arrays for the single-call boosted-tree path."""
        fs = self.folds
        self.s_Ztr = np.ascontiguousarray(np.vstack([f.Ztr for f in fs]))
        self.s_Zte = np.ascontiguousarray(np.vstack([f.Zte for f in fs]))
        self.s_ytr = np.concatenate([f.ytr for f in fs])
        self.s_yte = np.concatenate([f.yte for f in fs])
        sorted_parts = [K.presort(f.Ztr) for f in fs]
        self.s_order = np.ascontiguousarray(np.hstack([o for o, _ in sorted_parts]))
        self.s_vals = np.ascontiguousarray(np.hstack([v for _, v in sorted_parts]))
        self.s_tr_off = np.cumsum([0] + [len(f.train) for f in fs]).astype(np.int64)
        self.s_te_off = np.cumsum([0] + [len(f.test) for f in fs]).astype(np.int64)
        self.s_keep = np.vstack([f.keep for f in fs])
        p = self.spec.params
        self.s_params = (int(p["n_estimators"]), int(p["max_depth"]), float(p["learning_rate"]),
                         int(p["min_samples_leaf"]))

    def _fold_score(self, fd: _Fold, cols: np.ndarray, model_seed: int) -> float:
        cols = cols[fd.keep[cols]]
        if len(cols) == 0:
            return 0.5
        model = fit_core(self.spec.with_seed(model_seed), fd.Ztr[:, cols], fd.ytr.astype(np.int64))
        s = np.clip(model.proba(fd.Zte[:, cols]), 0.0, 1.0)
        return auc(s[fd.yte == 1], s[fd.yte == 0])

    def __call__(self, subset: Sequence[int]) -> float:
        key = frozenset(int(f) for f in subset)
        if not key:
            raise ValueError("cannot score an empty feature subset")
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        cols = np.array([self.col_of[f] for f in sorted(key)], dtype=np.int64)
        if self.spec.kind == "gb":
            score = float(K.gb_cv_auc(self.s_Ztr, self.s_order, self.s_vals, self.s_ytr,
                                      self.s_Zte, self.s_yte, self.s_tr_off, self.s_te_off,
                                      self.s_keep, cols, *self.s_params))
        else:
            model_seed = subset_seed(self.seed, key)
            score = float(np.mean([self._fold_score(fd, cols, model_seed) for fd in self.folds]))
        with self._lock:
            self._cache[key] = score
            self.n_evaluations += 1
        return score


def cv_score(matrix: CohortMatrix, feature_subset: Sequence[int], model_spec: ModelSpec,
             folds: int = 5, seed: int = 0) -> float:
    """Mean AUC over stratified folds with fold-local preprocessing."""
    if len(feature_subset) == 0:
        raise ValueError("cannot score an empty feature subset")
    sub = matrix.select_features(sorted(set(int(f) for f in feature_subset)))
    return CVScorer(sub, model_spec, folds, seed)(sub.feature_ids)
