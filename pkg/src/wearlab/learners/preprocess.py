"""Fold-local mean imputation and z-scoring."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

MAX_MISSING_FRACTION = 0.5


@dataclass(frozen=True)
class Preprocessor:
    """Training-row statistics for one fold.

    ``keep`` marks retained columns of the input; ``means`` and ``stds``
    cover retained columns only. ``feature_ids`` mirrors the input columns
    when known so dropped ids can be reported.
    """

    keep: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    feature_ids: Optional[np.ndarray] = None

    @property
    def n_in(self) -> int:
        return len(self.keep)

    @property
    def n_out(self) -> int:
        return int(self.keep.sum())

    @property
    def dropped(self) -> np.ndarray:
        ids = self.feature_ids if self.feature_ids is not None else np.arange(self.n_in)
        return np.asarray(ids)[~self.keep]

    def to_json(self) -> dict:
        return {
            "keep": self.keep.astype(int).tolist(),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "feature_ids": None if self.feature_ids is None else [int(f) for f in self.feature_ids],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Preprocessor":
        fids = doc.get("feature_ids")
        return cls(np.asarray(doc["keep"], dtype=bool), np.asarray(doc["means"], dtype=float),
                   np.asarray(doc["stds"], dtype=float),
                   None if fids is None else np.asarray(fids, dtype=np.int64))


def preprocess_fit(rows, feature_ids=None) -> Preprocessor:
    X = np.asarray(rows, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("preprocessing needs at least 2 training rows")
    n = X.shape[0]
    observed = ~np.isnan(X)
    n_obs = observed.sum(axis=0)
    with np.errstate(invalid="ignore", all="ignore"):
        lo = np.where(observed, X, np.inf).min(axis=0)
        hi = np.where(observed, X, -np.inf).max(axis=0)
    keep = (n_obs > 0) & (n_obs >= (1 - MAX_MISSING_FRACTION) * n) & (hi > lo)
    Xk = X[:, keep]
    means = np.nanmean(Xk, axis=0) if keep.any() else np.zeros(0)
    filled = np.where(np.isnan(Xk), means, Xk)
    stds = filled.std(axis=0)
    stds = np.where(stds > 0, stds, 1.0)
    return Preprocessor(keep, means, stds, None if feature_ids is None else np.asarray(feature_ids))


def preprocess_apply(p: Preprocessor, rows) -> np.ndarray:
    X = np.asarray(rows, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != p.n_in:
        raise ValueError(f"expected {p.n_in} columns, got {X.shape[1]}")
    Xk = X[:, p.keep]
    Xk = np.where(np.isnan(Xk), p.means, Xk)
    Z = (Xk - p.means) / p.stds
    return Z[0] if single else Z
