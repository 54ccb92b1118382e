"""Boruta all-relevant selection with a random forest."""

from __future__ import annotations

import numpy as np
from scipy.stats import binomtest

from ..featgen.matrix import CohortMatrix
from ..learners.models import ModelSpec, fit_core
from ..learners.preprocess import preprocess_apply, preprocess_fit
from .base import SelectionConfig, SelectionResult, canonical
from .scoring import subset_seed


def boruta(matrix: CohortMatrix, config: SelectionConfig) -> SelectionResult:
    """Each iteration appends a freshly permuted shadow copy of every feature,
    fits a random forest and counts a hit for every real feature whose
    importance beats the best shadow. Undecided features are tested after every
    iteration (two-sided binomial, p = 0.5, Bonferroni over all usable features).
    Decided features stay in the forest so the shadow pool never shrinks.

    ``selected`` holds confirmed features ordered by mean importance and capped
    at ``max_features``. If nothing is confirmed it falls back to tentative
    features, then to the single most important feature, so downstream models
    always receive input; the decisions map still reports the true outcome.
    """
    m, usable, missing = canonical(matrix)
    p = config.params
    alpha = float(p["alpha"])
    pre = preprocess_fit(m.values)
    Z = np.zeros(m.values.shape)
    Z[:, pre.keep] = preprocess_apply(pre, m.values)
    y = m.labels
    d = len(usable)
    status = np.array(["tentative"] * d, dtype=object)
    status[~pre.keep] = "rejected"
    hits = np.zeros(d, dtype=np.int64)
    imp_sum = np.zeros(d)
    imp_n = np.zeros(d, dtype=np.int64)
    rng = np.random.default_rng(config.seed)
    spec = ModelSpec("rf", {"n_estimators": int(p["n_estimators"])})
    trace = []
    shadow_max = []
    it = 0
    for it in range(1, int(p["max_iter"]) + 1):
        undecided = np.flatnonzero(status == "tentative")
        if len(undecided) == 0:
            it -= 1
            break
        shadow = np.empty_like(Z)
        for j in range(d):
            shadow[:, j] = Z[rng.permutation(len(y)), j]
        seed = subset_seed(config.seed, [it])
        rf = fit_core(spec.with_seed(seed), np.hstack([Z, shadow]), y)
        imp = rf.importances
        smax = float(imp[d:].max())
        shadow_max.append(smax)
        real_imp = imp[:d]
        hits += real_imp > smax
        imp_sum += real_imp
        imp_n += 1
        # every usable feature stays in the forest, so correct over all of them
        thresh = alpha / d
        for j in undecided:
            pv = binomtest(int(hits[j]), it, 0.5).pvalue
            if pv < thresh:
                status[j] = "selected" if hits[j] > it / 2 else "rejected"
        trace.append((it, int(np.sum(status == "selected")), smax))
    mean_imp = np.where(imp_n > 0, imp_sum / np.maximum(imp_n, 1), 0.0)

    def ranked(mask):
        idx = np.flatnonzero(mask)
        return [usable[j] for j in sorted(idx, key=lambda j: (-mean_imp[j], usable[j]))]

    confirmed = ranked(status == "selected")
    fallback = None
    chosen = confirmed
    if not chosen:
        chosen = ranked(status == "tentative")
        fallback = "tentative" if chosen else None
    if not chosen:
        chosen = ranked(np.ones(d, dtype=bool))[:1]
        fallback = "top_importance"
    chosen = chosen[: config.max_features]
    decisions = {f: str(s) for f, s in zip(usable, status)}
    for f in missing:
        decisions[f] = "rejected"
    extra = {"iterations": it, "confirmed": confirmed, "fallback": fallback,
             "shadow_max": shadow_max,
             "hits": {str(f): int(h) for f, h in zip(usable, hits)}}
    return SelectionResult("boruta", chosen, trace, decisions, config, extra)
