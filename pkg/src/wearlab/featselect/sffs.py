"""Sequential forward floating selection."""

from __future__ import annotations

from typing import List

from ..featgen.matrix import CohortMatrix
from .base import SelectionConfig, SelectionResult, canonical
from .scoring import CVScorer

CHANCE_AUC = 0.5


def _map(executor, fn, items):
    if executor is None:
        return [fn(x) for x in items]
    return list(executor.map(fn, items))


def sffs(matrix: CohortMatrix, config: SelectionConfig, executor=None) -> SelectionResult:
    """Forward steps add the best candidate while it gains more than ``epsilon_gain``;
    after each addition, removals that strictly raise the score are applied.

    Equal scores resolve to the lowest feature id. The empty set scores as
    chance (AUC 0.5).
    """
    m, usable, missing = canonical(matrix)
    cap = min(config.max_features, len(usable))
    eps = float(config.params["epsilon_gain"])
    score = CVScorer(m, config.scorer_model, config.cv_folds, config.seed)
    selected: List[int] = []
    current = CHANCE_AUC
    trace = []
    visited = set()
    step = 0
    while len(selected) < cap:
        cands = [f for f in usable if f not in selected]
        scores = _map(executor, lambda f: score(selected + [f]), cands)
        visited.update(cands)
        best_f, best_s = None, None
        for f, s in zip(cands, scores):
            if best_s is None or s > best_s:
                best_f, best_s = f, s
        if best_s - current <= eps:
            break
        selected.append(best_f)
        current = best_s
        step += 1
        trace.append((step, len(selected), current))
        # floating: drop features while that strictly improves the score
        while len(selected) > 2:
            drops = [f for f in selected if f != best_f]
            rm_scores = _map(executor, lambda f: score([g for g in selected if g != f]), drops)
            rm_f, rm_s = None, None
            for f, s in zip(drops, rm_scores):
                if rm_s is None or s > rm_s or (s == rm_s and f < rm_f):
                    rm_f, rm_s = f, s
            if rm_s <= current:
                break
            selected.remove(rm_f)
            current = rm_s
            step += 1
            trace.append((step, len(selected), current))
    decisions = {}
    for f in usable:
        decisions[f] = "selected" if f in selected else ("rejected" if f in visited else "unvisited")
    for f in missing:
        decisions[f] = "rejected"
    return SelectionResult("sffs", list(selected), trace, decisions, config,
                           {"n_evaluations": score.n_evaluations, "final_score": current})
