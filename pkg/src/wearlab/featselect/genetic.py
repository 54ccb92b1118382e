"""Genetic-algorithm subset search over feature bitmasks."""

from __future__ import annotations

import numpy as np

from ..featgen.matrix import CohortMatrix
from .base import SelectionConfig, SelectionResult, canonical
from .scoring import CVScorer


def _repair(mask: np.ndarray, cap: int, rng: np.random.Generator) -> np.ndarray:
    if not mask.any():
        mask[rng.integers(len(mask))] = True
    on = np.flatnonzero(mask)
    if len(on) > cap:
        mask[rng.choice(on, size=len(on) - cap, replace=False)] = False
    return mask


def genetic_select(matrix: CohortMatrix, config: SelectionConfig, executor=None) -> SelectionResult:
    """Fitness is CV AUC minus ``size_penalty`` per selected feature.

    Tournament selection, uniform crossover, bit-flip mutation (default
    rate 1/d) and elitism; the best individual ever seen is returned, with
    ties kept by first discovery. Initial bits are on with probability
    min(0.5, max_features/d). Empty masks get one random bit, masks above
    ``max_features`` lose random bits.
    """
    m, usable, missing = canonical(matrix)
    p = config.params
    d = len(usable)
    cap = min(config.max_features, d)
    rng = np.random.default_rng(config.seed)
    score = CVScorer(m, config.scorer_model, config.cv_folds, config.seed)
    penalty = float(p["size_penalty"])
    rate = 1.0 / d if p["mutation_rate"] is None else float(p["mutation_rate"])
    memo = {}

    def fitness(mask):
        key = mask.tobytes()
        if key not in memo:
            subset = [usable[j] for j in np.flatnonzero(mask)]
            memo[key] = score(subset) - penalty * len(subset)
        return memo[key]

    def evaluate(pop):
        if executor is not None:
            list(executor.map(lambda mk: score([usable[j] for j in np.flatnonzero(mk)]), pop))
        return np.array([fitness(mk) for mk in pop])

    density = min(0.5, cap / d)
    pop = [_repair(rng.random(d) < density, cap, rng) for _ in range(int(p["population"]))]
    best_mask, best_fit = None, -np.inf
    trace = []
    for gen in range(int(p["generations"])):
        fit = evaluate(pop)
        order = np.argsort(-fit, kind="stable")
        if fit[order[0]] > best_fit:
            best_fit, best_mask = float(fit[order[0]]), pop[order[0]].copy()
        trace.append((gen, int(best_mask.sum()), best_fit))
        if gen == int(p["generations"]) - 1:
            break
        nxt = [pop[i].copy() for i in order[: int(p["elitism"])]]

        def tournament():
            idx = rng.integers(len(pop), size=int(p["tournament"]))
            return pop[idx[np.argmax(fit[idx])]]

        while len(nxt) < len(pop):
            a, b = tournament(), tournament()
            child = np.where(rng.random(d) < float(p["crossover_p"]), a, b)
            child = child ^ (rng.random(d) < rate)
            nxt.append(_repair(child, cap, rng))
        pop = nxt
    selected = [usable[j] for j in np.flatnonzero(best_mask)]
    decisions = {f: ("selected" if f in selected else "rejected") for f in usable}
    for f in missing:
        decisions[f] = "rejected"
    return SelectionResult("genetic", selected, trace, decisions, config,
                           {"best_fitness": best_fit, "distinct_evaluated": len(memo)})
