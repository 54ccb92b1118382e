"""Paired leave-one-out evaluation over seeded runs, plus report output."""

from __future__ import annotations

import csv
import hashlib
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .featgen.matrix import CohortMatrix
from .featselect import CVScorer, SelectionConfig, run_selector
from .learners.models import ModelSpec, fit, predict_proba
from .metrics import auc, roc_curve, trapezoid_area  # noqa: F401  (re-exported)

SCENARIOS = ("ds4", "ds6", "ds7", "ds8", "ds9", "combined")
SELECTOR_COLUMNS = ("sffs", "boruta", "genetic", "all")
DEFAULT_SEEDS = (0, 1, 2, 3, 4)


@dataclass(frozen=True)
class Split:
    test: tuple  # (positive row, negative row)
    train: np.ndarray


@dataclass
class SplitPlan:
    splits: List[Split]

    def __len__(self):
        return len(self.splits)

    def test_counts(self, n: int) -> np.ndarray:
        counts = np.zeros(n, dtype=np.int64)
        for s in self.splits:
            for i in s.test:
                counts[i] += 1
        return counts


def make_loocv_splits(labels, seed: int = 0) -> SplitPlan:
    """One positive and one negative test subject per split.

    Both classes are shuffled by ``seed``. Majority subject ``i`` is paired
    with minority subject ``i mod n_minority``, so there is one split per
    majority subject and minority subjects recur as evenly as possible.
    Equal class sizes treat the positive class as the majority.
    """
    y = np.asarray(labels)
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("both classes need at least one subject")
    rng = np.random.default_rng(seed)
    pos = pos[rng.permutation(len(pos))]
    neg = neg[rng.permutation(len(neg))]
    major, minor = (pos, neg) if len(pos) >= len(neg) else (neg, pos)
    all_rows = np.arange(len(y))
    splits = []
    for i, a in enumerate(major):
        b = minor[i % len(minor)]
        p, n = (a, b) if y[a] == 1 else (b, a)
        train = all_rows[(all_rows != p) & (all_rows != n)]
        splits.append(Split((int(p), int(n)), train))
    return SplitPlan(splits)


def scenario_features(matrix: CohortMatrix, scenario: str) -> List[int]:
    if scenario not in SCENARIOS:
        raise ValueError(f"unknown scenario {scenario!r}; valid: {', '.join(SCENARIOS)}")
    ids = [int(f) for f in matrix.feature_ids]
    if scenario == "combined":
        return ids
    wanted = set(matrix.registry.ids(scenario.upper()))
    return [f for f in ids if f in wanted]


def derive_seed(*parts: int) -> int:
    key = ":".join(str(int(p)) for p in parts)
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "little")


@dataclass
class SplitOutcome:
    run_seed: int
    split_index: int
    test: tuple
    probabilities: tuple
    selected: List[int]
    fit_hash: str


def fit_fingerprint(selected: Sequence[int], model) -> str:
    """Hash of everything fitted on training rows (selection + preprocessing + model)."""
    doc = {"selected": [int(f) for f in selected], "model": model.to_json()}
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


GRID_FOLDS = 3


def grid_candidates(model: ModelSpec, grid: Dict[str, list]) -> List[ModelSpec]:
    """Every combination of ``grid`` values over ``model``, keys in sorted order."""
    keys = sorted(grid)
    return [ModelSpec(model.kind, {**model.params, **dict(zip(keys, combo))}, model.seed)
            for combo in itertools.product(*(grid[k] for k in keys))]


def tune_model(train: CohortMatrix, selected: Sequence[int], model: ModelSpec,
               grid: Dict[str, list], seed: int, folds: int = GRID_FOLDS) -> ModelSpec:
    """Inner cross-validated grid search on training rows only; first best candidate wins."""
    sub = train.select_features(list(selected))
    best, best_score = None, None
    for cand in grid_candidates(model, grid):
        score = CVScorer(sub, cand, folds, seed)(list(selected))
        if best_score is None or score > best_score:
            best, best_score = cand, score
    return best


def run_split(matrix: CohortMatrix, split: Split, selector: Optional[SelectionConfig],
              model: ModelSpec, split_seed: int, fixed_selection: Optional[List[int]] = None,
              model_grid: Optional[Dict[str, list]] = None):
    """Select, tune, preprocess and fit on the training rows; score the two test rows."""
    train = matrix.select_rows(split.train)
    if fixed_selection is not None:
        selected = list(fixed_selection)
    elif selector is None:
        selected = [int(f) for f in matrix.feature_ids]
    else:
        selected = run_selector(train, selector.with_seed(split_seed)).selected
    if model_grid:
        model = tune_model(train, selected, model, model_grid, split_seed)
    fitted = fit(model.with_seed(split_seed), train.columns(selected), train.labels, selected)
    test_rows = matrix.columns(selected)[list(split.test)]
    probs = predict_proba(fitted, test_rows)
    return selected, fitted, probs


@dataclass
class EvalReport:
    scenario: str
    selector: str
    model: str
    per_run_auc: List[float]
    mean_auc: float
    roc: List[tuple]
    per_subject_scores: Dict[str, float]
    config: dict
    seeds: List[int]
    leaky_selection: bool = False
    selection_frequency: Dict[int, int] = field(default_factory=dict)
    fit_hashes: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "selector": self.selector,
            "model": self.model,
            "leaky_selection": self.leaky_selection,
            "seeds": [int(s) for s in self.seeds],
            "per_run_auc": [float(a) for a in self.per_run_auc],
            "mean_auc": float(self.mean_auc),
            "roc": [[float(f), float(t), _json_float(th)] for f, t, th in self.roc],
            "per_subject_scores": {k: float(v) for k, v in sorted(self.per_subject_scores.items())},
            "selection_frequency": {str(k): int(v) for k, v in sorted(self.selection_frequency.items())},
            "fit_hashes": list(self.fit_hashes),
            "config": self.config,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=True) + "\n"


def _json_float(x):
    x = float(x)
    return "inf" if x == float("inf") else x


def run_experiment(matrix: CohortMatrix, scenario: str, selector: Optional[SelectionConfig],
                   model: ModelSpec, seeds: Sequence[int] = DEFAULT_SEEDS, *,
                   leaky_selection: bool = False, threads: int = 1,
                   model_grid: Optional[Dict[str, list]] = None) -> EvalReport:
    """Paired leave-one-out over every seed; selection and preprocessing stay inside each split.

    Per run, a subject's score is the mean of its test predictions and the
    run AUC is computed over subjects. The reported ROC uses per-subject
    scores averaged over all runs. With ``leaky_selection`` the selector
    runs once per seed on the full matrix (labelled as such in the report).
    A ``model_grid`` maps hyperparameter names to candidate values; each
    split then picks its model by inner cross-validation on its training rows.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("at least one seed is required")
    if model_grid:
        grid_candidates(model, model_grid)  # validates names and values up front
    m = matrix.select_features(scenario_features(matrix, scenario))
    y = m.labels
    tasks = []
    fixed: Dict[int, List[int]] = {}
    for s in seeds:
        plan = make_loocv_splits(y, s)
        if leaky_selection and selector is not None:
            fixed[s] = run_selector(m, selector.with_seed(derive_seed(s, -1))).selected
        for i, sp in enumerate(plan.splits):
            tasks.append((s, i, sp))

    def work(task) -> SplitOutcome:
        s, i, sp = task
        seed = derive_seed(s, i)
        try:
            selected, fitted, probs = run_split(m, sp, selector, model, seed, fixed.get(s),
                                                model_grid)
        except Exception as exc:
            raise RuntimeError(f"run seed {s}, split {i} (test subjects "
                               f"{m.subject_ids[sp.test[0]]}, {m.subject_ids[sp.test[1]]}): {exc}"
                               ) from exc
        return SplitOutcome(s, i, sp.test, tuple(float(p) for p in probs), selected,
                            fit_fingerprint(selected, fitted))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(work, tasks))
    else:
        outcomes = [work(t) for t in tasks]

    n = len(y)
    per_run_auc = []
    run_scores = []
    freq: Dict[int, int] = {}
    for s in seeds:
        total = np.zeros(n)
        count = np.zeros(n)
        for o in outcomes:
            if o.run_seed != s:
                continue
            for row, p in zip(o.test, o.probabilities):
                total[row] += p
                count[row] += 1
            for f in o.selected:
                freq[f] = freq.get(f, 0) + 1
        scores = total / count
        run_scores.append(scores)
        per_run_auc.append(auc(scores[y == 1], scores[y == 0]))
    mean_scores = np.mean(run_scores, axis=0)
    config = {
        "scenario": scenario,
        "selector": None if selector is None else selector.to_json(),
        "model": model.to_json(),
        "seeds": seeds,
        "leaky_selection": leaky_selection,
        "model_grid": {k: list(v) for k, v in sorted(model_grid.items())} if model_grid else None,
        "n_features": m.n_features,
        "n_subjects": n,
    }
    return EvalReport(
        scenario=scenario,
        selector="all" if selector is None else selector.method,
        model=model.kind,
        per_run_auc=per_run_auc,
        mean_auc=float(np.mean(per_run_auc)),
        roc=roc_curve(mean_scores[y == 1], mean_scores[y == 0]),
        per_subject_scores={sid: float(v) for sid, v in zip(m.subject_ids, mean_scores)},
        config=config,
        seeds=seeds,
        leaky_selection=leaky_selection,
        selection_frequency=freq,
        fit_hashes=[o.fit_hash for o in outcomes],
    )


def write_roc_csv(path, report: EvalReport):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fpr", "tpr", "threshold"])
        for f, t, th in report.roc:
            w.writerow([repr(float(f)), repr(float(t)), repr(float(th))])


def results_table(reports: Sequence[EvalReport]) -> List[List[str]]:
    """Rows per (scenario, model kind); columns SFFS / Boruta / GA / All as AUC %."""
    cells: Dict[tuple, Dict[str, float]] = {}
    for r in reports:
        cells.setdefault((r.scenario, r.model), {})[r.selector] = 100.0 * r.mean_auc
    rows = [["scenario", "model", *SELECTOR_COLUMNS]]
    order = {s: i for i, s in enumerate(SCENARIOS)}
    for (scen, kind) in sorted(cells, key=lambda k: (order[k[0]], k[1])):
        row = [scen, kind]
        for col in SELECTOR_COLUMNS:
            v = cells[(scen, kind)].get(col)
            row.append("" if v is None else f"{v:.2f}")
        rows.append(row)
    return rows


def write_results_table(path, reports: Sequence[EvalReport]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(results_table(reports))
