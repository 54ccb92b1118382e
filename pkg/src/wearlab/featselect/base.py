"""Selector configuration and result types."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..featgen.matrix import CohortMatrix
from ..learners.models import ModelSpec

METHODS = ("sffs", "boruta", "genetic")

METHOD_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "sffs": {"epsilon_gain": 1e-4},
    "boruta": {"max_iter": 100, "alpha": 0.05, "n_estimators": 200},
    "genetic": {"population": 50, "generations": 40, "tournament": 3, "crossover_p": 0.5,
                "elitism": 2, "size_penalty": 0.0005, "mutation_rate": None},
}

DECISIONS = ("selected", "rejected", "tentative", "unvisited")


@dataclass(frozen=True)
class SelectionConfig:
    method: str
    scorer_model: ModelSpec = field(default_factory=lambda: ModelSpec("gb"))
    cv_folds: int = 5
    max_features: int = 25
    seed: int = 0
    params: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown selection method {self.method!r}; valid: {', '.join(METHODS)}")
        unknown = set(self.params) - set(METHOD_DEFAULTS[self.method])
        if unknown:
            raise ValueError(f"unknown {self.method} parameters: {sorted(unknown)}")
        object.__setattr__(self, "params", {**METHOD_DEFAULTS[self.method], **self.params})
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        if self.max_features < 1:
            raise ValueError("max_features must be >= 1")

    def with_seed(self, seed: int) -> "SelectionConfig":
        return SelectionConfig(self.method, self.scorer_model, self.cv_folds, self.max_features,
                               int(seed), dict(self.params))

    def to_json(self) -> dict:
        return {"method": self.method, "scorer_model": self.scorer_model.to_json(),
                "cv_folds": self.cv_folds, "max_features": self.max_features,
                "seed": int(self.seed), "params": dict(self.params)}

    @classmethod
    def from_json(cls, doc: dict) -> "SelectionConfig":
        scorer = doc.get("scorer_model")
        return cls(doc["method"], ModelSpec.from_json(scorer) if scorer else ModelSpec("gb"),
                   int(doc.get("cv_folds", 5)), int(doc.get("max_features", 25)),
                   int(doc.get("seed", 0)), dict(doc.get("params", {})))


@dataclass
class SelectionResult:
    method: str
    selected: List[int]
    score_trace: List[Tuple[int, int, float]]
    per_feature_decision: Dict[int, str]
    config: Optional[SelectionConfig] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.selected)) != len(self.selected):
            raise ValueError("selected ids must be unique")

    def to_json(self, registry=None) -> dict:
        doc = {
            "method": self.method,
            "config": None if self.config is None else self.config.to_json(),
            "selected": [int(f) for f in self.selected],
            "decisions": {str(k): v for k, v in sorted(self.per_feature_decision.items())},
            "score_trace": [[int(s), int(n), float(v)] for s, n, v in self.score_trace],
        }
        if registry is not None:
            doc["selected_names"] = [registry.name(int(f)) for f in self.selected]
        if self.extra:
            doc["extra"] = self.extra
        return doc

    def dumps(self, registry=None) -> str:
        return json.dumps(self.to_json(registry), indent=1, sort_keys=True)


def canonical(matrix: CohortMatrix) -> Tuple[CohortMatrix, List[int], List[int]]:
    """Columns sorted by id; returns (matrix, usable ids, all-missing ids)."""
    order = np.argsort(matrix.feature_ids, kind="stable")
    ids = [int(matrix.feature_ids[j]) for j in order]
    m = matrix.select_features(ids)
    empty = np.isnan(m.values).all(axis=0)
    usable = [f for f, e in zip(ids, empty) if not e]
    missing = [f for f, e in zip(ids, empty) if e]
    if not usable:
        raise ValueError("every feature is entirely missing")
    return m.select_features(usable), usable, missing
