"""Feature vectors, the cohort matrix, and their CSV/JSON forms."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

from ..ingest.clean import label_value
from ..ingest.types import SubjectBundle
from .extract import extract_values
from .registry import N_FEATURES, REGISTRY, FeatureRegistry


@dataclass
class FeatureVector:
    subject_id: str
    values: np.ndarray

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)


def extract_all(bundle: SubjectBundle) -> FeatureVector:
    return FeatureVector(bundle.meta.subject_id, extract_values(bundle))


@dataclass
class CohortMatrix:
    """Subjects x features with binary labels (1 = lost at least 2%).

    ``feature_ids`` names each column by its registry id, so column subsets
    keep their identity. ``demographics`` optionally carries ``age`` and
    ``sex`` arrays for the group summary table.
    """

    subject_ids: List[str]
    values: np.ndarray
    labels: np.ndarray
    feature_ids: np.ndarray = None
    registry: FeatureRegistry = REGISTRY
    demographics: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.feature_ids is None:
            self.feature_ids = np.arange(1, self.values.shape[1] + 1)
        self.feature_ids = np.asarray(self.feature_ids, dtype=np.int64)
        n, m = self.values.shape
        if len(self.subject_ids) != n or len(self.labels) != n or len(self.feature_ids) != m:
            raise ValueError("inconsistent CohortMatrix shapes")

    @property
    def n_subjects(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    def columns(self, ids: Sequence[int]) -> np.ndarray:
        pos = {int(f): j for j, f in enumerate(self.feature_ids)}
        return self.values[:, [pos[int(f)] for f in ids]]

    def select_features(self, ids: Sequence[int]) -> "CohortMatrix":
        return CohortMatrix(list(self.subject_ids), self.columns(ids), self.labels.copy(),
                            np.asarray(ids), self.registry, dict(self.demographics))

    def select_rows(self, rows) -> "CohortMatrix":
        rows = np.asarray(rows)
        return CohortMatrix([self.subject_ids[i] for i in rows], self.values[rows],
                            self.labels[rows], self.feature_ids.copy(), self.registry,
                            {k: v[rows] for k, v in self.demographics.items()})

    def with_labels(self, labels) -> "CohortMatrix":
        return CohortMatrix(list(self.subject_ids), self.values.copy(), np.asarray(labels),
                            self.feature_ids.copy(), self.registry, dict(self.demographics))


def build_matrix(bundles: Sequence[SubjectBundle], labels=None) -> CohortMatrix:
    rows = [extract_all(b) for b in bundles]
    if labels is None:
        labels = [label_value(b.meta) for b in bundles]
    demo = {
        "age": np.array([b.meta.age for b in bundles], dtype=float),
        "sex": np.array([1.0 if b.meta.sex == "female" else 0.0 for b in bundles]),
    }
    values = np.vstack([r.values for r in rows]) if rows else np.zeros((0, N_FEATURES))
    return CohortMatrix([r.subject_id for r in rows], values, labels, demographics=demo)


def _cell(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def write_features_csv(path, matrix: CohortMatrix):
    header = ["subject_id", "label"] + [f"f{int(f):03d}" for f in matrix.feature_ids]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for sid, lab, row in zip(matrix.subject_ids, matrix.labels, matrix.values):
            w.writerow([sid, int(lab)] + [_cell(v) for v in row])


def read_features_csv(path, registry: FeatureRegistry = REGISTRY) -> CohortMatrix:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:2] != ["subject_id", "label"]:
            raise ValueError(f"{path}: expected subject_id,label header")
        ids = [int(h[1:]) for h in header[2:]]
        sids, labels, rows = [], [], []
        for rec in reader:
            sids.append(rec[0])
            labels.append(int(rec[1]))
            rows.append([float(c) if c != "" else np.nan for c in rec[2:]])
    values = np.array(rows, dtype=float).reshape(len(rows), len(ids))
    return CohortMatrix(sids, values, labels, ids, registry)


def write_registry_json(path, registry: FeatureRegistry = REGISTRY):
    Path(path).write_text(json.dumps(registry.to_json(), indent=1) + "\n", encoding="utf-8")
