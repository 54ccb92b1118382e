"""Serialize typed records back to the export layout read by :mod:`.readers`.

Floats are written with ``repr`` so that parse -> write -> parse is exact.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, List, Sequence

from . import schema
from .types import SLEEP_SCORES, SLEEP_STAGES, SubjectBundle, SubjectMeta


def fmt(value) -> str:
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    if hasattr(value, "isoformat"):
        return value.isoformat()
    return str(value)


def _write(path, header: Sequence[str], rows: Iterable[Sequence]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_manifest(path, metas: List[SubjectMeta]):
    _write(path, schema.MANIFEST_COLUMNS, (
        (m.subject_id, m.age, m.sex, float(m.height), float(m.initial_weight),
         float(m.final_weight), m.intervention_start, m.intervention_end) for m in metas))


def write_timeseries(path, series):
    rows = ((ts.isoformat(), v) for ts, v in series.samples)
    _write(path, schema.TIMESERIES_COLUMNS, rows)


def write_activity(path, records):
    attrs = [schema.ACTIVITY_RENAMES.get(c, c) for c in schema.ACTIVITY_COLUMNS]
    _write(path, schema.ACTIVITY_COLUMNS,
           ([getattr(r, a) for a in attrs] for r in records))


def _sleep_values(s):
    row = [s.start.isoformat(), s.end.isoformat(), s.asleep_min, s.awake_min, s.deep_min,
           s.light_min, s.rem_min, s.efficiency, s.awakenings, s.spo2_avg, s.spo2_lower,
           s.spo2_upper, s.nightly_temp_delta]
    for stage in SLEEP_STAGES:
        br = s.breathing[stage]
        row += [br.mean, br.std, br.snr]
    row.append(s.restlessness)
    row += [s.scores[name] for name in SLEEP_SCORES]
    row += [s.nightly_rmssd, s.nonrem_hr]
    return row


def write_sleep(path, episodes):
    _write(path, schema.SLEEP_COLUMNS, (_sleep_values(s) for s in episodes))


def write_stress(path, records):
    _write(path, schema.STRESS_COLUMNS, (
        (r.date, r.stress_score, r.sleep_points, r.responsiveness_points, r.exertion_points)
        for r in records))


def write_exercise(path, sessions):
    _write(path, schema.EXERCISE_COLUMNS,
           ((s.start.isoformat(), s.duration, s.avg_hr) for s in sessions))


def write_eda(path, sessions):
    path = Path(path)
    _write(path, schema.EDA_SESSION_COLUMNS,
           ((s.session_id, s.start.isoformat(), s.hrv_baseline) for s in sessions))
    for s in sessions:
        _write(path.parent / "eda" / f"{s.session_id}.csv", schema.EDA_SAMPLE_COLUMNS,
               zip(s.t.tolist(), s.scl.tolist(), s.hr.tolist()))


def write_ecg(path, sessions):
    path = Path(path)
    _write(path, schema.ECG_SESSION_COLUMNS,
           ((s.session_id, s.start.isoformat(), s.session_hr) for s in sessions))
    for s in sessions:
        _write(path.parent / "ecg" / f"{s.session_id}.csv", schema.ECG_SAMPLE_COLUMNS,
               zip(s.t.tolist(), s.mv.tolist()))


def write_subject(root, bundle: SubjectBundle):
    d = Path(root) / bundle.meta.subject_id
    d.mkdir(parents=True, exist_ok=True)
    write_timeseries(d / schema.SERIES_FILES["cgm"], bundle.glucose)
    write_timeseries(d / schema.SERIES_FILES["hr"], bundle.hr)
    write_activity(d / schema.DAILY_FILES["activity"], bundle.daily)
    write_sleep(d / schema.DAILY_FILES["sleep"], bundle.sleeps)
    write_stress(d / schema.DAILY_FILES["stress"], bundle.stress)
    write_exercise(d / schema.SESSION_FILES["exercise"], bundle.exercises)
    write_eda(d / schema.SESSION_FILES["eda"], bundle.eda)
    write_ecg(d / schema.SESSION_FILES["ecg"], bundle.ecg)


def write_cohort(root, bundles: List[SubjectBundle]):
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    write_manifest(root / schema.MANIFEST_FILE, [b.meta for b in bundles])
    for b in bundles:
        write_subject(root, b)
