"""CSV readers for cohort manifests and per-subject device exports.

All readers are pure functions of the files they are given; they validate
row-level bounds but leave ordering and de-duplication to
:func:`wearlab.ingest.clean.standardize_bundle`.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
from pathlib import Path
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from . import schema
from .types import (
    SLEEP_SCORES,
    SLEEP_STAGES,
    BreathingRate,
    DailyActivityRecord,
    EcgSession,
    EdaSession,
    ExerciseSession,
    GlucoseSeries,
    HeartRateSeries,
    IngestError,
    SleepEpisode,
    StressDailyRecord,
    SubjectBundle,
    SubjectMeta,
    Timestamp,
)


def _rows(path, expected: Sequence[str], required: Sequence[str] = None
          ) -> Iterator[Tuple[int, Dict[str, str]]]:
    """Yield ``(line_number, row)``; checks that every required column exists."""
    required = expected if required is None else required
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise IngestError(f"missing column {col!r}", path=path)
        for row in reader:
            yield reader.line_num, row


def _float(row, col, path, line, *, optional=False) -> float:
    text = (row.get(col) or "").strip()
    if text == "":
        if optional:
            return float("nan")
        raise IngestError(f"empty value in column {col!r}", path=path, line=line)
    try:
        value = float(text)
    except ValueError:
        raise IngestError(f"non-numeric {col!r}: {text!r}", path=path, line=line) from None
    if math.isnan(value) and not optional:
        raise IngestError(f"NaN in column {col!r}", path=path, line=line)
    return value


def _timestamp(row, col, path, line) -> Timestamp:
    try:
        return Timestamp.parse(row[col])
    except (ValueError, TypeError) as exc:
        raise IngestError(f"bad timestamp in {col!r}: {exc}", path=path, line=line) from None


def _date(row, col, path, line) -> dt.date:
    try:
        return dt.date.fromisoformat(row[col].strip())
    except (ValueError, AttributeError):
        raise IngestError(f"bad date in {col!r}: {row.get(col)!r}", path=path, line=line) from None


def parse_subject_manifest(path) -> List[SubjectMeta]:
    out = []
    for line, row in _rows(path, schema.MANIFEST_COLUMNS):
        sex = row["sex"].strip().lower()
        if sex not in ("female", "male"):
            raise IngestError(f"sex must be female or male, got {row['sex']!r}",
                              path=path, line=line)
        age = _float(row, "age", path, line)
        if age != int(age) or age < 18:
            raise IngestError(f"age must be an integer >= 18, got {row['age']!r}",
                              path=path, line=line)
        meta = SubjectMeta(
            subject_id=row["subject_id"].strip(),
            age=int(age),
            sex=sex,
            height=_float(row, "height_cm", path, line),
            initial_weight=_float(row, "initial_weight_kg", path, line),
            final_weight=_float(row, "final_weight_kg", path, line),
            intervention_start=_date(row, "start_date", path, line),
            intervention_end=_date(row, "end_date", path, line),
        )
        if not (meta.initial_weight > 0 and meta.final_weight > 0):
            raise IngestError("weights must be positive", path=path, line=line)
        if meta.intervention_end <= meta.intervention_start:
            raise IngestError("end_date must be after start_date", path=path, line=line)
        out.append(meta)
    return out


def parse_timeseries_csv(path, kind: str):
    cls = {"cgm": GlucoseSeries, "hr": HeartRateSeries}.get(kind)
    if cls is None:
        raise ValueError(f"unknown series kind {kind!r}")
    lo, hi = cls.bounds
    epochs, offsets, values = [], [], []
    for line, row in _rows(path, schema.TIMESERIES_COLUMNS):
        ts = _timestamp(row, "timestamp", path, line)
        v = _float(row, "value", path, line)
        if not lo < v < hi:
            raise IngestError(f"{kind} value {v} outside ({lo}, {hi})", path=path, line=line)
        epochs.append(ts.epoch)
        offsets.append(ts.offset_min)
        values.append(v)
    return cls(np.array(epochs, dtype=np.int64), np.array(offsets, dtype=np.int64),
               np.array(values, dtype=float))


def _activity_row(row, path, line) -> DailyActivityRecord:
    kwargs = {"date": _date(row, "date", path, line)}
    for col in schema.ACTIVITY_COLUMNS[1:]:
        attr = schema.ACTIVITY_RENAMES.get(col, col)
        kwargs[attr] = _float(row, col, path, line, optional=col in schema.ACTIVITY_OPTIONAL)
    return DailyActivityRecord(**kwargs)


def _sleep_row(row, path, line) -> SleepEpisode:
    def opt(col):
        return _float(row, col, path, line, optional=col not in schema.SLEEP_REQUIRED)

    breathing = {
        stage: BreathingRate(opt(f"br_{stage}_mean"), opt(f"br_{stage}_std"), opt(f"br_{stage}_snr"))
        for stage in SLEEP_STAGES
    }
    return SleepEpisode(
        start=_timestamp(row, "start", path, line),
        end=_timestamp(row, "end", path, line),
        asleep_min=opt("asleep_min"),
        awake_min=opt("awake_min"),
        deep_min=opt("deep_min"),
        light_min=opt("light_min"),
        rem_min=opt("rem_min"),
        efficiency=opt("efficiency"),
        awakenings=opt("awakenings"),
        spo2_avg=opt("spo2_avg"),
        spo2_lower=opt("spo2_lower"),
        spo2_upper=opt("spo2_upper"),
        nightly_temp_delta=opt("nightly_temp_delta"),
        breathing=breathing,
        restlessness=opt("restlessness"),
        scores={name: opt(f"score_{name}") for name in SLEEP_SCORES},
        nightly_rmssd=opt("nightly_rmssd"),
        nonrem_hr=opt("nonrem_hr"),
    )


def _stress_row(row, path, line) -> StressDailyRecord:
    return StressDailyRecord(
        date=_date(row, "date", path, line),
        stress_score=_float(row, "stress_score", path, line),
        sleep_points=_float(row, "sleep_points", path, line, optional=True),
        responsiveness_points=_float(row, "responsiveness_points", path, line, optional=True),
        exertion_points=_float(row, "exertion_points", path, line, optional=True),
    )


def parse_daily_csv(path, kind: str) -> list:
    """Parse ``activity``, ``sleep`` or ``stress`` day-level records.

    Two records for the same calendar day (wake date for sleep) are
    ambiguous and rejected.
    """
    if kind == "activity":
        columns, required, build = schema.ACTIVITY_COLUMNS, None, _activity_row
        required = [c for c in columns if c not in schema.ACTIVITY_OPTIONAL]
    elif kind == "sleep":
        columns, required, build = schema.SLEEP_COLUMNS, schema.SLEEP_REQUIRED, _sleep_row
    elif kind == "stress":
        columns, required, build = schema.STRESS_COLUMNS, schema.STRESS_COLUMNS[:2], _stress_row
    else:
        raise ValueError(f"unknown daily kind {kind!r}")
    out, seen = [], {}
    for line, row in _rows(path, columns, required):
        rec = build(row, path, line)
        day = rec.wake_date if kind == "sleep" else rec.date
        if day in seen:
            raise IngestError(f"duplicate {kind} record for {day} (first at line {seen[day]})",
                              path=path, line=line)
        seen[day] = line
        out.append(rec)
    return out


def _sample_file(path: Path, columns, session_id):
    if not path.exists():
        raise IngestError(f"sample file for session {session_id!r} not found: {path}")
    cols = {c: [] for c in columns}
    for line, row in _rows(path, columns, columns[:2]):
        for c in columns:
            cols[c].append(_float(row, c, path, line, optional=c not in columns[:2]))
    return {c: np.array(v, dtype=float) for c, v in cols.items()}


def parse_session_csv(path, kind: str) -> list:
    """Parse ``eda``, ``ecg`` or ``exercise`` sessions.

    EDA and ECG session tables reference companion sample files at
    ``<dir>/<kind>/<session_id>.csv``.
    """
    path = Path(path)
    out = []
    if kind == "exercise":
        for line, row in _rows(path, schema.EXERCISE_COLUMNS, schema.EXERCISE_COLUMNS[:2]):
            sess = ExerciseSession(
                start=_timestamp(row, "start", path, line),
                duration=_float(row, "duration_min", path, line),
                avg_hr=_float(row, "avg_hr", path, line, optional=True),
            )
            problems = sess.violations()
            if problems:
                raise IngestError("; ".join(problems), path=path, line=line)
            out.append(sess)
        return out
    if kind == "eda":
        for line, row in _rows(path, schema.EDA_SESSION_COLUMNS, schema.EDA_SESSION_COLUMNS[:2]):
            sid = row["session_id"].strip()
            cols = _sample_file(path.parent / "eda" / f"{sid}.csv", schema.EDA_SAMPLE_COLUMNS, sid)
            sess = EdaSession(
                session_id=sid,
                start=_timestamp(row, "start", path, line),
                t=cols["t_s"], scl=cols["scl_us"], hr=cols["hr_bpm"],
                hrv_baseline=_float(row, "hrv_baseline_ms", path, line, optional=True),
            )
            problems = sess.violations()
            if problems:
                raise IngestError(f"EDA session {sid!r}: " + "; ".join(problems),
                                  path=path, line=line)
            out.append(sess)
        return out
    if kind == "ecg":
        for line, row in _rows(path, schema.ECG_SESSION_COLUMNS, schema.ECG_SESSION_COLUMNS[:2]):
            sid = row["session_id"].strip()
            cols = _sample_file(path.parent / "ecg" / f"{sid}.csv", schema.ECG_SAMPLE_COLUMNS, sid)
            sess = EcgSession(
                session_id=sid,
                start=_timestamp(row, "start", path, line),
                t=cols["t_s"], mv=cols["mv"],
                session_hr=_float(row, "session_hr", path, line, optional=True),
            )
            problems = sess.violations()
            if problems:
                raise IngestError(f"ECG session {sid!r}: " + "; ".join(problems),
                                  path=path, line=line)
            out.append(sess)
        return out
    raise ValueError(f"unknown session kind {kind!r}")


def load_subject(root, meta: SubjectMeta) -> SubjectBundle:
    """Read one subject directory; absent files yield empty streams."""
    d = Path(root) / meta.subject_id
    bundle = SubjectBundle(meta=meta)
    if (d / schema.SERIES_FILES["cgm"]).exists():
        bundle.glucose = parse_timeseries_csv(d / schema.SERIES_FILES["cgm"], "cgm")
    if (d / schema.SERIES_FILES["hr"]).exists():
        bundle.hr = parse_timeseries_csv(d / schema.SERIES_FILES["hr"], "hr")
    for kind, attr in (("activity", "daily"), ("sleep", "sleeps"), ("stress", "stress")):
        p = d / schema.DAILY_FILES[kind]
        if p.exists():
            setattr(bundle, attr, parse_daily_csv(p, kind))
    for kind, attr in (("exercise", "exercises"), ("eda", "eda"), ("ecg", "ecg")):
        p = d / schema.SESSION_FILES[kind]
        if p.exists():
            setattr(bundle, attr, parse_session_csv(p, kind))
    return bundle


def load_cohort(root) -> List[SubjectBundle]:
    """Read ``subjects.csv`` and every listed subject directory under ``root``."""
    metas = parse_subject_manifest(Path(root) / schema.MANIFEST_FILE)
    return [load_subject(root, m) for m in metas]
