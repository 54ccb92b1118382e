"""Standardization (sort, de-duplicate, window, bound-check) and labelling."""

from __future__ import annotations

import copy
import datetime as dt
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .types import IngestError, SubjectBundle, SubjectMeta, TimeSeries

LOST_GE_2PCT = "lost_ge_2pct"
LOST_LT_2PCT = "lost_lt_2pct"
LOSS_THRESHOLD = 0.02

_EPOCH_DAY0 = dt.date(1970, 1, 1)


@dataclass
class CleaningReport:
    subject_id: str
    dropped: Dict[str, int] = field(default_factory=dict)
    violations: List[str] = field(default_factory=list)

    def add(self, stream: str, n: int, reason: str = None):
        if n:
            self.dropped[stream] = self.dropped.get(stream, 0) + n
        if reason:
            self.violations.append(f"{stream}: {reason}")

    @property
    def total_dropped(self) -> int:
        return sum(self.dropped.values())


def _day_number(d: dt.date) -> int:
    return (d - _EPOCH_DAY0).days


def _clean_series(series: TimeSeries, lo_day: int, hi_day: int, report, name):
    n0 = len(series)
    if n0 == 0:
        return series
    # stable sort keeps read order among equal timestamps
    order = np.argsort(series.epoch, kind="stable")
    s = series.take(order)
    keep = np.ones(len(s), dtype=bool)
    keep[1:] = s.epoch[1:] != s.epoch[:-1]
    n_dup = int((~keep).sum())
    s = s.take(keep)
    days = s.local_day_number()
    inwin = (days >= lo_day) & (days <= hi_day)
    n_win = int((~inwin).sum())
    s = s.take(inwin)
    ok = s.in_bounds()
    n_bad = int((~ok).sum())
    s = s.take(ok)
    report.add(name, n_dup + n_win + n_bad)
    return s


def _keep_records(records, key, lo, hi, report, name, sort_key):
    kept = []
    for rec in sorted(records, key=sort_key):
        day = key(rec)
        if not lo <= day <= hi:
            report.add(name, 1)
            continue
        problems = rec.violations() if hasattr(rec, "violations") else []
        if problems:
            report.add(name, 1, f"{day}: " + "; ".join(problems))
            continue
        kept.append(rec)
    return kept


def standardize_bundle(raw: SubjectBundle, *, strict: bool = False, report: CleaningReport = None
                       ) -> SubjectBundle:
    """Return a cleaned copy of ``raw``.

    Series are sorted, exact-duplicate timestamps collapse to the first read
    sample, and anything outside the intervention window (+-1 day) or the
    type bounds is dropped. Records that break their invariants are dropped
    and listed in ``report.violations``; with ``strict=True`` the first such
    record raises :class:`IngestError` instead.
    """
    meta = raw.meta
    if report is None:
        report = CleaningReport(meta.subject_id)
    lo, hi = meta.window()
    lo_n, hi_n = _day_number(lo), _day_number(hi)
    out = SubjectBundle(meta=copy.copy(meta))
    out.glucose = _clean_series(raw.glucose, lo_n, hi_n, report, "glucose")
    out.hr = _clean_series(raw.hr, lo_n, hi_n, report, "hr")

    out.daily = _keep_records(raw.daily, lambda r: r.date, lo, hi, report, "activity",
                              lambda r: r.date)
    out.stress = _keep_records(raw.stress, lambda r: r.date, lo, hi, report, "stress",
                               lambda r: r.date)
    out.sleeps = _keep_records(raw.sleeps, lambda r: r.start.local_date, lo, hi, report,
                               "sleep", lambda r: r.start.epoch)
    out.exercises = _keep_records(raw.exercises, lambda r: r.start.local_date, lo, hi,
                                  report, "exercise", lambda r: r.start.epoch)
    out.eda = _keep_records(raw.eda, lambda r: r.start.local_date, lo, hi, report, "eda",
                            lambda r: (r.start.epoch, r.session_id))
    out.ecg = _keep_records(raw.ecg, lambda r: r.start.local_date, lo, hi, report, "ecg",
                            lambda r: (r.start.epoch, r.session_id))
    if strict and report.violations:
        raise IngestError(f"subject {meta.subject_id}: {report.violations[0]}")
    return out


def label_subject(meta: SubjectMeta) -> str:
    """``lost_ge_2pct`` when relative weight loss is at least 2% (inclusive)."""
    loss = (meta.initial_weight - meta.final_weight) / meta.initial_weight
    # tolerate representation error at the boundary, e.g. 100.0 -> 98.0
    return LOST_GE_2PCT if loss >= LOSS_THRESHOLD - 1e-12 else LOST_LT_2PCT


def label_value(meta: SubjectMeta) -> int:
    return int(label_subject(meta) == LOST_GE_2PCT)
