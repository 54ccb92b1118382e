"""Per-subject extraction of the 284-value feature vector.

Each ``extract_dsN`` returns a plain list in registry order; absent inputs
yield NaN entries, never zeros.
"""

from __future__ import annotations

import datetime as dt
from typing import List

import numpy as np

from ..ingest.types import SLEEP_STAGES, SubjectBundle
from .primitives import (
    NAN,
    daypart_masks,
    descriptive_stats,
    estimated_hba1c,
    glucose_band_fractions,
    glucose_cv,
    mean_std,
    rmssd,
)
from .registry import BLOCKS, DAYPARTS

BLOCK_LENGTHS = {ds: hi - lo + 1 for ds, (lo, hi) in BLOCKS.items()}

REGULAR_TOLERANCE_MIN = 30.0
RESTFUL_REM_FRACTION = 0.25
ACTIVE_DAY_MIN = 10.0
LAST_WEEK_DAYS = 7


def _dayparted_stats(series) -> List[float]:
    """Six stats x five day-parts, stat-major (avg for all parts first)."""
    masks = daypart_masks(series.local_minute_of_day())
    per_part = [descriptive_stats(series.values[masks[p]]) for p in DAYPARTS]
    return [per_part[j][k] for k in range(6) for j in range(len(DAYPARTS))]


def extract_ds4(bundle: SubjectBundle) -> List[float]:
    g = bundle.glucose
    out = _dayparted_stats(g)
    masks = daypart_masks(g.local_minute_of_day())
    parts = [g.values[masks[p]] for p in DAYPARTS]
    bands = [glucose_band_fractions(v) for v in parts]
    for k in range(5):
        out += [b[k] for b in bands]
    for v in parts:
        out.append(estimated_hba1c(float(v.mean())) if len(v) and v.mean() > 0 else NAN)
    out += [glucose_cv(v) for v in parts]
    return out


def _slope_summary(sessions) -> List[float]:
    means, stds, variances = [], [], []
    for s in sessions:
        if len(s.t) < 2:
            continue
        slope = np.diff(s.mv) / np.diff(s.t)
        st = descriptive_stats(slope)
        means.append(st.mean)
        stds.append(st.std)
        variances.append(st.variance)
    by_mean = descriptive_stats(means)
    by_std = descriptive_stats(stds)
    return [*by_mean,
            by_std.mean, by_std.std, descriptive_stats(variances).std,
            by_std.max, by_std.min, by_std.range]


def _sleep_rmssd(bundle: SubjectBundle, episode) -> float:
    if not np.isnan(episode.nightly_rmssd):
        return episode.nightly_rmssd
    hr = bundle.hr
    inside = (hr.epoch >= episode.start.epoch) & (hr.epoch <= episode.end.epoch)
    return rmssd(60000.0 / hr.values[inside])


def extract_ds6(bundle: SubjectBundle) -> List[float]:
    out = _dayparted_stats(bundle.hr)
    out += mean_std([d.resting_hr for d in bundle.daily])
    out += mean_std([e.avg_hr for e in bundle.exercises])
    out += mean_std([s.nonrem_hr for s in bundle.sleeps])
    out += mean_std([_sleep_rmssd(bundle, s) for s in bundle.sleeps])
    out += mean_std([s.hr_mean for s in bundle.eda])
    out += mean_std([s.hr_begin for s in bundle.eda])
    out += mean_std([s.hr_end for s in bundle.eda])
    out += mean_std([s.hrv_baseline for s in bundle.eda])
    out += _slope_summary(bundle.ecg)
    return out


def _pct(flags) -> float:
    flags = list(flags)
    return 100.0 * sum(flags) / len(flags) if flags else NAN


def extract_ds7(bundle: SubjectBundle) -> List[float]:
    days = bundle.daily
    end = bundle.meta.intervention_end
    week = [d for d in days if (end - d.date).days < LAST_WEEK_DAYS and d.date <= end]

    def col(records, name):
        return [getattr(r, name) for r in records]

    out: List[float] = []
    for name in ("calories", "steps", "distance"):
        out += mean_std(col(days, name))
    out.append(float(len(bundle.exercises)) if days or bundle.exercises else NAN)
    out.append(mean_std([e.duration for e in bundle.exercises])[0])
    zones = ("fat_burn_min", "cardio_min", "peak_min")
    stats = [mean_std(col(days, z)) for z in zones]
    out += [s[0] for s in stats] + [s[1] for s in stats]
    out += mean_std(col(days, "sedentary_min"))
    levels = ("lightly_min", "moderately_min", "very_min")
    stats = [mean_std(col(days, lv)) for lv in levels]
    out += [s[0] for s in stats] + [s[1] for s in stats]
    out += mean_std(col(days, "below_zone1_min"))
    hr_zones = ("zone1_min", "zone2_min", "zone3_min")
    stats = [mean_std(col(days, z)) for z in hr_zones]
    out += [s[0] for s in stats] + [s[1] for s in stats]
    out += mean_std(col(days, "demographic_vo2max"))

    def active_pct(records, lv):
        return _pct(getattr(r, lv) >= ACTIVE_DAY_MIN for r in records
                    if not np.isnan(getattr(r, lv)))

    def mvpa(records):
        return mean_std([r.moderately_min + r.very_min for r in records])[0]

    out += [active_pct(days, lv) for lv in levels]
    out.append(mvpa(days))
    out.append(mean_std(col(week, "sedentary_min"))[0])
    out += [mean_std(col(week, lv))[0] for lv in levels]
    out += [active_pct(week, lv) for lv in levels]
    out.append(mvpa(week))
    return out


def _is_weekend(day: dt.date) -> bool:
    return day.weekday() >= 5


def _three_way(sleeps, value_fn, reduce_fn) -> List[float]:
    """Apply ``reduce_fn`` over all, weekday and weekend nights (by wake date)."""
    groups = (
        sleeps,
        [s for s in sleeps if not _is_weekend(s.wake_date)],
        [s for s in sleeps if _is_weekend(s.wake_date)],
    )
    return [reduce_fn([value_fn(s) for s in g]) for g in groups]


def _avg(values) -> float:
    return mean_std(values)[0]


def _wake_minutes(s) -> float:
    return s.end.local_minute_of_day


def _bed_minutes(s) -> float:
    """Minutes after 18:00 so that late-evening and after-midnight bedtimes average sanely."""
    return (s.start.local_minute_of_day - 1080.0) % 1440.0


def extract_ds8(bundle: SubjectBundle) -> List[float]:
    sleeps = sorted(bundle.sleeps, key=lambda s: s.end.epoch)
    out: List[float] = []
    for attr in ("spo2_avg", "spo2_lower", "spo2_upper"):
        out += mean_std([getattr(s, attr) for s in sleeps])
    asleep = mean_std([s.asleep_min for s in sleeps])
    awake = mean_std([s.awake_min for s in sleeps])
    out += [asleep[0], awake[0], asleep[1], awake[1]]

    def stage_minutes(s, stage):
        return s.stage_total() if stage == "full" else getattr(s, f"{stage}_min")

    stage_stats = [mean_std([stage_minutes(s, st) for s in sleeps]) for st in SLEEP_STAGES]
    out += [m for m, _ in stage_stats] + [sd for _, sd in stage_stats]
    for part in ("mean", "std", "snr"):
        br = [mean_std([getattr(s.breathing[st], part) for s in sleeps]) for st in SLEEP_STAGES]
        out += [m for m, _ in br] + [sd for _, sd in br]
    out += mean_std([s.nightly_temp_delta for s in sleeps])
    for name in ("composition", "revitalization", "duration"):
        out += mean_std([s.scores[name] for s in sleeps])
    out += mean_std([s.restlessness for s in sleeps])
    out += _three_way(sleeps, lambda s: s.scores["overall"], _avg)
    out.append(mean_std([s.scores["overall"] for s in sleeps])[1])
    out += _three_way(sleeps, lambda s: s.efficiency, _avg)
    out += _three_way(sleeps, lambda s: s.asleep_min, _avg)[1:]
    out += _three_way(sleeps, _bed_minutes, _avg)
    out += _three_way(sleeps, _wake_minutes, _avg)
    out += _three_way(sleeps, lambda s: s.awakenings, _avg)

    wake_med = float(np.median([_wake_minutes(s) for s in sleeps])) if sleeps else NAN
    bed_med = float(np.median([_bed_minutes(s) for s in sleeps])) if sleeps else NAN
    tol = REGULAR_TOLERANCE_MIN

    def exceedance(sign):
        def reduce(devs):
            if not devs:
                return NAN
            over = [sign * d - tol for d in devs if sign * d > tol]
            return float(np.mean(over)) if over else 0.0
        return reduce

    wake_dev = lambda s: _wake_minutes(s) - wake_med  # noqa: E731
    out += _three_way(sleeps, wake_dev, exceedance(-1))
    out += _three_way(sleeps, wake_dev, exceedance(+1))
    out += _three_way(sleeps, lambda s: abs(wake_dev(s)) <= tol, _pct)
    out += _three_way(sleeps, lambda s: abs(_bed_minutes(s) - bed_med) <= tol, _pct)

    def restful(s):
        if np.isnan(s.rem_min) or not s.asleep_min > 0:
            return None
        return s.rem_min / s.asleep_min > RESTFUL_REM_FRACTION

    out += _three_way(sleeps, restful, lambda v: _pct(x for x in v if x is not None))
    out += _three_way(sleeps, lambda s: wake_dev(s) < -tol, _pct)
    out += _three_way(sleeps, lambda s: wake_dev(s) > tol, _pct)

    # consecutive wake dates with both restlessness values known
    pairs = []
    for prev, cur in zip(sleeps, sleeps[1:]):
        if (cur.wake_date - prev.wake_date).days != 1:
            continue
        if np.isnan(prev.restlessness) or np.isnan(cur.restlessness):
            continue
        pairs.append((cur, cur.restlessness - prev.restlessness))
    groups = (
        pairs,
        [p for p in pairs if not _is_weekend(p[0].wake_date)],
        [p for p in pairs if _is_weekend(p[0].wake_date)],
    )
    out += [_pct(d < 0 for _, d in g) for g in groups]
    out += [_pct(d > 0 for _, d in g) for g in groups]
    return out


def extract_ds9(bundle: SubjectBundle) -> List[float]:
    out: List[float] = []
    for attr in ("stress_score", "sleep_points", "responsiveness_points", "exertion_points"):
        out += mean_std([getattr(r, attr) for r in bundle.stress])
    means, stds, variances = [], [], []
    for s in bundle.eda:
        st = descriptive_stats(s.scl)
        means.append(st.mean)
        stds.append(st.std)
        variances.append(st.variance)
    by_std = descriptive_stats(stds)
    out += [*descriptive_stats(means),
            by_std.mean, by_std.std, descriptive_stats(variances).std,
            by_std.max, by_std.min, by_std.range]
    return out


EXTRACTORS = (("DS4", extract_ds4), ("DS6", extract_ds6), ("DS7", extract_ds7),
              ("DS8", extract_ds8), ("DS9", extract_ds9))


def extract_values(bundle: SubjectBundle) -> np.ndarray:
    parts = []
    for ds, fn in EXTRACTORS:
        vals = fn(bundle)
        if len(vals) != BLOCK_LENGTHS[ds]:
            raise AssertionError(f"{ds} produced {len(vals)} values, expected {BLOCK_LENGTHS[ds]}")
        parts.extend(vals)
    return np.asarray(parts, dtype=float)
