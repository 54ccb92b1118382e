"""Synthetic cohorts with planted group effects.

Each subject gets latent parameters drawn from its group's entry in the
effect profile; raw streams (CGM, heart rate, daily records, sessions) are
then simulated around those latents so that the full ingest and extraction
path is exercised. Defaults follow the published group summary table.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from .ingest.types import (
    SLEEP_STAGES,
    BreathingRate,
    DailyActivityRecord,
    EcgSession,
    EdaSession,
    ExerciseSession,
    GlucoseSeries,
    HeartRateSeries,
    SleepEpisode,
    StressDailyRecord,
    SubjectBundle,
    SubjectMeta,
    Timestamp,
)

Effect = Tuple[float, float, float]  # (positive mean, negative mean, within-group std)

# Group means from the cohort summary table; stds are the mean of the two group stds.
DEFAULT_EFFECTS: Dict[str, Effect] = {
    "age": (52.0, 45.0, 12.5),
    "female_fraction": (0.73, 0.65, 0.0),
    "glucose_mean": (100.87, 98.85, 6.9),
    "glucose_cv": (16.64, 14.68, 3.46),
    "heart_rate": (75.81, 75.63, 6.45),
    "resting_hr": (62.78, 62.93, 7.53),
    "exercise_hr": (100.81, 101.84, 9.6),
    "nonrem_hr": (59.56, 60.72, 7.95),
    "ecg_hr": (69.76, 70.22, 9.2),
    "calories": (3019.0, 2932.0, 410.0),
    "steps": (11356.0, 10601.0, 3970.0),
    "n_activities": (14.20, 15.92, 10.0),
    "activity_duration": (38.78, 36.19, 16.2),
    "sedentary_minutes": (717.0, 724.0, 100.0),
    "mvpa_minutes": (68.18, 63.05, 39.2),
    "spo2": (94.00, 94.20, 1.24),
    "sleep_duration": (414.0, 431.0, 50.0),
    "awake_duration": (55.0, 53.0, 11.5),
    "light_sleep": (227.0, 232.0, 37.0),
    "deep_sleep": (58.0, 64.0, 13.5),
    "rem_sleep": (74.0, 82.0, 18.5),
    "sleep_score": (74.10, 75.80, 3.97),
    "sleep_end_time": (450.0, 450.0, 35.0),
    "stress_score": (75.70, 79.84, 3.84),
    "responsiveness_points": (21.87, 23.87, 2.38),
    "exertion_points": (23.50, 23.73, 2.36),
    "scl_mean": (2.0, 2.0, 0.8),
}

EMOTIONAL_STATE = ("stress_score", "responsiveness_points", "exertion_points", "scl_mean")

# Signals whose latent must stay inside a range to keep records valid.
_CLIP = {
    "age": (18, 85), "female_fraction": (0, 1), "glucose_mean": (70, 180), "glucose_cv": (5, 30),
    "heart_rate": (45, 110), "resting_hr": (40, 95), "exercise_hr": (70, 180),
    "nonrem_hr": (40, 95), "ecg_hr": (40, 120), "calories": (1200, 6000), "steps": (500, 30000),
    "n_activities": (0, 60), "activity_duration": (5, 150), "sedentary_minutes": (300, 1000),
    "mvpa_minutes": (0, 240), "spo2": (85, 99), "sleep_duration": (200, 600),
    "awake_duration": (10, 120), "light_sleep": (60, 400), "deep_sleep": (10, 150),
    "rem_sleep": (10, 180), "sleep_score": (40, 95), "sleep_end_time": (240, 720),
    "stress_score": (40, 98), "responsiveness_points": (5, 35), "exertion_points": (5, 35),
    "scl_mean": (0.3, 10),
}

START_DATE = dt.date(2024, 3, 4)
UTC_OFFSET_MIN = 60
ECG_RATE_HZ = 100
ECG_SECONDS = 10
EDA_SECONDS = 180
N_EDA = 3
N_ECG = 3


@dataclass(frozen=True)
class CohortSpec:
    n_positive: int = 55
    n_negative: int = 38
    days: int = 14
    effect_profile: Mapping[str, Effect] = field(default_factory=lambda: dict(DEFAULT_EFFECTS))
    effect_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_positive < 1 or self.n_negative < 1:
            raise ValueError("both groups need at least one subject")
        if self.days < 2:
            raise ValueError("days must be >= 2")
        unknown = set(self.effect_profile) - set(DEFAULT_EFFECTS)
        if unknown:
            raise ValueError(f"unknown effect signals: {sorted(unknown)}")
        for name, (_, _, sd) in self.effect_profile.items():
            if sd < 0:
                raise ValueError(f"{name}: negative std")
        if self.effect_scale < 0:
            raise ValueError("effect_scale must be >= 0")

    def profile(self) -> Dict[str, Effect]:
        """Full profile after defaults and ``effect_scale`` (gap scaled about the midpoint)."""
        out = {}
        for name, default in DEFAULT_EFFECTS.items():
            pos, neg, sd = self.effect_profile.get(name, default)
            mid = 0.5 * (pos + neg)
            s = self.effect_scale
            out[name] = (mid + s * (pos - mid), mid + s * (neg - mid), sd)
        return out

    def without_effects(self, names: Iterable[str]) -> "CohortSpec":
        """Copy with both groups sharing the midpoint mean for ``names``."""
        prof = {k: tuple(v) for k, v in self.effect_profile.items()}
        for name in names:
            pos, neg, sd = prof.get(name, DEFAULT_EFFECTS[name])
            mid = 0.5 * (pos + neg)
            prof[name] = (mid, mid, sd)
        return replace(self, effect_profile=prof)

    def null(self) -> "CohortSpec":
        return self.without_effects(DEFAULT_EFFECTS)

    def to_json(self) -> dict:
        return {"n_positive": self.n_positive, "n_negative": self.n_negative, "days": self.days,
                "effect_profile": {k: list(v) for k, v in sorted(self.effect_profile.items())},
                "effect_scale": self.effect_scale, "seed": self.seed}

    @classmethod
    def from_json(cls, doc: dict) -> "CohortSpec":
        prof = dict(DEFAULT_EFFECTS)
        prof.update({k: tuple(v) for k, v in doc.get("effect_profile", {}).items()})
        return cls(int(doc.get("n_positive", 55)), int(doc.get("n_negative", 38)),
                   int(doc.get("days", 14)), prof, float(doc.get("effect_scale", 1.0)),
                   int(doc.get("seed", 0)))


@dataclass
class SyntheticCohort:
    bundles: List[SubjectBundle]
    labels: np.ndarray
    latents: List[Dict[str, float]]
    spec: Optional[CohortSpec] = None


def _latents(profile, positive: bool, rng) -> Dict[str, float]:
    out = {}
    for name in DEFAULT_EFFECTS:
        pos, neg, sd = profile[name]
        mu = pos if positive else neg
        v = mu + sd * rng.standard_normal() if sd > 0 else mu
        lo, hi = _CLIP[name]
        out[name] = float(min(max(v, lo), hi))
    return out


def _epoch(day: dt.date, minute: float) -> int:
    local = (day - dt.date(1970, 1, 1)).days * 86400 + int(round(minute * 60))
    return local - UTC_OFFSET_MIN * 60


def _ts(day: dt.date, minute: float) -> Timestamp:
    return Timestamp(_epoch(day, minute), UTC_OFFSET_MIN)


def _glucose(lat, start, days, rng) -> GlucoseSeries:
    n = days * 96
    minutes = np.arange(n) * 15.0
    tod = minutes % 1440
    x = np.zeros(n)
    for meal in (480.0, 840.0, 1260.0):
        amp = rng.uniform(0.6, 1.4, size=days).repeat(96)
        dt_ = tod - meal - 45.0
        x += amp * np.exp(-0.5 * (dt_ / 50.0) ** 2)
    e = np.zeros(n)
    noise = rng.standard_normal(n)
    for i in range(1, n):
        e[i] = 0.9 * e[i - 1] + 0.35 * noise[i]
    x = x + e
    # rescale so the series has exactly the latent mean and CV
    mu = lat["glucose_mean"]
    sd = lat["glucose_cv"] / 100.0 * mu
    g = mu + (x - x.mean()) / x.std() * sd
    if g.min() <= 1.0:
        g = np.maximum(g, 1.0)
    base = _epoch(start, 0.0)
    return GlucoseSeries(base + (minutes * 60).astype(np.int64), np.full(n, UTC_OFFSET_MIN), g)


def _heart_rate(lat, start, days, rng) -> HeartRateSeries:
    n = days * 1440
    tod = np.arange(n) % 1440
    circ = -9.0 * np.cos(2 * np.pi * (tod - 240.0) / 1440.0)
    noise = rng.normal(0.0, 4.0, n)
    hr = circ + noise
    hr = lat["heart_rate"] + hr - hr.mean()
    hr = np.clip(hr, 30.0, 220.0)
    base = _epoch(start, 0.0)
    return HeartRateSeries(base + np.arange(n, dtype=np.int64) * 60, np.full(n, UTC_OFFSET_MIN), hr)


def _nonneg(v):
    return float(max(v, 0.0))


def _daily(lat, day, rng) -> DailyActivityRecord:
    mvpa = _nonneg(lat["mvpa_minutes"] + rng.normal(0, 12))
    share = rng.uniform(0.45, 0.65)
    moderately = round(mvpa * share, 1)
    very = round(mvpa - moderately, 1)
    sedentary = float(np.clip(lat["sedentary_minutes"] + rng.normal(0, 60), 200, 1100))
    lightly = float(np.clip(rng.normal(240, 50), 15, 1440 - sedentary - mvpa))
    steps = _nonneg(lat["steps"] + rng.normal(0, 1500))
    peak = round(_nonneg(rng.normal(0.15, 0.05)) * mvpa, 1)
    cardio = round(_nonneg(rng.normal(0.35, 0.08)) * mvpa, 1)
    fat_burn = round(mvpa + _nonneg(rng.normal(30, 10)), 1)
    return DailyActivityRecord(
        date=day,
        calories=round(_nonneg(lat["calories"] + rng.normal(0, 150)), 1),
        steps=float(round(steps)),
        distance=round(steps * 0.00075, 3),
        sedentary_min=round(sedentary, 1),
        lightly_min=round(lightly, 1),
        moderately_min=moderately,
        very_min=very,
        fat_burn_min=fat_burn,
        cardio_min=cardio,
        peak_min=peak,
        below_zone1_min=round(float(np.clip(1440 - fat_burn - cardio - peak - 400, 0, 1440)), 1),
        zone1_min=fat_burn,
        zone2_min=cardio,
        zone3_min=peak,
        demographic_vo2max=round(lat["vo2max"] + rng.normal(0, 0.3), 2),
        resting_hr=round(lat["resting_hr"] + rng.normal(0, 1.5), 1),
    )


def _sleep(lat, wake_day, rng) -> SleepEpisode:
    wake = float(np.clip(lat["sleep_end_time"] + rng.normal(0, 25), 180, 780))
    asleep = float(np.clip(lat["sleep_duration"] + rng.normal(0, 40), 120, 720))
    awake = float(np.clip(lat["awake_duration"] + rng.normal(0, 8), 2, 180))
    deep = float(np.clip(lat["deep_sleep"] + rng.normal(0, 10), 0, asleep))
    rem = float(np.clip(lat["rem_sleep"] + rng.normal(0, 12), 0, asleep - deep))
    light = float(np.clip(lat["light_sleep"] + rng.normal(0, 25), 0, asleep - deep - rem))
    end = _ts(wake_day, round(wake))
    start = Timestamp(end.epoch - int(round(asleep + awake)) * 60, UTC_OFFSET_MIN)
    spo2 = float(np.clip(lat["spo2"] + rng.normal(0, 0.6), 80, 100))
    br = {}
    for st in SLEEP_STAGES:
        m = float(np.clip(lat["breathing"] + rng.normal(0, 0.6), 6, 30))
        br[st] = BreathingRate(round(m, 2), round(abs(rng.normal(1.5, 0.3)), 3),
                               round(abs(rng.normal(8, 2)), 3))
    overall = float(np.clip(lat["sleep_score"] + rng.normal(0, 3), 0, 100))
    return SleepEpisode(
        start=start, end=end, asleep_min=round(asleep), awake_min=round(awake),
        deep_min=round(deep), light_min=round(light), rem_min=round(rem),
        efficiency=round(100.0 * round(asleep) / (round(asleep) + round(awake)), 2),
        awakenings=float(rng.poisson(max(awake / 6.0, 0.5))),
        spo2_avg=round(spo2, 2), spo2_lower=round(spo2 - abs(rng.normal(2.0, 0.5)), 2),
        spo2_upper=round(min(spo2 + abs(rng.normal(2.0, 0.5)), 100.0), 2),
        nightly_temp_delta=round(rng.normal(0, 0.3), 3), breathing=br,
        restlessness=round(float(np.clip(rng.normal(0.1, 0.03), 0, 1)), 4),
        scores={"overall": round(overall, 2),
                "composition": round(float(np.clip(overall * 0.25 + rng.normal(0, 1), 0, 100)), 2),
                "revitalization": round(float(np.clip(overall * 0.25 + rng.normal(0, 1), 0, 100)), 2),
                "duration": round(float(np.clip(asleep / 480.0 * 50 + rng.normal(0, 1), 0, 100)), 2)},
        nightly_rmssd=round(float(np.clip(lat["rmssd"] + rng.normal(0, 4), 5, 200)), 2),
        nonrem_hr=round(float(np.clip(lat["nonrem_hr"] + rng.normal(0, 2), 30, 120)), 1),
    )


def _stress(lat, day, rng) -> StressDailyRecord:
    score = float(np.clip(lat["stress_score"] + rng.normal(0, 3), 0, 100))
    resp = float(np.clip(lat["responsiveness_points"] + rng.normal(0, 1.5), 0, score / 2))
    exert = float(np.clip(lat["exertion_points"] + rng.normal(0, 1.5), 0, score / 2))
    score, resp, exert = round(score), round(resp, 1), round(exert, 1)
    return StressDailyRecord(day, float(score), round(score - resp - exert, 1), resp, exert)


def _exercises(lat, start, days, rng) -> List[ExerciseSession]:
    n = int(rng.poisson(lat["n_activities"])) if lat["n_activities"] > 0 else 0
    out = []
    for _ in range(n):
        day = start + dt.timedelta(days=int(rng.integers(days)))
        minute = float(rng.integers(6 * 60, 20 * 60))
        dur = float(np.clip(lat["activity_duration"] + rng.normal(0, 10), 5, 240))
        hr = float(np.clip(lat["exercise_hr"] + rng.normal(0, 5), 60, 200))
        out.append(ExerciseSession(_ts(day, minute), round(dur, 1), round(hr, 1)))
    out.sort(key=lambda e: e.start.epoch)
    return out


def _eda(lat, sid, start, days, rng) -> List[EdaSession]:
    out = []
    t = np.arange(EDA_SECONDS, dtype=float)
    for k in range(N_EDA):
        day = start + dt.timedelta(days=int((k + 1) * days // (N_EDA + 1)))
        level = max(lat["scl_mean"] + rng.normal(0, 0.2), 0.1)
        drift = np.linspace(0, rng.normal(0, 0.3), len(t))
        scl = np.maximum(level + drift + rng.normal(0, 0.05, len(t)), 0.01)
        hr = lat["heart_rate"] + rng.normal(0, 3) + rng.normal(0, 2, len(t))
        out.append(EdaSession(f"{sid}-eda{k + 1}", _ts(day, 600.0 + 60 * k), t,
                              np.round(scl, 4), np.round(hr, 2),
                              round(float(np.clip(rng.normal(40, 10), 5, 150)), 2)))
    return out


def _ecg(lat, sid, start, days, rng) -> List[EcgSession]:
    out = []
    n = ECG_RATE_HZ * ECG_SECONDS
    t = np.arange(n) / ECG_RATE_HZ
    for k in range(N_ECG):
        day = start + dt.timedelta(days=int((2 * k + 1) * days // (2 * N_ECG)))
        hr = float(np.clip(lat["ecg_hr"] + rng.normal(0, 3), 35, 180))
        period = 60.0 / hr
        phase = (t % period) / period
        mv = 1.2 * np.exp(-0.5 * ((phase - 0.3) / 0.015) ** 2)
        mv += 0.25 * np.exp(-0.5 * ((phase - 0.6) / 0.05) ** 2)
        mv += rng.normal(0, 0.02, n)
        out.append(EcgSession(f"{sid}-ecg{k + 1}", _ts(day, 720.0 + 30 * k), t, np.round(mv, 5),
                              round(hr, 1)))
    return out


def _subject(index: int, positive: bool, profile, spec: CohortSpec):
    rng = np.random.default_rng([spec.seed, index])
    lat = _latents(profile, positive, rng)
    # nuisance latents shared by both groups
    lat["vo2max"] = float(np.clip(rng.normal(38, 5), 20, 60))
    lat["breathing"] = float(np.clip(rng.normal(15, 1.5), 8, 25))
    lat["rmssd"] = float(np.clip(rng.normal(35, 10), 8, 120))
    sid = f"S{index + 1:03d}"
    start = START_DATE
    end = start + dt.timedelta(days=spec.days - 1)
    initial = round(float(np.clip(rng.normal(85, 12), 55, 160)), 1)
    loss = rng.uniform(0.025, 0.09) if positive else rng.uniform(-0.02, 0.015)
    final = round(initial * (1 - loss), 1)
    meta = SubjectMeta(sid, int(round(lat["age"])),
                       "female" if rng.random() < lat["female_fraction"] else "male",
                       round(float(rng.normal(168, 9)), 1), initial, final, start, end)
    days = [start + dt.timedelta(days=k) for k in range(spec.days)]
    bundle = SubjectBundle(
        meta=meta,
        glucose=_glucose(lat, start, spec.days, rng),
        hr=_heart_rate(lat, start, spec.days, rng),
        daily=[_daily(lat, d, rng) for d in days],
        exercises=_exercises(lat, start, spec.days, rng),
        sleeps=[_sleep(lat, d, rng) for d in days[1:]],
        eda=_eda(lat, sid, start, spec.days, rng),
        ecg=_ecg(lat, sid, start, spec.days, rng),
        stress=[_stress(lat, d, rng) for d in days],
    )
    return bundle, lat


def generate_cohort(spec: CohortSpec = None) -> SyntheticCohort:
    """Simulate ``n_positive + n_negative`` subjects; labels follow group membership."""
    spec = spec or CohortSpec()
    profile = spec.profile()
    n = spec.n_positive + spec.n_negative
    groups = np.array([1] * spec.n_positive + [0] * spec.n_negative)
    groups = groups[np.random.default_rng([spec.seed, 2 ** 32]).permutation(n)]
    bundles, lats = [], []
    for i in range(n):
        b, lat = _subject(i, bool(groups[i]), profile, spec)
        bundles.append(b)
        lats.append(lat)
    return SyntheticCohort(bundles, groups.astype(np.int64), lats, spec)


def plant_label_permutation(cohort: SyntheticCohort, seed: int) -> SyntheticCohort:
    """Uniformly permuted labels; bundles are shared, not copied."""
    perm = np.random.default_rng(seed).permutation(len(cohort.labels))
    return SyntheticCohort(cohort.bundles, cohort.labels[perm].copy(), cohort.latents, cohort.spec)
