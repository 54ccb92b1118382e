"""Typed containers for one subject's standardized wearable streams."""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

GLUCOSE_BOUNDS = (0.0, 1000.0)
HR_BOUNDS = (20.0, 250.0)

ACTIVITY_MINUTE_FIELDS = (
    "sedentary_min", "lightly_min", "moderately_min", "very_min",
    "fat_burn_min", "cardio_min", "peak_min",
    "below_zone1_min", "zone1_min", "zone2_min", "zone3_min",
)
ACTIVITY_LEVEL_FIELDS = ("sedentary_min", "lightly_min", "moderately_min", "very_min")
SLEEP_STAGES = ("full", "deep", "light", "rem")
SLEEP_SCORES = ("overall", "composition", "revitalization", "duration")


class IngestError(ValueError):
    """Raised for schema violations and unparsable rows.

    ``line`` is the 1-based line number in the source file when known.
    """

    def __init__(self, message: str, *, path=None, line: Optional[int] = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class Timestamp:
    """Instant plus the local UTC offset it was recorded in."""

    epoch: int  # seconds since 1970-01-01T00:00Z
    offset_min: int

    @property
    def local_seconds(self) -> int:
        return self.epoch + 60 * self.offset_min

    @property
    def local_date(self) -> dt.date:
        return dt.date(1970, 1, 1) + dt.timedelta(days=self.local_seconds // 86400)

    @property
    def local_minute_of_day(self) -> float:
        return (self.local_seconds % 86400) / 60.0

    def isoformat(self) -> str:
        tz = dt.timezone(dt.timedelta(minutes=self.offset_min))
        return dt.datetime.fromtimestamp(self.epoch, tz).isoformat()

    @classmethod
    def parse(cls, text: str) -> "Timestamp":
        text = text.strip()
        if text.endswith("Z"):
            text = text[:-1] + "+00:00"
        t = dt.datetime.fromisoformat(text)
        if t.tzinfo is None:
            raise ValueError(f"timestamp without UTC offset: {text!r}")
        off = t.utcoffset()
        epoch = t.timestamp()
        if epoch != int(epoch):
            raise ValueError(f"sub-second timestamps are not supported: {text!r}")
        return cls(int(epoch), int(off.total_seconds() // 60))


@dataclass
class SubjectMeta:
    subject_id: str
    age: int
    sex: str
    height: float
    initial_weight: float
    final_weight: float
    intervention_start: dt.date
    intervention_end: dt.date

    def window(self):
        """Inclusive local-date window kept by standardization."""
        one = dt.timedelta(days=1)
        return self.intervention_start - one, self.intervention_end + one


@dataclass
class TimeSeries:
    """Instantaneous samples: ``epoch`` seconds, local ``offset`` minutes, ``values``."""

    epoch: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    offset: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=float))

    bounds = (-np.inf, np.inf)
    kind = "series"

    def __post_init__(self):
        self.epoch = np.asarray(self.epoch, dtype=np.int64)
        self.offset = np.asarray(self.offset, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=float)
        if not (len(self.epoch) == len(self.offset) == len(self.values)):
            raise ValueError("epoch, offset and values must have equal length")

    def __len__(self):
        return len(self.values)

    @classmethod
    def from_samples(cls, samples):
        """Build from ``(Timestamp, value)`` pairs."""
        samples = list(samples)
        return cls(
            np.array([s[0].epoch for s in samples], dtype=np.int64),
            np.array([s[0].offset_min for s in samples], dtype=np.int64),
            np.array([s[1] for s in samples], dtype=float),
        )

    @property
    def samples(self):
        return [(Timestamp(int(e), int(o)), float(v))
                for e, o, v in zip(self.epoch, self.offset, self.values)]

    def local_minute_of_day(self) -> np.ndarray:
        return ((self.epoch + 60 * self.offset) % 86400) / 60.0

    def local_day_number(self) -> np.ndarray:
        """Local calendar day as days since 1970-01-01."""
        return (self.epoch + 60 * self.offset) // 86400

    def in_bounds(self) -> np.ndarray:
        lo, hi = self.bounds
        return (self.values > lo) & (self.values < hi)

    def take(self, idx):
        return type(self)(self.epoch[idx], self.offset[idx], self.values[idx])

    def __eq__(self, other):
        return (type(self) is type(other)
                and np.array_equal(self.epoch, other.epoch)
                and np.array_equal(self.offset, other.offset)
                and np.array_equal(self.values, other.values))


class GlucoseSeries(TimeSeries):
    bounds = GLUCOSE_BOUNDS
    kind = "cgm"


class HeartRateSeries(TimeSeries):
    bounds = HR_BOUNDS
    kind = "hr"


@dataclass
class DailyActivityRecord:
    date: dt.date
    calories: float
    steps: float
    distance: float
    sedentary_min: float
    lightly_min: float
    moderately_min: float
    very_min: float
    fat_burn_min: float
    cardio_min: float
    peak_min: float
    below_zone1_min: float
    zone1_min: float
    zone2_min: float
    zone3_min: float
    demographic_vo2max: float = float("nan")
    resting_hr: float = float("nan")

    def violations(self) -> List[str]:
        out = []
        for name in ACTIVITY_MINUTE_FIELDS:
            v = getattr(self, name)
            if not np.isnan(v) and not 0 <= v <= 1440:
                out.append(f"{name}={v} outside [0, 1440]")
        levels = sum(np.nan_to_num(getattr(self, n)) for n in ACTIVITY_LEVEL_FIELDS)
        if levels > 1440:
            out.append(f"activity-level minutes sum to {levels} > 1440")
        for name in ("steps", "calories", "distance"):
            v = getattr(self, name)
            if not np.isnan(v) and v < 0:
                out.append(f"{name}={v} negative")
        return out


@dataclass
class ExerciseSession:
    start: Timestamp
    duration: float
    avg_hr: float = float("nan")

    def violations(self) -> List[str]:
        out = []
        if not self.duration > 0:
            out.append(f"duration={self.duration} not positive")
        if not np.isnan(self.avg_hr) and not HR_BOUNDS[0] < self.avg_hr < HR_BOUNDS[1]:
            out.append(f"avg_hr={self.avg_hr} outside heart-rate bounds")
        return out


@dataclass
class BreathingRate:
    mean: float = float("nan")
    std: float = float("nan")
    snr: float = float("nan")


@dataclass
class SleepEpisode:
    start: Timestamp
    end: Timestamp
    asleep_min: float
    awake_min: float
    deep_min: float = float("nan")
    light_min: float = float("nan")
    rem_min: float = float("nan")
    efficiency: float = float("nan")
    awakenings: float = float("nan")
    spo2_avg: float = float("nan")
    spo2_lower: float = float("nan")
    spo2_upper: float = float("nan")
    nightly_temp_delta: float = float("nan")
    breathing: dict = field(default_factory=lambda: {s: BreathingRate() for s in SLEEP_STAGES})
    restlessness: float = float("nan")
    scores: dict = field(default_factory=lambda: {s: float("nan") for s in SLEEP_SCORES})
    nightly_rmssd: float = float("nan")
    nonrem_hr: float = float("nan")

    @property
    def wake_date(self) -> dt.date:
        return self.end.local_date

    def stage_total(self) -> float:
        return float(np.nansum([self.deep_min, self.light_min, self.rem_min]))

    def violations(self) -> List[str]:
        out = []
        span = (self.end.epoch - self.start.epoch) / 60.0
        if span <= 0:
            out.append("end not after start")
        stages = np.nansum([self.asleep_min, self.awake_min])
        if stages > span + 1:
            out.append(f"asleep+awake minutes {stages} exceed episode length {span}")
        if not np.isnan(self.efficiency) and not 0 <= self.efficiency <= 100:
            out.append(f"efficiency={self.efficiency} outside [0, 100]")
        for name, v in self.scores.items():
            if not np.isnan(v) and not 0 <= v <= 100:
                out.append(f"{name} score={v} outside [0, 100]")
        if not np.isnan(self.restlessness) and not 0 <= self.restlessness <= 1:
            out.append(f"restlessness={self.restlessness} outside [0, 1]")
        for name in ("asleep_min", "awake_min", "deep_min", "light_min", "rem_min"):
            v = getattr(self, name)
            if not np.isnan(v) and v < 0:
                out.append(f"{name}={v} negative")
        return out


@dataclass
class EdaSession:
    """Electrodermal session; ``t`` seconds from start, ``scl`` in microsiemens.

    ``hr`` holds per-sample heart rate (NaN where the device reported none).
    """

    session_id: str
    start: Timestamp
    t: np.ndarray
    scl: np.ndarray
    hr: np.ndarray
    hrv_baseline: float = float("nan")

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.scl = np.asarray(self.scl, dtype=float)
        self.hr = np.asarray(self.hr, dtype=float)

    def _hr_window(self, mask) -> float:
        vals = self.hr[mask]
        vals = vals[~np.isnan(vals)]
        return float(vals.mean()) if len(vals) else float("nan")

    @property
    def hr_mean(self) -> float:
        return self._hr_window(np.ones(len(self.hr), dtype=bool))

    @property
    def hr_begin(self) -> float:
        if not len(self.t):
            return float("nan")
        return self._hr_window(self.t < self.t[0] + 30.0)

    @property
    def hr_end(self) -> float:
        if not len(self.t):
            return float("nan")
        return self._hr_window(self.t > self.t[-1] - 30.0)

    def violations(self) -> List[str]:
        out = []
        if len(self.scl) == 0:
            out.append("empty SCL samples")
        elif np.any(self.scl < 0):
            out.append("negative SCL sample")
        return out

    def __eq__(self, other):
        return (isinstance(other, EdaSession) and self.session_id == other.session_id
                and self.start == other.start
                and np.array_equal(self.t, other.t)
                and np.array_equal(self.scl, other.scl)
                and np.array_equal(self.hr, other.hr, equal_nan=True)
                and _same(self.hrv_baseline, other.hrv_baseline))


@dataclass
class EcgSession:
    session_id: str
    start: Timestamp
    t: np.ndarray
    mv: np.ndarray
    session_hr: float = float("nan")

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.mv = np.asarray(self.mv, dtype=float)

    def violations(self) -> List[str]:
        if len(self.t) < 2:
            return ["fewer than 2 waveform samples"]
        dts = np.diff(self.t)
        if dts[0] <= 0 or not np.allclose(dts, dts[0], rtol=1e-6, atol=1e-9):
            return ["waveform sampling interval not uniform and positive"]
        return []

    def __eq__(self, other):
        return (isinstance(other, EcgSession) and self.session_id == other.session_id
                and self.start == other.start
                and np.array_equal(self.t, other.t) and np.array_equal(self.mv, other.mv)
                and _same(self.session_hr, other.session_hr))


@dataclass
class StressDailyRecord:
    date: dt.date
    stress_score: float
    sleep_points: float = float("nan")
    responsiveness_points: float = float("nan")
    exertion_points: float = float("nan")

    def violations(self) -> List[str]:
        out = []
        for name in ("stress_score", "sleep_points", "responsiveness_points", "exertion_points"):
            v = getattr(self, name)
            if not np.isnan(v) and not 0 <= v <= 100:
                out.append(f"{name}={v} outside [0, 100]")
        return out


@dataclass
class SubjectBundle:
    meta: SubjectMeta
    glucose: GlucoseSeries = field(default_factory=GlucoseSeries)
    hr: HeartRateSeries = field(default_factory=HeartRateSeries)
    daily: List[DailyActivityRecord] = field(default_factory=list)
    exercises: List[ExerciseSession] = field(default_factory=list)
    sleeps: List[SleepEpisode] = field(default_factory=list)
    eda: List[EdaSession] = field(default_factory=list)
    ecg: List[EcgSession] = field(default_factory=list)
    stress: List[StressDailyRecord] = field(default_factory=list)


def _same(a: float, b: float) -> bool:
    return a == b or (np.isnan(a) and np.isnan(b))
