"""Canonical ordered schema of the 284 subject-level features."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

DAYPARTS = ("all", "morning", "afternoon", "evening", "night")
DAYPART_SUFFIX = {
    "all": "all day",
    "morning": "in the morning",
    "afternoon": "in the afternoon",
    "evening": "in the evening",
    "night": "at night",
}
DATASETS = ("DS4", "DS6", "DS7", "DS8", "DS9")
BLOCKS = {"DS4": (1, 65), "DS6": (66, 123), "DS7": (124, 167), "DS8": (168, 264), "DS9": (265, 284)}
N_FEATURES = 284

SPLITS3 = ("total", "weekdays", "weekend days")
SPLITS3_DAYS = ("days", "weekdays", "weekend days")
STAGES = ("full", "deep", "light", "REM")


@dataclass(frozen=True)
class FeatureEntry:
    id: int
    name: str
    dataset: str
    daypart: Optional[str] = None


def _dayparted(base: str) -> List[Tuple[str, str]]:
    return [(f"{base} {DAYPART_SUFFIX[p]}", p) for p in DAYPARTS]


def _stat6(thing: str) -> List[str]:
    return [f"avg {thing}", f"std of {thing}", f"{thing} variance", f"max of {thing}",
            f"min of {thing}", f"min-max difference of {thing}"]


def _build() -> List[FeatureEntry]:
    rows: List[Tuple[str, str, Optional[str]]] = []

    def add(ds, names):
        for n in names:
            if isinstance(n, tuple):
                rows.append((n[0], ds, n[1]))
            else:
                rows.append((n, ds, None))

    # DS4: glucose
    for base in _stat6("glucose"):
        add("DS4", _dayparted(base))
    for band in ("very high", "high", "target", "low", "very low"):
        add("DS4", _dayparted(f"% time in {band} values"))
    add("DS4", _dayparted("HbA1c avg"))
    add("DS4", _dayparted("glucose variability"))

    # DS6: heart rate, EDA-session HR, ECG waveform slope
    for base in _stat6("heart rate"):
        add("DS6", _dayparted(base))
    for thing in ("resting heart rate", "heart rate during physical activity",
                  "heart rate during non-REM sleep", "RMSSD during sleep",
                  "heart rate during EDA sessions",
                  "heart rate at the beginning of EDA sessions",
                  "heart rate at the end of EDA sessions",
                  "HRV baseline during EDA sessions"):
        add("DS6", [f"avg {thing}", f"std of {thing}"])
    ws = "waveform slope from ECG sessions"
    add("DS6", [f"avg {ws}", f"std of {ws}", f"variance of {ws}", f"max of {ws}",
                f"min of {ws}", f"min-max difference of {ws}",
                f"avg std of {ws}", f"std of std of {ws}", f"std of variance of {ws}",
                f"max of std of {ws}", f"min of std of {ws}",
                f"min-max difference of std of {ws}"])

    # DS7: physical activity
    add("DS7", ["avg calories", "std of calories", "avg steps", "std of steps",
                "avg distance", "std of distance", "number of physical activities performed",
                "avg duration of physical activities"])
    zones = ("fat burn", "cardio", "peak")
    add("DS7", [f"avg {z} minutes" for z in zones] + [f"std of {z} minutes" for z in zones])
    add("DS7", ["avg sedentary minutes", "std of sedentary minutes"])
    levels = ("lightly", "moderately", "very")
    add("DS7", [f"avg {lv} active minutes" for lv in levels]
        + [f"std of {lv} active minutes" for lv in levels])
    add("DS7", ["avg minutes below default zone 1", "std of minutes below default zone 1"])
    add("DS7", [f"avg minutes in default zone {k}" for k in (1, 2, 3)]
        + [f"std of minutes in default zone {k}" for k in (1, 2, 3)])
    add("DS7", ["avg demographic VO2 max", "std of demographic VO2 max"])
    add("DS7", [f"% of days with >= 10 {lv} active min/day" for lv in levels])
    add("DS7", ["avg MVPA minutes", "avg sedentary minutes last week"])
    add("DS7", [f"avg {lv} active minutes last week" for lv in levels])
    add("DS7", [f"% of days with >= 10 {lv} active min/day last week" for lv in levels])
    add("DS7", ["avg MVPA minutes last week"])

    # DS8: sleep
    spo2 = "oxygen saturation during sleep"
    add("DS8", [f"avg {spo2}", f"std of {spo2}",
                f"avg lower bound {spo2}", f"std of lower bound {spo2}",
                f"avg upper bound {spo2}", f"std of upper bound {spo2}"])
    add("DS8", ["avg asleep duration", "avg awake duration",
                "std of asleep duration", "std of awake duration"])
    add("DS8", [f"avg {s} duration night sleep" for s in STAGES])
    add("DS8", [f"std of {s} duration night sleep" for s in STAGES])
    add("DS8", [f"avg {s} sleep breathing rate" for s in STAGES])
    add("DS8", [f"std of {s} sleep breathing rate" for s in STAGES])
    add("DS8", [f"avg std of {s} sleep breathing rate" for s in STAGES])
    add("DS8", [f"std of std of {s} sleep breathing rate" for s in STAGES])
    add("DS8", [f"avg {s} sleep breathing rate signal to noise" for s in STAGES])
    add("DS8", [f"std of {s} sleep breathing rate signal to noise" for s in STAGES])
    for thing in ("nightly temperature", "composition score", "revitalization score",
                  "duration score", "restlessness"):
        add("DS8", [f"avg {thing}", f"std of {thing}"])
    add("DS8", [f"avg {s} overall sleep score" for s in SPLITS3] + ["std of overall sleep score"])
    add("DS8", [f"avg {s} efficiency of night sleeps" for s in SPLITS3])
    add("DS8", [f"avg {s} duration of night sleep" for s in SPLITS3[1:]])
    add("DS8", [f"avg {s} sleep start time" for s in SPLITS3])
    add("DS8", [f"avg {s} sleep end time" for s in SPLITS3])
    add("DS8", [f"avg {s} times waking up during night sleep" for s in SPLITS3])
    add("DS8", [f"avg {s} early waking up deviation time" for s in SPLITS3])
    add("DS8", [f"avg {s} late waking up deviation time" for s in SPLITS3])
    add("DS8", [f"% of {s} of regular wake-up" for s in SPLITS3_DAYS])
    add("DS8", [f"% of {s} of regular bedtime" for s in SPLITS3_DAYS])
    add("DS8", [f"% of {s} restful sleep with over 25% REM" for s in SPLITS3_DAYS])
    add("DS8", [f"% of {s} early waking time" for s in SPLITS3_DAYS])
    add("DS8", [f"% of {s} late waking time" for s in SPLITS3_DAYS])
    add("DS8", [f"% of {s} better restlessness variations" for s in SPLITS3_DAYS])
    add("DS8", [f"% of {s} worse restlessness variations" for s in SPLITS3_DAYS])

    # DS9: emotional state
    for thing in ("stress score", "sleep points", "responsiveness points", "exertion points"):
        add("DS9", [f"avg {thing}", f"std of {thing}"])
    add("DS9", ["avg SCL", "std of SCL", "SCL variance", "max SCL", "min SCL",
                "min-max difference of SCL", "avg std of SCL", "std of std of SCL",
                "std of SCL variance", "max std of SCL", "min std of SCL",
                "min-max difference of std of SCL"])

    return [FeatureEntry(i + 1, name, ds, dp) for i, (name, ds, dp) in enumerate(rows)]


def normalize_name(name: str) -> str:
    """Case/spelling-insensitive key used for name lookup."""
    s = name.lower().strip()
    s = s.replace("hb1ac", "hba1c").replace("≥", ">=").replace("\\geq", ">=")
    s = s.replace("standard deviation", "std").replace("average", "avg")
    s = s.replace("heart rate variability (hrv)", "hrv").replace("(hr)", "")
    s = s.replace("skin conductance levels (scl)", "scl").replace("skin conductance levels", "scl")
    s = s.replace("w.s.", "waveform slope")
    s = re.sub(r"\s+", " ", s)
    return s


class FeatureRegistry:
    """Immutable id -> (name, dataset, daypart) table for features 1..284."""

    def __init__(self, entries: List[FeatureEntry]):
        self.entries = tuple(entries)
        self._by_id = {e.id: e for e in self.entries}
        self._by_name = {normalize_name(e.name): e.id for e in self.entries}
        if len(self._by_name) != len(self.entries):
            raise ValueError("feature names are not unique")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, fid: int) -> FeatureEntry:
        return self._by_id[fid]

    def name(self, fid: int) -> str:
        return self._by_id[fid].name

    def resolve(self, name: str) -> int:
        key = normalize_name(name)
        try:
            return self._by_name[key]
        except KeyError:
            raise KeyError(f"no feature named {name!r}") from None

    def ids(self, dataset: str = None) -> List[int]:
        if dataset is None:
            return [e.id for e in self.entries]
        lo, hi = BLOCKS[dataset]
        return list(range(lo, hi + 1))

    def block_sizes(self) -> Dict[str, int]:
        sizes = {ds: 0 for ds in DATASETS}
        for e in self.entries:
            sizes[e.dataset] += 1
        return sizes

    def to_json(self) -> list:
        return [{"id": e.id, "name": e.name, "dataset": e.dataset, "daypart": e.daypart}
                for e in self.entries]


REGISTRY = FeatureRegistry(_build())
assert len(REGISTRY) == N_FEATURES, len(REGISTRY)
for _ds, (_lo, _hi) in BLOCKS.items():
    assert all(REGISTRY[i].dataset == _ds for i in range(_lo, _hi + 1)), _ds
