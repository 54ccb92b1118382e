"""Scalar building blocks shared by the dataset extractors."""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

NAN = float("nan")

DAYPART_BOUNDS = {
    "morning": (360, 720),
    "afternoon": (720, 1080),
    "evening": (1080, 1440),
    "night": (0, 360),
}


class Stats6(NamedTuple):
    mean: float
    std: float
    variance: float
    max: float
    min: float
    range: float


class BandFractions(NamedTuple):
    very_high: float
    high: float
    target: float
    low: float
    very_low: float


def daypart_masks(minute_of_day: np.ndarray) -> dict:
    """Boolean masks per day-part over local minute-of-day values.

    Intervals are half-open: morning is [06:00, 12:00) and so on.
    """
    m = np.asarray(minute_of_day, dtype=float)
    out = {"all": np.ones(len(m), dtype=bool)}
    for name, (lo, hi) in DAYPART_BOUNDS.items():
        out[name] = (m >= lo) & (m < hi)
    return out


def partition_by_daypart(series) -> dict:
    """Split a :class:`~wearlab.ingest.types.TimeSeries` into the five day-parts."""
    masks = daypart_masks(series.local_minute_of_day())
    return {name: series.take(mask) for name, mask in masks.items()}


def descriptive_stats(xs: Sequence[float]) -> Stats6:
    """Mean, population std and variance, max, min and range; NaNs ignored."""
    x = np.asarray(xs, dtype=float)
    x = x[~np.isnan(x)]
    if len(x) == 0:
        return Stats6(NAN, NAN, NAN, NAN, NAN, NAN)
    mean = float(x.mean())
    var = float(np.mean((x - mean) ** 2))
    hi, lo = float(x.max()), float(x.min())
    return Stats6(mean, float(np.sqrt(var)), var, hi, lo, hi - lo)


def mean_std(xs) -> tuple:
    s = descriptive_stats(xs)
    return s.mean, s.std


def glucose_band_fractions(values) -> BandFractions:
    """Percent of readings in each clinical band.

    Bands: very low < 54, low [54, 70), target [70, 180], high (180, 250],
    very high > 250 mg/dL.
    """
    g = np.asarray(getattr(values, "values", values), dtype=float)
    n = len(g)
    if n == 0:
        return BandFractions(NAN, NAN, NAN, NAN, NAN)
    counts = (
        np.count_nonzero(g > 250),
        np.count_nonzero((g > 180) & (g <= 250)),
        np.count_nonzero((g >= 70) & (g <= 180)),
        np.count_nonzero((g >= 54) & (g < 70)),
        np.count_nonzero(g < 54),
    )
    return BandFractions(*(100.0 * c / n for c in counts))


def estimated_hba1c(mean_glucose: float) -> float:
    """Linear estimate of glycated haemoglobin (%) from mean glucose in mg/dL."""
    if not mean_glucose > 0:
        raise ValueError(f"mean glucose must be positive, got {mean_glucose}")
    return (mean_glucose + 46.7) / 28.7


def glucose_cv(values) -> float:
    g = np.asarray(getattr(values, "values", values), dtype=float)
    if len(g) == 0:
        return NAN
    s = descriptive_stats(g)
    if not s.mean > 0:
        return NAN
    return 100.0 * s.std / s.mean


def rmssd(intervals) -> float:
    """Root mean square of successive differences; NaN for fewer than 2 intervals."""
    x = np.asarray(intervals, dtype=float)
    if len(x) < 2:
        return NAN
    d = np.diff(x)
    return float(np.sqrt(np.mean(d * d)))
