from __future__ import annotations

import json
from math import erf, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from conftest import bundles_equal
from wearlab.evalharness import run_experiment
from wearlab.featgen import build_matrix
from wearlab.ingest import CleaningReport, label_value, standardize_bundle
from wearlab.synthcohort import (
    DEFAULT_EFFECTS,
    EMOTIONAL_STATE,
    CohortSpec,
    generate_cohort,
    plant_label_permutation,
)
from wearlab.learners import ModelSpec

# planted signal -> the registry feature that summarises it
SIGNAL_FEATURE = {
    "glucose_cv": 61, "glucose_mean": 1, "stress_score": 265, "responsiveness_points": 269,
    "exertion_points": 271, "rem_sleep": 181, "deep_sleep": 179, "sleep_score": 220,
    "sleep_duration": 174, "mvpa_minutes": 159, "n_activities": 130, "activity_duration": 131,
    "heart_rate": 66,
}
RECOVERY_SEEDS = range(20)


@pytest.fixture(scope="module")
def default_cohort():
    return generate_cohort(CohortSpec(seed=0))


@pytest.fixture(scope="module")
def default_matrix(default_cohort):
    return build_matrix(default_cohort.bundles, default_cohort.labels)


@pytest.fixture(scope="module")
def recovery_matrices():
    return [build_matrix(c.bundles, c.labels)
            for c in (generate_cohort(CohortSpec(seed=s)) for s in RECOVERY_SEEDS)]


def sign_power(signal, n_pos=55, n_neg=38):
    """Chance the group-mean difference of the latent has the planted sign."""
    pos, neg, sd = DEFAULT_EFFECTS[signal]
    z = abs(pos - neg) / (sd * sqrt(1 / n_pos + 1 / n_neg))
    return 0.5 * (1 + erf(z / sqrt(2)))


# spec


def test_spec_validation_and_profile():
    with pytest.raises(ValueError):
        CohortSpec(n_positive=0)
    with pytest.raises(ValueError):
        CohortSpec(days=1)
    with pytest.raises(ValueError, match="unknown effect"):
        CohortSpec(effect_profile={"charisma": (1, 0, 1)})
    with pytest.raises(ValueError, match="negative std"):
        CohortSpec(effect_profile={"glucose_cv": (1, 0, -1)})
    prof = CohortSpec(effect_scale=3.0).profile()
    pos, neg, sd = prof["glucose_cv"]
    assert pos - neg == pytest.approx(3 * (16.64 - 14.68))
    assert (pos + neg) / 2 == pytest.approx((16.64 + 14.68) / 2)
    quiet = CohortSpec(effect_scale=3.0).without_effects(EMOTIONAL_STATE).profile()
    assert all(quiet[s][0] == quiet[s][1] for s in EMOTIONAL_STATE)
    assert quiet["glucose_cv"] == prof["glucose_cv"]
    assert all(p == n for p, n, _ in CohortSpec().null().profile().values())


def test_spec_json_round_trip():
    spec = CohortSpec(7, 5, 9, {"glucose_cv": (20.0, 10.0, 1.0)}, 2.0, 11)
    back = CohortSpec.from_json(json.loads(json.dumps(spec.to_json())))
    assert back.profile() == spec.profile()
    assert (back.n_positive, back.n_negative, back.days, back.seed) == (7, 5, 9, 11)


# generation


def test_default_cohort_size(default_cohort):
    assert len(default_cohort.bundles) == 93
    assert int(default_cohort.labels.sum()) == 55
    ids = [b.meta.subject_id for b in default_cohort.bundles]
    assert len(set(ids)) == 93


def test_labels_follow_weights(default_cohort):
    assert [label_value(b.meta) for b in default_cohort.bundles] == default_cohort.labels.tolist()


def test_generated_bundles_are_already_standard(small_cohort):
    for b in small_cohort.bundles:
        report = CleaningReport(b.meta.subject_id)
        clean = standardize_bundle(b, strict=True, report=report)
        assert report.total_dropped == 0 and not report.violations
        assert bundles_equal(clean, b)


def test_streams_cover_the_window(small_cohort):
    b = small_cohort.bundles[0]
    days = small_cohort.spec.days
    assert len(b.daily) == days and len(b.stress) == days and len(b.sleeps) == days - 1
    assert len(b.glucose.values) == days * 96
    assert b.eda and b.ecg


@settings(max_examples=5)
@given(st.integers(0, 2**31 - 1))
def test_generation_is_deterministic_per_seed(seed):
    spec = CohortSpec(n_positive=2, n_negative=2, days=3, seed=seed)
    a, b = generate_cohort(spec), generate_cohort(spec)
    assert np.array_equal(a.labels, b.labels)
    assert all(bundles_equal(x, y) for x, y in zip(a.bundles, b.bundles))


def test_different_seeds_differ():
    a = generate_cohort(CohortSpec(n_positive=2, n_negative=2, days=3, seed=1))
    b = generate_cohort(CohortSpec(n_positive=2, n_negative=2, days=3, seed=2))
    assert not np.array_equal(a.bundles[0].glucose.values, b.bundles[0].glucose.values)


# label permutation


TINY = generate_cohort(CohortSpec(n_positive=4, n_negative=3, days=2, seed=0))


@given(st.integers(0, 2**32 - 1))
def test_permutation_preserves_counts_and_inverts(seed):
    cohort = TINY
    perm = np.random.default_rng(seed).permutation(len(cohort.labels))
    shuffled = plant_label_permutation(cohort, seed)
    assert np.array_equal(shuffled.labels, cohort.labels[perm])
    assert shuffled.labels.sum() == cohort.labels.sum()
    restored = np.empty_like(shuffled.labels)
    restored[perm] = shuffled.labels
    assert np.array_equal(restored, cohort.labels)
    assert shuffled.bundles is cohort.bundles


# calibration


def _group_check(matrix, fid, target_pos, target_neg, k=3.0):
    col = matrix.columns([fid])[:, 0]
    y = matrix.labels
    for grp, target in ((1, target_pos), (0, target_neg)):
        v = col[y == grp]
        v = v[~np.isnan(v)]
        se = v.std(ddof=1) / sqrt(len(v))
        assert abs(v.mean() - target) <= k * se, (fid, grp, v.mean(), target, se)


def test_glucose_variability_matches_targets(default_matrix):
    _group_check(default_matrix, 61, 16.64, 14.68)


def test_stress_score_matches_targets(default_matrix):
    _group_check(default_matrix, 265, 75.70, 79.84)


def test_well_powered_signals_recover_planted_sign(recovery_matrices):
    powered = [s for s in SIGNAL_FEATURE if sign_power(s) >= 0.975]
    assert {"glucose_cv", "stress_score", "responsiveness_points", "rem_sleep"} <= set(powered)
    for signal in powered:
        pos, neg, _ = DEFAULT_EFFECTS[signal]
        hits = 0
        for m in recovery_matrices:
            col = m.columns([SIGNAL_FEATURE[signal]])[:, 0]
            diff = np.nanmean(col[m.labels == 1]) - np.nanmean(col[m.labels == 0])
            hits += np.sign(diff) == np.sign(pos - neg)
        assert hits >= 0.95 * len(recovery_matrices), (signal, hits)


def test_sign_recovery_tracks_latent_power(recovery_matrices):
    # weak planted effects cannot reach 95% at this cohort size; their
    # recovery rate must still agree with the power of the latent difference
    n = len(recovery_matrices)
    for signal, fid in SIGNAL_FEATURE.items():
        pos, neg, _ = DEFAULT_EFFECTS[signal]
        hits = 0
        for m in recovery_matrices:
            col = m.columns([fid])[:, 0]
            diff = np.nanmean(col[m.labels == 1]) - np.nanmean(col[m.labels == 0])
            hits += np.sign(diff) == np.sign(pos - neg)
        p = sign_power(signal)
        assert binom.cdf(hits, n, p) >= 1e-3 and binom.sf(hits - 1, n, p) >= 1e-3, (signal, hits, p)


def test_age_effect_in_demographics(recovery_matrices):
    older = sum(m.demographics["age"][m.labels == 1].mean() > m.demographics["age"][m.labels == 0].mean()
                for m in recovery_matrices)
    assert older >= 19


def test_zero_effect_cohorts_evaluate_at_chance():
    # one cohort's leave-one-out AUC spreads with sd near 0.1, so average many
    spec = ModelSpec("gb", {"n_estimators": 20, "max_depth": 2})
    aucs = []
    for s in range(3, 15):
        c = generate_cohort(CohortSpec(seed=s).null())
        m = build_matrix(c.bundles, c.labels)
        aucs.append(run_experiment(m, "combined", None, spec, seeds=[0]).mean_auc)
    assert abs(np.mean(aucs) - 0.5) <= 0.1, aucs
