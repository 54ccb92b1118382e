from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import stats as sps

from oracles import bh_oracle, chi2_sf_df1, chi_square_oracle, pearson_oracle, rank_sum_exact_oracle
from wearlab.cohortstats import (
    bh_fdr,
    chi_square_test,
    group_summary_table,
    pearson,
    pearson_matrix,
    rank_sum_test,
    strong_pairs,
    CorrelationMatrix,
)
from wearlab.featgen import CohortMatrix

finite = st.floats(-1e3, 1e3, allow_nan=False)


# ---------------------------------------------------------------- pearson

def test_pearson_examples():
    x = [1.0, 2.0, 5.0, 3.0]
    assert pearson(x, x) == pytest.approx(1.0, abs=1e-15)
    assert pearson(x, [-v for v in x]) == pytest.approx(-1.0, abs=1e-15)
    assert pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(pearson_oracle([1, 2, 3], [1, 2, 4]), abs=1e-12)
    assert pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(0.981981, abs=1e-6)


def test_pearson_undefined():
    assert math.isnan(pearson([1, 1, 1], [1, 2, 3]))
    assert math.isnan(pearson([1, float("nan"), 3], [1, 2, float("nan")]))


def test_pearson_pairwise_deletion():
    x = [1, 2, float("nan"), 4, 5]
    y = [2, 1, 9, 4, 3]
    assert pearson(x, y) == pytest.approx(pearson([1, 2, 4, 5], [2, 1, 4, 3]), abs=1e-15)


grid = st.integers(-10000, 10000).map(lambda k: k / 10)


@given(st.lists(st.tuples(grid, grid), min_size=3, max_size=20),
       st.floats(0.1, 10), st.floats(-50, 50))
def test_pearson_properties(pairs, a, b):
    x = [p[0] for p in pairs]
    y = [p[1] for p in pairs]
    r = pearson(x, y)
    assume(not math.isnan(r))
    assert pearson(y, x) == pytest.approx(r, abs=1e-12)
    assert pearson([a * v + b for v in x], y) == pytest.approx(r, abs=1e-6)
    assert pearson([-v for v in x], y) == pytest.approx(-r, abs=1e-12)
    assert -1 <= r <= 1


def test_pearson_matrix_consistent(small_cohort):
    from wearlab.featgen import build_matrix
    m = build_matrix(small_cohort.bundles).select_features([1, 6, 61, 98, 99, 131, 265, 273])
    cm = pearson_matrix(m)
    assert cm.rho.shape == (8, 8)
    for i in range(8):
        for j in range(8):
            r = pearson(m.values[:, i], m.values[:, j])
            if math.isnan(r):
                assert math.isnan(cm.rho[i, j])
            else:
                assert cm.rho[i, j] == pytest.approx(r, abs=1e-12)
                assert cm.rho[i, j] == cm.rho[j, i]


def test_pearson_matrix_duplicate_column():
    rng = np.random.default_rng(1)
    x = rng.normal(size=10)
    m = CohortMatrix([f"s{i}" for i in range(10)], np.c_[x, x, rng.normal(size=10)], [0, 1] * 5)
    cm = pearson_matrix(m)
    assert cm.rho[0, 1] == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(np.diag(cm.rho), 1)


# ---------------------------------------------------------------- strong pairs

def test_strong_pairs_examples():
    ident = CorrelationMatrix(np.array([1, 2, 3]), np.eye(3))
    assert strong_pairs(ident, 0.6) == []
    rho = np.array([[1, 1, -1], [1, 1, 0.5], [-1, 0.5, 1.0]])
    assert {(i, j) for i, j, _ in strong_pairs(CorrelationMatrix(np.array([1, 2, 3]), rho), 1.0)} \
        == {(1, 2), (1, 3)}


def test_strong_pairs_planted():
    rng = np.random.default_rng(4)
    n = 2000
    x = rng.normal(size=n)
    y = 0.9 * x + math.sqrt(1 - 0.81) * rng.normal(size=n)
    noise = rng.normal(size=(n, 3))
    m = CohortMatrix([str(i) for i in range(n)], np.c_[noise[:, 0], x, noise[:, 1], y, noise[:, 2]],
                     np.arange(n) % 2, [10, 20, 30, 40, 50])
    pairs = strong_pairs(pearson_matrix(m), 0.8)
    assert pairs[0][:2] == (20, 40)
    assert pairs[0][2] == pytest.approx(pearson_oracle(x.tolist(), y.tolist()), abs=1e-9)


# ---------------------------------------------------------------- rank-sum

def test_rank_sum_examples():
    u, p = rank_sum_test([1, 2], [3, 4])
    assert u == 0 and p == pytest.approx(1 / 3, abs=1e-15)
    assert rank_sum_test([5, 5, 5], [5, 5, 5])[1] == 1.0


small_sample = st.lists(st.integers(0, 6).map(float), min_size=1, max_size=6)


@given(small_sample, small_sample)
def test_rank_sum_exact_oracle(a, b):
    assume(len(a) + len(b) <= 12)
    u, p = rank_sum_test(a, b)
    u_ref, p_ref = rank_sum_exact_oracle(a, b)
    assert u == u_ref
    assert p == pytest.approx(float(p_ref), abs=1e-12)


def _both_modes(a, b):
    from wearlab import cohortstats
    exact = rank_sum_test(a, b)[1]
    try:
        cohortstats.EXACT_MAX_N = 0
        approx = rank_sum_test(a, b)[1]
    finally:
        cohortstats.EXACT_MAX_N = 12
    return exact, approx


def test_normal_approximation_close_to_exact():
    """Every tie-free configuration with 8..12 subjects, enumerated by rank pattern.

    The 0.02 agreement holds once both groups have at least five members;
    smaller groups are too coarse for the normal approximation, and for
    them the measured worst case is pinned instead.
    """
    worst_small = 0.0
    for n in range(8, 13):
        for na in range(1, n):
            seen = set()
            for combo in itertools.combinations(range(n), na):
                u = sum(combo) - na * (na - 1) // 2
                if u in seen:
                    continue
                seen.add(u)
                a = [float(r) for r in combo]
                b = [float(r) for r in range(n) if r not in combo]
                exact, approx = _both_modes(a, b)
                if min(na, n - na) >= 5:
                    assert abs(exact - approx) <= 0.02, (a, b)
                else:
                    worst_small = max(worst_small, abs(exact - approx))
    assert worst_small == pytest.approx(0.1173, abs=1e-4)


def test_rank_sum_null_calibration():
    ps = []
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        ps.append(rank_sum_test(rng.normal(size=50), rng.normal(size=50))[1])
    assert sps.kstest(ps, "uniform").pvalue > 1e-3


# ---------------------------------------------------------------- chi-square

@pytest.mark.parametrize("table,chi2,p", [
    ([[10, 10], [10, 10]], 0.0, 1.0),
    ([[20, 10], [10, 20]], 20 / 3, chi2_sf_df1(20 / 3)),
    ([[1, 0], [0, 1]], 2.0, chi2_sf_df1(2.0)),
])
def test_chi_square_examples(table, chi2, p):
    got = chi_square_test(table)
    assert got[0] == pytest.approx(chi2, abs=1e-12)
    assert got[1] == pytest.approx(p, abs=1e-12)


def test_chi_square_known_values():
    assert chi_square_test([[20, 10], [10, 20]])[1] == pytest.approx(0.00982, abs=5e-6)
    assert chi_square_test([[1, 0], [0, 1]])[1] == pytest.approx(0.1573, abs=5e-5)


def test_chi_square_zero_margin():
    assert all(math.isnan(v) for v in chi_square_test([[0, 0], [3, 4]]))


@given(st.lists(st.integers(0, 30), min_size=4, max_size=4))
def test_chi_square_oracle(cells):
    a, b, c, d = cells
    assume(a + b > 0 and c + d > 0 and a + c > 0 and b + d > 0)
    stat, p = chi_square_test([[a, b], [c, d]])
    assert stat == pytest.approx(chi_square_oracle([[a, b], [c, d]]), rel=1e-9, abs=1e-9)
    assert p == pytest.approx(chi2_sf_df1(stat), rel=1e-9, abs=1e-12)


# ---------------------------------------------------------------- BH

def test_bh_examples():
    assert bh_fdr([0.3]) == [0.3]
    assert bh_fdr([0.01, 0.02, 0.03, 0.04]) == pytest.approx([0.04] * 4, abs=1e-15)
    assert bh_fdr([]) == []


pvals = st.lists(st.floats(0, 1), min_size=1, max_size=25)


@given(pvals)
def test_bh_oracle_and_dominance(p):
    adj = bh_fdr(p)
    assert adj == pytest.approx(bh_oracle(p), abs=1e-12)
    assert all(q >= r for q, r in zip(adj, p))


@given(pvals, st.randoms())
def test_bh_permutation_equivariant(p, rnd):
    perm = list(range(len(p)))
    rnd.shuffle(perm)
    adj = bh_fdr(p)
    adj_perm = bh_fdr([p[i] for i in perm])
    assert adj_perm == pytest.approx([adj[i] for i in perm], abs=1e-15)


@given(pvals)
def test_bh_idempotent_on_adjusted(p):
    once = bh_fdr(p)
    # already-adjusted values are monotone in rank; applying again cannot lower them
    twice = bh_fdr(once)
    assert all(t >= o - 1e-15 for t, o in zip(twice, once))


# ---------------------------------------------------------------- summary table

def test_summary_identical_groups():
    vals = np.tile(np.arange(10.0)[:, None], (2, 3))
    m = CohortMatrix([str(i) for i in range(20)], vals, [1] * 10 + [0] * 10, [1, 2, 3],
                     demographics={"age": np.tile(np.arange(30.0, 40.0), 2),
                                   "sex": np.tile([1.0, 0.0] * 5, 2)})
    res, text = group_summary_table(m, ["age", "sex", 1, 2, 3])
    assert len(res) == 5
    assert all(r.p_value == pytest.approx(1.0) for r in res)
    assert all(r.adjusted_p >= r.p_value for r in res)
    assert "Adjusted P-value" in text


def test_summary_row_count_and_bh_family(small_cohort):
    from wearlab.featgen import build_matrix
    m = build_matrix(small_cohort.bundles, small_cohort.labels)
    subset = [1, 61, 265, 174]
    res, _ = group_summary_table(m, subset)
    assert [r.feature for r in res] == subset
    assert [r.adjusted_p for r in res] == pytest.approx(bh_oracle([r.p_value for r in res]))
