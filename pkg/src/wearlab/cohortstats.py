"""Cohort-level statistics: correlation, group tests, FDR, summary table."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy import stats as sps

from .featgen.matrix import CohortMatrix

NAN = float("nan")
EXACT_MAX_N = 12


def pearson(f1, f2) -> float:
    """Pearson correlation with pairwise deletion; NaN when undefined."""
    x = np.asarray(f1, dtype=float)
    y = np.asarray(f2, dtype=float)
    if x.shape != y.shape:
        raise ValueError("pearson needs equal-length inputs")
    ok = ~(np.isnan(x) | np.isnan(y))
    x, y = x[ok], y[ok]
    if len(x) < 2:
        return NAN
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = math.fsum(dx * dx)
    syy = math.fsum(dy * dy)
    if sxx <= 0 or syy <= 0:
        return NAN
    r = math.fsum(dx * dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


@dataclass
class CorrelationMatrix:
    ids: np.ndarray
    rho: np.ndarray


def pearson_matrix(matrix: CohortMatrix) -> CorrelationMatrix:
    """All-pairs Pearson correlation with per-cell pairwise deletion."""
    if matrix.n_subjects < 2:
        raise ValueError("need at least 2 subjects")
    X = matrix.values
    m = X.shape[1]
    rho = np.full((m, m), NAN)
    complete = ~np.isnan(X).any(axis=0)
    idx = np.flatnonzero(complete)
    if len(idx):
        # fast path for fully observed columns
        Z = X[:, idx] - X[:, idx].mean(axis=0)
        ss = np.einsum("ij,ij->j", Z, Z)
        good = ss > 0
        C = (Z.T @ Z) / np.sqrt(np.outer(ss, ss), where=np.outer(good, good),
                                out=np.ones((len(idx), len(idx))))
        C = np.clip(C, -1.0, 1.0)
        C[~good, :] = NAN
        C[:, ~good] = NAN
        rho[np.ix_(idx, idx)] = C
    partial = np.flatnonzero(~complete)
    for i in partial:
        for j in range(m):
            rho[i, j] = rho[j, i] = pearson(X[:, i], X[:, j])
    for i in range(m):
        if not np.isnan(rho[i, i]):
            rho[i, i] = 1.0
    rho = np.where(np.isnan(rho), rho, (rho + rho.T) / 2)
    return CorrelationMatrix(matrix.feature_ids.copy(), rho)


def strong_pairs(cm: CorrelationMatrix, threshold: float) -> List[Tuple[int, int, float]]:
    """Pairs with ``|rho| > threshold``, strongest first; ties by (i, j)."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    out = []
    m = len(cm.ids)
    for a in range(m):
        for b in range(a + 1, m):
            r = cm.rho[a, b]
            if not np.isnan(r) and (abs(r) > threshold or (threshold == 1.0 and abs(r) == 1.0)):
                out.append((int(cm.ids[a]), int(cm.ids[b]), float(r)))
    out.sort(key=lambda t: (-abs(t[2]), t[0], t[1]))
    return out


def _u_statistic(a: np.ndarray, b: np.ndarray) -> float:
    pooled = np.concatenate([a, b])
    ranks = sps.rankdata(pooled)
    return float(ranks[: len(a)].sum() - len(a) * (len(a) + 1) / 2)


def rank_sum_test(a, b) -> Tuple[float, float]:
    """Two-sided Mann-Whitney rank-sum test; returns ``(U_a, p)``.

    ``U_a`` counts pairs with a > b plus half the ties. For at most 12
    observations in total the p-value is exact (all label assignments are
    enumerated); otherwise the tie- and continuity-corrected normal
    approximation is used.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a, b = a[~np.isnan(a)], b[~np.isnan(b)]
    na, nb = len(a), len(b)
    if na == 0 or nb == 0:
        raise ValueError("rank_sum_test needs two non-empty samples")
    u = _u_statistic(a, b)
    mu = na * nb / 2.0
    n = na + nb
    if n <= EXACT_MAX_N:
        ranks = sps.rankdata(np.concatenate([a, b]))
        obs = abs(u - mu)
        extreme = total = 0
        offset = na * (na + 1) / 2.0
        for combo in itertools.combinations(range(n), na):
            uc = ranks[list(combo)].sum() - offset
            total += 1
            if abs(uc - mu) >= obs - 1e-9:
                extreme += 1
        return u, extreme / total
    pooled = np.concatenate([a, b])
    _, counts = np.unique(pooled, return_counts=True)
    tie = float(np.sum(counts ** 3 - counts))
    var = na * nb / 12.0 * ((n + 1) - tie / (n * (n - 1)))
    if var <= 0:
        return u, 1.0
    z = (abs(u - mu) - 0.5) / math.sqrt(var)
    if z <= 0:
        return u, 1.0
    return u, float(min(1.0, 2.0 * sps.norm.sf(z)))


def chi_square_test(table) -> Tuple[float, float]:
    """Pearson chi-square on a 2x2 table, no continuity correction."""
    t = np.asarray(table, dtype=float)
    if t.shape != (2, 2) or np.any(t < 0):
        raise ValueError("need a 2x2 table of non-negative counts")
    rows = t.sum(axis=1)
    cols = t.sum(axis=0)
    n = t.sum()
    if np.any(rows == 0) or np.any(cols == 0):
        return NAN, NAN
    (a, b), (c, d) = t
    chi2 = n * (a * d - b * c) ** 2 / (rows[0] * rows[1] * cols[0] * cols[1])
    return float(chi2), float(sps.chi2.sf(chi2, 1))


def bh_fdr(p_values) -> List[float]:
    """Benjamini-Hochberg step-up adjusted p-values, in input order."""
    p = np.asarray(p_values, dtype=float)
    m = len(p)
    if m == 0:
        return []
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    adj = np.minimum.accumulate(scaled[::-1])[::-1]
    out = np.empty(m)
    # guard against m * p / m rounding below p
    out[order] = np.minimum(np.maximum(adj, p[order]), 1.0)
    return out.tolist()


@dataclass
class GroupTestResult:
    feature: Union[int, str]
    name: str
    test: str
    statistic: float
    p_value: float
    adjusted_p: float
    total: Tuple[float, float]
    positive: Tuple[float, float]
    negative: Tuple[float, float]

    def to_json(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, float) and math.isnan(v):
                d[k] = None
        return d


def _ms(x) -> Tuple[float, float]:
    x = np.asarray(x, dtype=float)
    x = x[~np.isnan(x)]
    if len(x) == 0:
        return (NAN, NAN)
    return (float(x.mean()), float(x.std(ddof=1)) if len(x) > 1 else 0.0)


def group_summary_table(matrix: CohortMatrix, feature_subset: Sequence[Union[int, str]]
                        ) -> Tuple[List[GroupTestResult], str]:
    """Per-feature group comparison (positive vs negative class).

    Entries may be feature ids or the demographic names ``age``/``sex``.
    ``sex`` is summarised as percent women and tested with chi-square;
    everything else with the rank-sum test. BH adjustment runs over exactly
    the rows of this table.
    """
    y = matrix.labels
    pos, neg = y == 1, y == 0
    if not pos.any() or not neg.any():
        raise ValueError("both classes must be present")
    results = []
    for feat in feature_subset:
        if feat == "sex":
            women = matrix.demographics["sex"]
            table = [[np.sum(women[pos] == 1), np.sum(women[pos] == 0)],
                     [np.sum(women[neg] == 1), np.sum(women[neg] == 0)]]
            stat, p = chi_square_test(table)
            pct = lambda m: (100.0 * float(women[m].mean()), NAN)  # noqa: E731
            results.append(GroupTestResult("sex", "Sex (% women)", "chi-square", stat, p, NAN,
                                           pct(np.ones_like(pos)), pct(pos), pct(neg)))
            continue
        if isinstance(feat, str):
            col = matrix.demographics[feat]
            name = feat.capitalize()
        else:
            col = matrix.columns([feat])[:, 0]
            name = matrix.registry.name(int(feat))
        a, b = col[pos], col[neg]
        if np.all(np.isnan(a)) or np.all(np.isnan(b)):
            stat, p = NAN, NAN
        else:
            stat, p = rank_sum_test(a, b)
        results.append(GroupTestResult(feat if isinstance(feat, str) else int(feat), name,
                                       "rank-sum", stat, p, NAN, _ms(col), _ms(a), _ms(b)))
    ok = [i for i, r in enumerate(results) if not np.isnan(r.p_value)]
    adj = bh_fdr([results[i].p_value for i in ok])
    for i, q in zip(ok, adj):
        results[i].adjusted_p = max(q, results[i].p_value)
    return results, render_table(results, int(pos.sum()), int(neg.sum()))


def _fmt_ms(ms) -> str:
    m, s = ms
    if np.isnan(m):
        return "-"
    if np.isnan(s):
        return f"{m:.2f}"
    return f"{m:.2f} ± {s:.2f}"


def render_table(results: Sequence[GroupTestResult], n_pos: int, n_neg: int) -> str:
    head = ["Feature", f"Total (n={n_pos + n_neg})", f">= 2% (n={n_pos})",
            f"< 2% (n={n_neg})", "P-value", "Adjusted P-value"]
    rows = [head]
    for r in results:
        rows.append([r.name, _fmt_ms(r.total), _fmt_ms(r.positive), _fmt_ms(r.negative),
                     "-" if np.isnan(r.p_value) else f"{r.p_value:.3f}",
                     "-" if np.isnan(r.adjusted_p) else f"{r.adjusted_p:.3f}"])
    widths = [max(len(row[k]) for row in rows) for k in range(len(head))]
    lines = [" | ".join(c.ljust(w) for c, w in zip(row, widths)) for row in rows]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    return "\n".join(lines)
