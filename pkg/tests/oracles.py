"""Brute-force reference implementations used only by the tests.

They follow textbook definitions directly (pure Python, exact fractions
where practical) and share no code with the package.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction


def pearson_oracle(x, y):
    pairs = [(a, b) for a, b in zip(x, y) if not (math.isnan(a) or math.isnan(b))]
    n = len(pairs)
    if n < 2:
        return float("nan")
    fx = [Fraction(a) for a, _ in pairs]
    fy = [Fraction(b) for _, b in pairs]
    mx = sum(fx) / n
    my = sum(fy) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(fx, fy))
    sxx = sum((a - mx) ** 2 for a in fx)
    syy = sum((b - my) ** 2 for b in fy)
    if sxx == 0 or syy == 0:
        return float("nan")
    return float(sxy) / math.sqrt(float(sxx) * float(syy))


def u_oracle(a, b):
    """Count pairs with a_i > b_j, ties as one half."""
    u = Fraction(0)
    for x in a:
        for y in b:
            if x > y:
                u += 1
            elif x == y:
                u += Fraction(1, 2)
    return u


def rank_sum_exact_oracle(a, b):
    """Two-sided permutation p-value of U over all relabellings of the pooled sample."""
    pooled = list(a) + list(b)
    n, na = len(pooled), len(a)
    u_obs = u_oracle(a, b)
    centre = Fraction(na * (n - na), 2)
    dev = abs(u_obs - centre)
    extreme = total = 0
    for idx in itertools.combinations(range(n), na):
        chosen = set(idx)
        ga = [pooled[i] for i in idx]
        gb = [pooled[i] for i in range(n) if i not in chosen]
        if abs(u_oracle(ga, gb) - centre) >= dev:
            extreme += 1
        total += 1
    return float(u_obs), Fraction(extreme, total)


def chi_square_oracle(table):
    """Sum of (observed - expected)^2 / expected over the four cells."""
    (a, b), (c, d) = table
    n = a + b + c + d
    rows = (a + b, c + d)
    cols = (a + c, b + d)
    obs = ((a, b), (c, d))
    stat = Fraction(0)
    for i in range(2):
        for j in range(2):
            e = Fraction(rows[i] * cols[j], n)
            stat += (obs[i][j] - e) ** 2 / e
    return float(stat)


def chi2_sf_df1(x):
    """Survival function of chi-square with one degree of freedom."""
    return math.erfc(math.sqrt(x / 2.0))


def bh_oracle(p):
    """Adjusted p_i = min over ranks k >= rank(i) of m * p_(k) / k, capped at 1."""
    m = len(p)
    order = sorted(range(m), key=lambda i: (p[i], i))
    rank = {i: r + 1 for r, i in enumerate(order)}
    out = []
    for i in range(m):
        best = min(m * p[order[k - 1]] / k for k in range(rank[i], m + 1))
        out.append(min(best, 1.0))
    return out


def auc_oracle(pos, neg):
    wins = Fraction(0)
    for s in pos:
        for t in neg:
            wins += 1 if s > t else (Fraction(1, 2) if s == t else 0)
    return wins / (len(pos) * len(neg))


def trapezoid_oracle(pos, neg):
    """ROC area by sweeping every threshold, independent of the package ROC."""
    thresholds = sorted(set(pos) | set(neg), reverse=True)
    pts = [(Fraction(0), Fraction(0))]
    for t in thresholds:
        tpr = Fraction(sum(s >= t for s in pos), len(pos))
        fpr = Fraction(sum(s >= t for s in neg), len(neg))
        pts.append((fpr, tpr))
    area = Fraction(0)
    for (f0, t0), (f1, t1) in zip(pts, pts[1:]):
        area += (f1 - f0) * (t0 + t1) / 2
    return area


def exhaustive_best_mask(d, fitness):
    """Argmax set of ``fitness`` over all non-empty masks of ``d`` bits."""
    best, arg = -math.inf, []
    for bits in range(1, 2 ** d):
        mask = tuple(bool(bits >> j & 1) for j in range(d))
        f = fitness(mask)
        if f > best + 1e-15:
            best, arg = f, [mask]
        elif abs(f - best) <= 1e-15:
            arg.append(mask)
    return best, arg
