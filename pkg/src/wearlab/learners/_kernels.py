"""Compiled inner loops for the tree ensembles and the SVM solver.

Everything here operates on dense float64 arrays without missing values;
callers handle preprocessing. Randomness comes from an explicit xorshift
state so results do not depend on thread scheduling.
"""

import numpy as np
from numba import njit

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True, nogil=True)
def splitmix64(x):
    z = np.uint64(x) + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _next(state):
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    return x * np.uint64(0x2545F4914F6CDD1D)


@njit(cache=True, nogil=True)
def _randint(state, n):
    return np.int64(_next(state) % np.uint64(n))


# --------------------------------------------------------------------------
# gradient boosting (log-loss, depth-limited regression trees in heap layout)
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _logloss(raw, y, prob):
    """Mean log-loss of raw scores; also stores sigmoid(raw) in ``prob``."""
    s = 0.0
    for i in range(len(y)):
        z = raw[i]
        e = np.exp(-abs(z))
        if z >= 0:
            prob[i] = 1.0 / (1.0 + e)
        else:
            prob[i] = e / (1.0 + e)
        t = -z if y[i] == 1 else z
        s += max(t, 0.0) + np.log1p(e)
    return s / len(y)


@njit(cache=True, nogil=True)
def presort(X):
    """Per-feature row order and the sorted values, both shaped (d, n)."""
    n, d = X.shape
    order = np.empty((d, n), dtype=np.int64)
    vals = np.empty((d, n))
    for f in range(d):
        o = np.argsort(X[:, f], kind="mergesort")
        order[f] = o
        for k in range(n):
            vals[f, k] = X[o[k], f]
    return order, vals


@njit(cache=True, nogil=True)
def gb_fit_sorted(X, order, vals, y, n_trees, max_depth, lr, min_samples_leaf):
    """Boosted log-loss trees in heap layout; ``order``/``vals`` from ``presort``."""
    n, d = X.shape
    n_nodes = 2 ** (max_depth + 1) - 1
    feat = np.full((n_trees, n_nodes), -1, dtype=np.int64)
    thr = np.zeros((n_trees, n_nodes))
    val = np.zeros((n_trees, n_nodes))
    leaf = np.zeros((n_trees, n_nodes), dtype=np.bool_)
    losses = np.zeros(n_trees + 1)
    inv = np.zeros(n + 1)
    for m in range(1, n + 1):
        inv[m] = 1.0 / m

    pos = 0.0
    for i in range(n):
        pos += y[i]
    prior = min(max(pos / n, 1e-12), 1 - 1e-12)
    init = np.log(prior / (1 - prior))
    raw = np.full(n, init)
    prob = np.zeros(n)
    trial_prob = np.zeros(n)
    losses[0] = _logloss(raw, y, prob)

    node_of = np.zeros(n, dtype=np.int64)
    r = np.zeros(n)
    h = np.zeros(n)
    trial = np.zeros(n)
    G = np.zeros(n_nodes)
    H = np.zeros(n_nodes)
    cnt = np.zeros(n_nodes, dtype=np.int64)
    GL = np.zeros(n_nodes)
    nL = np.zeros(n_nodes, dtype=np.int64)
    last = np.zeros(n_nodes)
    best = np.zeros(n_nodes)
    bf = np.zeros(n_nodes, dtype=np.int64)
    bt = np.zeros(n_nodes)
    scan = np.zeros(n_nodes, dtype=np.bool_)
    active = np.zeros(n_nodes, dtype=np.bool_)

    for t in range(n_trees):
        for i in range(n):
            p = prob[i]
            r[i] = y[i] - p
            h[i] = p * (1.0 - p)
            node_of[i] = 0
        active[:] = False
        active[0] = True
        for level in range(max_depth):
            lo = 2 ** level - 1
            hi = 2 ** (level + 1) - 1
            for a in range(lo, hi):
                G[a] = 0.0
                cnt[a] = 0
            for i in range(n):
                a = node_of[i]
                if a >= lo:
                    G[a] += r[i]
                    cnt[a] += 1
            any_active = False
            for a in range(lo, hi):
                best[a] = 1e-12
                bf[a] = -1
                scan[a] = active[a] and cnt[a] >= 2 * min_samples_leaf
                if scan[a]:
                    any_active = True
            if not any_active:
                break
            for f in range(d):
                for a in range(lo, hi):
                    GL[a] = 0.0
                    nL[a] = 0
                for k in range(n):
                    i = order[f, k]
                    a = node_of[i]
                    if not scan[a]:
                        continue
                    x = vals[f, k]
                    nl = nL[a]
                    if nl >= min_samples_leaf and x > last[a]:
                        nr = cnt[a] - nl
                        if nr >= min_samples_leaf:
                            gl = GL[a]
                            gr = G[a] - gl
                            gain = gl * gl * inv[nl] + gr * gr * inv[nr]
                            if gain > best[a]:
                                best[a] = gain
                                bf[a] = f
                                # threshold at the left value keeps splits
                                # invariant to monotone feature transforms
                                bt[a] = last[a]
                    GL[a] += r[i]
                    nL[a] = nl + 1
                    last[a] = x
            for a in range(lo, hi):
                # gain above is relative to zero; subtract the parent term
                if bf[a] >= 0 and best[a] - G[a] * G[a] * inv[cnt[a]] <= 1e-12:
                    bf[a] = -1
                scan[a] = False
                if not active[a]:
                    continue
                if bf[a] >= 0:
                    feat[t, a] = bf[a]
                    thr[t, a] = bt[a]
                    active[2 * a + 1] = True
                    active[2 * a + 2] = True
                else:
                    leaf[t, a] = True
                active[a] = False
            for i in range(n):
                a = node_of[i]
                if a >= lo and feat[t, a] >= 0:
                    if X[i, feat[t, a]] <= thr[t, a]:
                        node_of[i] = 2 * a + 1
                    else:
                        node_of[i] = 2 * a + 2
        for a in range(n_nodes):
            if active[a]:
                leaf[t, a] = True
        # Newton leaf values
        for a in range(n_nodes):
            G[a] = 0.0
            H[a] = 0.0
        for i in range(n):
            G[node_of[i]] += r[i]
            H[node_of[i]] += h[i]
        for a in range(n_nodes):
            if leaf[t, a]:
                val[t, a] = G[a] / H[a] if H[a] > 1e-300 else 0.0
        # shrink the step until the training loss does not increase
        step = lr
        prev = losses[t]
        cur = prev
        accepted = False
        for _ in range(40):
            for i in range(n):
                trial[i] = raw[i] + val[t, node_of[i]] * step
            cur = _logloss(trial, y, trial_prob)
            if cur <= prev:
                accepted = True
                break
            step *= 0.5
        if accepted:
            for a in range(n_nodes):
                val[t, a] *= step
            for i in range(n):
                raw[i] = trial[i]
                prob[i] = trial_prob[i]
            losses[t + 1] = cur
        else:
            for a in range(n_nodes):
                val[t, a] = 0.0
            losses[t + 1] = prev
    return init, feat, thr, val, leaf, losses


@njit(cache=True, nogil=True)
def gb_fit(X, y, n_trees, max_depth, lr, min_samples_leaf):
    order, vals = presort(X)
    return gb_fit_sorted(X, order, vals, y, n_trees, max_depth, lr, min_samples_leaf)


@njit(cache=True, nogil=True)
def gb_raw(X, init, feat, thr, val, leaf):
    n = X.shape[0]
    out = np.full(n, init)
    for t in range(feat.shape[0]):
        for i in range(n):
            a = 0
            while not leaf[t, a]:
                if X[i, feat[t, a]] <= thr[t, a]:
                    a = 2 * a + 1
                else:
                    a = 2 * a + 2
            out[i] += val[t, a]
    return out


# --------------------------------------------------------------------------
# random forest (Gini, bootstrap, sqrt-d candidate features per split)
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _gini(pos, n):
    if n == 0:
        return 0.0
    p = pos / n
    return 2.0 * p * (1.0 - p)


@njit(cache=True, nogil=True)
def _build_tree(X, y, idx, mtry, max_depth, state, feat, thr, left, right, value, imp):
    """Grow one tree over ``idx``; returns the number of nodes written."""
    n = len(idx)
    d = X.shape[1]
    stack_node = np.empty(2 * n + 2, dtype=np.int64)
    stack_lo = np.empty(2 * n + 2, dtype=np.int64)
    stack_hi = np.empty(2 * n + 2, dtype=np.int64)
    stack_depth = np.empty(2 * n + 2, dtype=np.int64)
    perm = np.arange(d)
    vals = np.empty(n)
    labs = np.empty(n)
    sp = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    stack_depth[0] = 0
    sp = 1
    n_nodes = 1
    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        lo = stack_lo[sp]
        hi = stack_hi[sp]
        depth = stack_depth[sp]
        m = hi - lo
        pos = 0.0
        for k in range(lo, hi):
            pos += y[idx[k]]
        value[node] = pos / m
        feat[node] = -1
        if pos == 0 or pos == m or m < 2 or (max_depth >= 0 and depth >= max_depth):
            continue
        parent = _gini(pos, m)
        best_gain = 1e-12
        best_f = -1
        best_t = 0.0
        # Fisher-Yates over features; stop after mtry non-constant ones
        for k in range(d):
            perm[k] = k
        visited = 0
        for k in range(d):
            if visited >= mtry:
                break
            j = k + _randint(state, d - k)
            tmp = perm[k]
            perm[k] = perm[j]
            perm[j] = tmp
            f = perm[k]
            for q in range(m):
                vals[q] = X[idx[lo + q], f]
            o = np.argsort(vals[:m], kind="mergesort")
            if vals[o[0]] == vals[o[m - 1]]:
                continue
            visited += 1
            for q in range(m):
                labs[q] = y[idx[lo + o[q]]]
            lp = 0.0
            for q in range(m - 1):
                lp += labs[q]
                a = vals[o[q]]
                b = vals[o[q + 1]]
                if b <= a:
                    continue
                nl = q + 1
                nr = m - nl
                gain = parent - (nl * _gini(lp, nl) + nr * _gini(pos - lp, nr)) / m
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_t = a
        if best_f < 0:
            continue
        imp[best_f] += m * best_gain
        # partition idx[lo:hi] by the chosen split
        i = lo
        j = hi - 1
        while i <= j:
            if X[idx[i], best_f] <= best_t:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                j -= 1
        feat[node] = best_f
        thr[node] = best_t
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack_node[sp] = n_nodes
        stack_lo[sp] = lo
        stack_hi[sp] = i
        stack_depth[sp] = depth + 1
        sp += 1
        stack_node[sp] = n_nodes + 1
        stack_lo[sp] = i
        stack_hi[sp] = hi
        stack_depth[sp] = depth + 1
        sp += 1
        n_nodes += 2
    return n_nodes


@njit(cache=True, nogil=True)
def rf_fit(X, y, n_trees, mtry, max_depth, bootstrap, seed):
    n, d = X.shape
    cap = 2 * n + 1
    feat = np.full((n_trees, cap), -1, dtype=np.int64)
    thr = np.zeros((n_trees, cap))
    left = np.zeros((n_trees, cap), dtype=np.int64)
    right = np.zeros((n_trees, cap), dtype=np.int64)
    value = np.zeros((n_trees, cap))
    sizes = np.zeros(n_trees, dtype=np.int64)
    imp = np.zeros(d)
    state = np.zeros(1, dtype=np.uint64)
    idx = np.empty(n, dtype=np.int64)
    for t in range(n_trees):
        state[0] = splitmix64(splitmix64(np.uint64(seed)) ^ np.uint64(t + 1))
        if state[0] == 0:
            state[0] = np.uint64(1)
        if bootstrap:
            for k in range(n):
                idx[k] = _randint(state, n)
        else:
            for k in range(n):
                idx[k] = k
        tree_imp = np.zeros(d)
        sizes[t] = _build_tree(X, y, idx, mtry, max_depth, state, feat[t], thr[t],
                               left[t], right[t], value[t], tree_imp)
        total = tree_imp.sum()
        if total > 0:
            imp += tree_imp / total
    return feat, thr, left, right, value, sizes, imp / n_trees


@njit(cache=True, nogil=True)
def rf_proba(X, feat, thr, left, right, value):
    n = X.shape[0]
    T = feat.shape[0]
    out = np.zeros(n)
    for t in range(T):
        for i in range(n):
            a = 0
            while feat[t, a] >= 0:
                if X[i, feat[t, a]] <= thr[t, a]:
                    a = left[t, a]
                else:
                    a = right[t, a]
            out[i] += value[t, a]
    return out / T


# --------------------------------------------------------------------------
# SVM dual (SMO with maximal-violating-pair working set selection)
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def smo_solve(K, ys, C, tol, max_iter):
    """Solve the C-SVC dual for labels ``ys`` in {-1, +1}; returns (alpha, b)."""
    n = len(ys)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 0.5 a'Qa - e'a
    for it in range(max_iter):
        i = -1
        gmax = -np.inf
        for t in range(n):
            if (ys[t] == 1 and alpha[t] < C) or (ys[t] == -1 and alpha[t] > 0):
                v = -ys[t] * grad[t]
                if v > gmax:
                    gmax = v
                    i = t
        j = -1
        gmin = np.inf
        for t in range(n):
            if (ys[t] == 1 and alpha[t] > 0) or (ys[t] == -1 and alpha[t] < C):
                v = -ys[t] * grad[t]
                if v < gmin:
                    gmin = v
                    j = t
        if i < 0 or j < 0 or gmax - gmin < tol:
            break
        # analytic two-variable update along ys_i a_i + ys_j a_j = const
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 1e-12:
            quad = 1e-12
        delta = (gmax - gmin) / quad
        # step bounds along direction (ys_i, -ys_j)
        if ys[i] == 1:
            lim_i = C - alpha[i]
        else:
            lim_i = alpha[i]
        if ys[j] == 1:
            lim_j = alpha[j]
        else:
            lim_j = C - alpha[j]
        step = min(delta, lim_i, lim_j)
        ai_old = alpha[i]
        aj_old = alpha[j]
        alpha[i] += ys[i] * step
        alpha[j] -= ys[j] * step
        dai = alpha[i] - ai_old
        daj = alpha[j] - aj_old
        for t in range(n):
            grad[t] += ys[t] * (ys[i] * K[t, i] * dai + ys[j] * K[t, j] * daj)
    # bias from free vectors, else midpoint of the feasible interval
    s = 0.0
    nf = 0
    ub = np.inf
    lb = -np.inf
    for t in range(n):
        yg = ys[t] * grad[t]
        if 0 < alpha[t] < C:
            s += -yg
            nf += 1
        else:
            if (ys[t] == 1 and alpha[t] == 0) or (ys[t] == -1 and alpha[t] == C):
                ub = min(ub, -yg)
            else:
                lb = max(lb, -yg)
    if nf > 0:
        b = s / nf
    elif np.isfinite(ub) and np.isfinite(lb):
        b = 0.5 * (ub + lb)
    elif np.isfinite(ub):
        b = ub
    elif np.isfinite(lb):
        b = lb
    else:
        b = 0.0
    return alpha, b


# --------------------------------------------------------------------------
# fused per-fold scoring for feature-subset search
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def pair_auc(scores, y):
    """Mann-Whitney AUC of ``scores`` against 0/1 labels ``y``."""
    wins = 0
    n_pos = 0
    n_neg = 0
    for i in range(len(y)):
        if y[i] == 1:
            n_pos += 1
        else:
            n_neg += 1
    for i in range(len(y)):
        if y[i] != 1:
            continue
        for j in range(len(y)):
            if y[j] == 1:
                continue
            if scores[i] > scores[j]:
                wins += 2
            elif scores[i] == scores[j]:
                wins += 1
    return wins / (2.0 * n_pos * n_neg)


@njit(cache=True, nogil=True)
def gb_cv_auc(Ztr, order, vals, ytr, Zte, yte, tr_off, te_off, keep, cols, n_trees, max_depth,
              lr, min_samples_leaf):
    """Mean fold AUC; fold k occupies rows ``tr_off[k]:tr_off[k+1]`` of the
    stacked training arrays (columns of ``order``/``vals`` likewise) and
    ``te_off[k]:te_off[k+1]`` of the test arrays. Columns not kept in a fold
    are skipped; a fold with no usable column scores 0.5."""
    n_folds = len(tr_off) - 1
    total = 0.0
    use = np.empty(len(cols), dtype=np.int64)
    for k in range(n_folds):
        m = 0
        for j in range(len(cols)):
            if keep[k, cols[j]]:
                use[m] = cols[j]
                m += 1
        if m == 0:
            total += 0.5
            continue
        a, b = tr_off[k], tr_off[k + 1]
        c, d = te_off[k], te_off[k + 1]
        total += gb_fold_auc(Ztr[a:b], order[:, a:b], vals[:, a:b], ytr[a:b], Zte[c:d], yte[c:d],
                             use[:m], n_trees, max_depth, lr, min_samples_leaf)
    return total / n_folds


@njit(cache=True, nogil=True)
def gb_fold_auc(Xtr, order_all, vals_all, ytr, Xte, yte, cols, n_trees, max_depth, lr,
                min_samples_leaf):
    n = Xtr.shape[0]
    k = len(cols)
    X = np.empty((n, k))
    order = np.empty((k, n), dtype=np.int64)
    vals = np.empty((k, n))
    Xt = np.empty((Xte.shape[0], k))
    for j in range(k):
        c = cols[j]
        for i in range(n):
            X[i, j] = Xtr[i, c]
            order[j, i] = order_all[c, i]
            vals[j, i] = vals_all[c, i]
        for i in range(Xte.shape[0]):
            Xt[i, j] = Xte[i, c]
    init, feat, thr, val, leaf, _ = gb_fit_sorted(X, order, vals, ytr, n_trees, max_depth, lr,
                                                  min_samples_leaf)
    raw = gb_raw(Xt, init, feat, thr, val, leaf)
    p = 0.5 * (1.0 + np.tanh(0.5 * raw))
    return pair_auc(p, yte)
