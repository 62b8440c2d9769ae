"""Independent brute-force reference implementations used by the tests."""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np


def auroc_bruteforce(scores, positive, weights=None) -> Fraction:
    """Weighted Mann-Whitney over all (positive, negative) pairs, exact."""
    n = len(scores)
    w = [Fraction(1)] * n if weights is None else [Fraction(float(v)) for v in weights]
    num = den = Fraction(0)
    for i in range(n):
        if not positive[i]:
            continue
        for j in range(n):
            if positive[j]:
                continue
            pair = w[i] * w[j]
            den += pair
            if scores[i] > scores[j]:
                num += pair
            elif scores[i] == scores[j]:
                num += pair / 2
    return num / den


def hoeffding_bruteforce(xs, ys) -> Fraction:
    """Classical D from direct rank and bivariate counts in exact arithmetic.

    R_i, S_i are midranks; Q_i = 1 + #{x_j < x_i, y_j < y_i} with 1/2 for a
    tie in one coordinate and 1/4 for a tie in both (j != i).
    """
    x = [Fraction(float(v)) for v in xs]
    y = [Fraction(float(v)) for v in ys]
    n = len(x)
    half = Fraction(1, 2)

    def midrank(v, i):
        return 1 + sum(1 for j in range(n) if v[j] < v[i]) + half * sum(
            1 for j in range(n) if j != i and v[j] == v[i])

    R = [midrank(x, i) for i in range(n)]
    S = [midrank(y, i) for i in range(n)]
    Q = []
    for i in range(n):
        q = Fraction(1)
        for j in range(n):
            if j == i:
                continue
            cx = 1 if x[j] < x[i] else half if x[j] == x[i] else 0
            cy = 1 if y[j] < y[i] else half if y[j] == y[i] else 0
            q += cx * cy
        Q.append(q)
    d1 = sum((q - 1) * (q - 2) for q in Q)
    d2 = sum((r - 1) * (r - 2) * (s - 1) * (s - 2) for r, s in zip(R, S))
    d3 = sum((r - 2) * (s - 2) * (q - 1) for r, s, q in zip(R, S, Q))
    num = (n - 2) * (n - 3) * d1 + d2 - 2 * (n - 2) * d3
    return num / (n * (n - 1) * (n - 2) * (n - 3) * (n - 4))


def hoeffding_ustatistic(xs, ys) -> Fraction:
    """D as the U-statistic over ordered 5-tuples (continuous data only)."""
    def psi(a, b, c):
        return int(a >= b) - int(a >= c)

    n = len(xs)
    total = Fraction(0)
    count = 0
    for i, j, k, l, m in itertools.permutations(range(n), 5):
        total += (psi(xs[i], xs[j], xs[k]) * psi(xs[i], xs[l], xs[m])
                  * psi(ys[i], ys[j], ys[k]) * psi(ys[i], ys[l], ys[m]))
        count += 1
    return total / (4 * count)


def simplex_grid_min(A, b, reg, step=0.01):
    """Minimum of ||Aw - b||^2 + reg ||w|| over the lattice {w = k * step} on
    the simplex. Only six columns are supported (the acceptance shape)."""
    import numba

    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if A.shape[1] != 6:
        raise ValueError("grid oracle supports exactly 6 columns")

    @numba.njit(cache=True)
    def search(A, b, reg, m):
        rows = A.shape[0]
        h = 1.0 / m
        best = np.inf
        r0 = -b.copy()
        r1 = np.empty(rows); r2 = np.empty(rows); r3 = np.empty(rows); r4 = np.empty(rows)
        for i0 in range(m + 1):
            for k in range(rows):
                r1[k] = r0[k] + A[k, 0] * i0 * h
            for i1 in range(m + 1 - i0):
                for k in range(rows):
                    r2[k] = r1[k] + A[k, 1] * i1 * h
                for i2 in range(m + 1 - i0 - i1):
                    for k in range(rows):
                        r3[k] = r2[k] + A[k, 2] * i2 * h
                    for i3 in range(m + 1 - i0 - i1 - i2):
                        for k in range(rows):
                            r4[k] = r3[k] + A[k, 3] * i3 * h
                        s3 = i0 * i0 + i1 * i1 + i2 * i2 + i3 * i3
                        left = m - i0 - i1 - i2 - i3
                        for i4 in range(left + 1):
                            i5 = left - i4
                            val = 0.0
                            for k in range(rows):
                                e = r4[k] + (A[k, 4] * i4 + A[k, 5] * i5) * h
                                val += e * e
                            val += reg * h * np.sqrt(s3 + i4 * i4 + i5 * i5)
                            if val < best:
                                best = val
        return best

    return float(search(A, b, float(reg), int(round(1 / step))))


def gradient_check(params, arch, images, labels, lam, n_coords=100, h=1e-4, seed=0):
    """Max relative error between analytic and central-difference gradients
    over ``n_coords`` randomly sampled parameter coordinates."""
    from exch_pairs.synthnn.network import loss_and_grad

    rng = np.random.default_rng(seed)
    _, _, grads = loss_and_grad(params, arch, images, labels, lam)
    names = list(params)
    sizes = np.array([params[k].size for k in names])
    picks = rng.choice(sizes.sum(), size=n_coords, replace=False)
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    worst = 0.0
    for flat in picks:
        t = int(np.searchsorted(offsets, flat, side="right") - 1)
        name, idx = names[t], int(flat - offsets[t])
        p = params[name].reshape(-1)
        old = p[idx]
        p[idx] = old + h
        up = loss_and_grad(params, arch, images, labels, lam)[0]
        p[idx] = old - h
        down = loss_and_grad(params, arch, images, labels, lam)[0]
        p[idx] = old
        fd = (up - down) / (2 * h)
        an = grads[name].reshape(-1)[idx]
        worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-8))
    return worst
