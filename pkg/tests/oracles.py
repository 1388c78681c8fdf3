"""Slow, loop-based reference implementations used only by the tests.

Nothing here imports the vectorised code paths it checks.
"""

import itertools

import numpy as np


def brute_prob(X, W, j, q):
    """Sum over every retention pattern of its weight times the match indicator."""
    n, d = X.n, X.d
    p = 1 - q
    total = 0
    for kept in itertools.product(itertools.product((0, 1), repeat=n), repeat=d):
        weight = 1
        for ax in kept:
            m = sum(ax)
            weight *= p ** m * q ** (n - m)
        idx = [[i for i in range(n) if ax[i]] for ax in kept]
        sub = X.array[np.ix_(*idx)] if all(idx) else np.zeros([len(i) for i in idx], dtype=np.int8)
        index = list(j.rows) + [[c] for c in j.points]
        if any(max(ix) >= s for ix, s in zip(index, sub.shape)):
            continue          # the pattern reaches beyond the trace
        block = sub[np.ix_(*index)].reshape(W.entries.shape)
        if np.array_equal(block, W.entries):
            total += weight
    return total


def all_positions(n, d, l, r):
    tuples = list(itertools.combinations(range(n), l))
    for combo in itertools.product(*([tuples] * r + [range(n)] * (d - r))):
        yield combo[:r], combo[r:]


def shows(X, W, rows, points):
    index = [list(t) for t in rows] + [[c] for c in points]
    block = X.array[np.ix_(*index)].reshape(W.entries.shape)
    return bool(np.array_equal(block, W.entries))


def monomial(rows, points, zrows, zpoints):
    out = 1
    for k, z in zip(rows, zrows):
        prev = -1
        for ki, zi in zip(k, z):
            out = out * zi ** (ki - prev - 1)
            prev = ki
    for k, z in zip(points, zpoints):
        out = out * z ** k
    return out


def brute_genfun(X, W, Y, zrows, zpoints):
    total = 0
    for rows, points in all_positions(X.n, X.d, W.side, W.rank):
        c = int(shows(X, W, rows, points)) - (int(shows(Y, W, rows, points)) if Y is not None else 0)
        if c:
            total = total + c * monomial(rows, points, zrows, zpoints)
    return total


def brute_identity_sides(X, Y, W, zrows, zpoints, q):
    """(trace side, p^{rl+d-r} g(z)) from the loop oracles, w = (z - q) / p."""
    from hypertrace.hypermatrix import ScatterPosition

    p = 1 - q
    n, d, l, r = X.n, X.d, W.side, W.rank
    wrows = [[(v - q) / p for v in t] for t in zrows]
    wpoints = [(v - q) / p for v in zpoints]
    lhs = 0
    for rows, points in all_positions(n, d, l, r):
        j = ScatterPosition(rows, points)
        e = brute_prob(X, W, j, q) - brute_prob(Y, W, j, q)
        if e:
            lhs = lhs + e * monomial(rows, points, wrows, wpoints)
    rhs = p ** (r * l + d - r) * brute_genfun(X, W, Y, zrows, zpoints)
    return lhs, rhs


def brute_lambdas(arr):
    """Independent re-run of the margin-peeling procedure with explicit loops."""
    a = np.array(arr)
    out = []
    while a.ndim:
        i = a.ndim
        best = None
        for axis in range(i):
            n = a.shape[axis]
            nz = [k for k in range(n) if np.take(a, k, axis=axis).any()]
            for high, thick in ((False, nz[0]), (True, n - 1 - nz[-1])):
                if best is None or thick < best[0]:
                    best = (thick, axis, high)
        thick, axis, high = best
        idx = a.shape[axis] - 1 - thick if high else thick
        a = np.take(a, idx, axis=axis)
        out.append(thick)
    return tuple(reversed(out))
