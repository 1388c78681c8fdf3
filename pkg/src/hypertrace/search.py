"""Deterministic 1-D maximisation: dense grid, then golden-section polishing."""

from __future__ import annotations

import math

import numpy as np

_INVPHI = (math.sqrt(5) - 1) / 2


def golden_max(f, a: float, b: float, tol: float = 1e-12, max_iter: int = 200):
    """Maximise a scalar function on [a, b]; returns (x, f(x)).

    Assumes f is unimodal on the bracket, which holds for the small brackets
    around grid maxima that callers pass in.
    """
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    best = max(((c, fc), (d, fd), (a, f(a)), (b, f(b))), key=lambda t: t[1])
    return best


def grid_refine_max(values_fn, grid: np.ndarray, scalar_fn=None, candidates: int = 8,
                    tol: float = 1e-12):
    """Best point of ``values_fn`` over ``grid`` after polishing the top local maxima.

    ``values_fn`` maps an array of abscissae to objective values; the polish
    step never leaves [grid[0], grid[-1]] and never returns a worse point.
    """
    vals = np.asarray(values_fn(grid), dtype=float)
    i_best = int(np.argmax(vals))
    best_x, best_v = float(grid[i_best]), float(vals[i_best])
    if len(grid) < 3 or candidates <= 0:
        return best_x, best_v
    scalar_fn = scalar_fn or (lambda x: float(values_fn(np.array([x]))[0]))
    inner = (vals[1:-1] >= vals[:-2]) & (vals[1:-1] >= vals[2:])
    peaks = list(np.flatnonzero(inner) + 1)
    if vals[0] >= vals[1]:
        peaks.append(0)
    if vals[-1] >= vals[-2]:
        peaks.append(len(grid) - 1)
    peaks = sorted(peaks, key=lambda i: (-vals[i], i))[:candidates]
    for i in peaks:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        x, v = golden_max(scalar_fn, float(lo), float(hi), tol=tol)
        if v > best_v:
            best_x, best_v = x, v
    return best_x, best_v
