"""W-generating functions, their contiguous versions, the trace identity and de-contiguisation.

For a pattern W of rank r and side l, the W-generating function of X sums
the monomial ``z_1^{odot k_1} ... z_r^{odot k_r} z_{r+1}^{k_{r+1}} ... z_d^{k_d}``
over every position k at which X shows W.  When a second hypermatrix Y is
given, the coefficient becomes the signed difference of the two indicators.

Evaluation works on floats (vectorised with numpy) and on exact numbers
(``Fraction``/``GaussianRational``), chosen by the type of the point.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .channel import ChannelParams, pattern_prob_table
from .exact import GaussianRational
from .hypermatrix import (ComplexPoint, Hypermatrix, Pattern, ShapeError, match_matrix,
                          position_count, positions)
from .search import grid_refine_max

DEFAULT_TERM_CAP = 10_000_000


def _exact_value(v) -> bool:
    return isinstance(v, (GaussianRational, Fraction))


def odot_power(z, k):
    """z_0^{k_0} * prod_i z_i^{k_i - k_{i-1} - 1} for a strictly increasing k."""
    if len(z) != len(k):
        raise ValueError("z and k must have the same length")
    if any(b <= a for a, b in zip(k, k[1:])):
        raise ValueError(f"{k} is not strictly increasing")
    out = z[0] ** k[0]
    for i in range(1, len(k)):
        out = out * z[i] ** (k[i] - k[i - 1] - 1)
    return out


@dataclass(frozen=True)
class GenfunSpec:
    X: Hypermatrix
    W: Pattern
    Y: Hypermatrix | None = None

    def __post_init__(self):
        if self.Y is not None and self.Y.dims != self.X.dims:
            raise ShapeError("X and Y must share dims")
        if self.W.rank > self.X.d or self.W.side > self.X.n:
            raise ShapeError("pattern does not fit")


@dataclass(frozen=True)
class ContiguousGenfunSpec:
    X: Hypermatrix
    W: Pattern
    Y: Hypermatrix | None = None

    def __post_init__(self):
        if self.W.rank != self.X.d:
            raise ShapeError("contiguous generating functions need rank(W) == dim(X)")
        if self.Y is not None and self.Y.dims != self.X.dims:
            raise ShapeError("X and Y must share dims")


def genfun_coeffs(X: Hypermatrix, W: Pattern, Y: Hypermatrix | None = None) -> np.ndarray:
    """Signed indicator coefficients over I(n^d, l^r) in lex order."""
    table = positions(X.n, X.d, W.side, W.rank)
    c = match_matrix(X.array.reshape(1, -1), W, table)[0].astype(np.int64)
    if Y is not None:
        c = c - match_matrix(Y.array.reshape(1, -1), W, table)[0]
    return c


def _check_point(z: ComplexPoint, n: int, d: int, W: Pattern):
    if z.rank != W.rank or len(z.points) != d - W.rank:
        raise ShapeError("point shape does not match the pattern")
    if W.rank and z.side != W.side:
        raise ShapeError("tuple length of the point must equal the pattern side")


def monomials(table, z: ComplexPoint) -> np.ndarray:
    """Float monomial of every position of ``table`` at ``z``."""
    gaps = table.gaps()
    out = np.ones(len(table), dtype=complex)
    if table.r:
        zr = np.array(z.rows, dtype=complex)
        out = out * np.prod(zr[None, :, :] ** gaps, axis=(1, 2))
    if table.d > table.r:
        zp = np.array(z.points, dtype=complex)
        out = out * np.prod(zp[None, :] ** table.points, axis=1)
    return out


def monomial_exact(table, i: int, z: ComplexPoint):
    out = 1
    for a in range(table.r):
        out = out * odot_power(z.rows[a], [int(x) for x in table.rows[i, a]])
    for b in range(table.d - table.r):
        out = out * z.points[b] ** int(table.points[i, b])
    return out


def _weighted_sum(table, coeffs, z: ComplexPoint):
    if any(_exact_value(v) for v in z.values()):
        total = 0
        for i in np.flatnonzero(coeffs):
            total = total + coeffs[i] * monomial_exact(table, int(i), z)
        return total
    nz = np.flatnonzero(coeffs)
    if not len(nz):
        return 0j
    sub = _Subtable(table, nz)
    return complex(np.sum(np.asarray(coeffs)[nz].astype(complex) * monomials(sub, z)))


class _Subtable:
    def __init__(self, table, idx):
        self.r, self.d, self.l = table.r, table.d, table.l
        self.rows = table.rows[idx]
        self.points = table.points[idx]
        self._gaps = table.gaps()[idx]

    def __len__(self):
        return len(self.rows)

    def gaps(self):
        return self._gaps


def eval_genfun(spec: GenfunSpec, z: ComplexPoint, cap: int = DEFAULT_TERM_CAP):
    X, W = spec.X, spec.W
    _check_point(z, X.n, X.d, W)
    if position_count(X.n, X.d, W.side, W.rank) > cap:
        raise MemoryError("generating function has too many terms for the cap")
    table = positions(X.n, X.d, W.side, W.rank)
    return _weighted_sum(table, genfun_coeffs(X, W, spec.Y), z)


def contiguous_coeffs(X: Hypermatrix, W: Pattern, Y: Hypermatrix | None = None) -> np.ndarray:
    """Signed block-match indicator at every corner of [n]^r; blocks past the edge give 0."""
    if W.rank != X.d:
        raise ShapeError("contiguous coefficients need rank(W) == dim(X)")
    n, r, l = X.n, X.d, W.side

    def hits(H):
        out = np.zeros((n,) * r, dtype=np.int8)
        if l > n:
            return out
        win = sliding_window_view(H.array, (l,) * r)
        eq = np.all(win == W.entries, axis=tuple(range(r, 2 * r)))
        out[tuple(slice(0, n - l + 1) for _ in range(r))] = eq
        return out

    c = hits(X)
    if Y is not None:
        c = c - hits(Y)
    return c


def eval_poly(coeffs: np.ndarray, z) -> complex:
    """sum_k c_k prod_a z_a^{k_a} over the nonzero coefficients of a dense array."""
    coeffs = np.asarray(coeffs)
    nz = np.argwhere(coeffs != 0)
    if any(_exact_value(v) for v in z):
        total = 0
        for k in nz:
            term = int(coeffs[tuple(k)])
            for a, e in enumerate(k):
                term = term * z[a] ** int(e)
            total = total + term
        return total
    if not len(nz):
        return 0j
    zz = np.array(z, dtype=complex)
    mons = np.prod(zz[None, :] ** nz, axis=1)
    return complex(np.sum(coeffs[tuple(nz.T)].astype(complex) * mons))


def horner_eval(coeffs: np.ndarray, z):
    """Nested Horner evaluation of a dense multivariate polynomial; an independent check."""
    coeffs = np.asarray(coeffs)
    if coeffs.ndim == 0:
        return coeffs.item()
    acc = 0
    for k in range(coeffs.shape[0] - 1, -1, -1):
        acc = acc * z[0] + horner_eval(coeffs[k], z[1:])
    return acc


def eval_contiguous(spec: ContiguousGenfunSpec, z):
    z = tuple(z)
    if len(z) != spec.X.d:
        raise ShapeError("one scalar per axis")
    return eval_poly(contiguous_coeffs(spec.X, spec.W, spec.Y), z)


# ---------------------------------------------------------------------------
# the trace identity


@dataclass
class IdentityCheck:
    lhs: object
    rhs: object
    residual: float


def identity_sides(X: Hypermatrix, Y: Hypermatrix | None, W: Pattern, z: ComplexPoint,
                   params: ChannelParams) -> IdentityCheck:
    """Trace side  sum_j E[1{X~_j = W} - 1{Y~_j = W}] w-monomial  and  p^{rl+d-r} g(z)."""
    n, d, r, l = X.n, X.d, W.rank, W.side
    _check_point(z, n, d, W)
    p, q = params.p, params.q
    table = positions(n, d, l, r)
    probs = pattern_prob_table(X, W, params)
    if Y is not None:
        probs = probs - pattern_prob_table(Y, W, params)
    exact = params.exact or any(_exact_value(v) for v in z.values())
    if p == 0:
        lhs = sum(probs) if exact else complex(np.sum(probs))
    else:
        w = z.map(lambda v: (v - q) / p)
        if exact:
            lhs = 0
            for i in range(len(table)):
                if probs[i] != 0:
                    lhs = lhs + probs[i] * monomial_exact(table, i, w)
        else:
            lhs = complex(np.sum(probs.astype(float) * monomials(table, w)))
    g = eval_genfun(GenfunSpec(X, W, Y), z)
    rhs = p ** (r * l + d - r) * g
    diff = lhs - rhs
    if exact and isinstance(diff, (GaussianRational, Fraction, int)):
        residual = 0.0 if diff == 0 else abs(complex(diff)) if not isinstance(diff, GaussianRational) \
            else abs(diff)
    else:
        residual = abs(complex(diff))
    return IdentityCheck(lhs, rhs, float(residual))


def verify_identity(X: Hypermatrix, Y: Hypermatrix | None, W: Pattern, z: ComplexPoint,
                    params: ChannelParams) -> float:
    return identity_sides(X, Y, W, z, params).residual


# ---------------------------------------------------------------------------
# removing contiguity one axis at a time


@dataclass
class AxisStep:
    axis: int
    start: float          # |g-bar(0)|, the value carried in from the previous step
    value: float          # max of |g-bar| found on the segment
    t: float
    floor_log: float | None = None


@dataclass
class DecontiguizeResult:
    point: ComplexPoint
    value: float
    h_value: object
    steps: list = field(default_factory=list)


def be_floor_log(start_abs: float, n: int, l: int, r: int, p: float, c1: float, c2: float) -> float:
    """log of |g0|^{c1/2p} e^{-c2/2p} C(n,l)^{r(1 - c1/2p)}, the per-step floor."""
    a = c1 / (2 * p)
    if start_abs <= 0:
        return -math.inf
    return a * math.log(start_abs) - c2 / (2 * p) + r * (1 - a) * math.log(math.comb(n, l))


def _family_rows(n: int, l: int, kinds):
    """Tuples per axis: contiguous k + [l] or any increasing l-tuple. Shape (P, r, l)."""
    contig = np.array([list(range(c, c + l)) for c in range(n - l + 1)], dtype=np.int64)
    scatter = np.array(list(itertools.combinations(range(n), l)), dtype=np.int64).reshape(-1, l)
    per_axis = [contig if k == "c" else scatter for k in kinds]
    grids = np.meshgrid(*[np.arange(len(t)) for t in per_axis], indexing="ij")
    return np.stack([per_axis[a][grids[a].ravel()] for a in range(len(kinds))], axis=1)


def _family_coeffs(Xr, Yr, W, rows):
    n, r, l = Xr.n, Xr.d, W.side
    strides = [n ** (r - 1 - a) for a in range(r)]
    cells = list(itertools.product(range(l), repeat=r))
    flat = np.zeros((len(rows), len(cells)), dtype=np.int64)
    for c, cell in enumerate(cells):
        flat[:, c] = sum(rows[:, a, cell[a]] * strides[a] for a in range(r))
    want = W.entries.reshape(-1)
    cx = np.all(Xr.array.reshape(-1)[flat] == want, axis=1).astype(np.int64)
    cy = np.all(Yr.array.reshape(-1)[flat] == want, axis=1).astype(np.int64)
    return cx - cy


def partial_sum_poly(Xr, Yr, W, z0, ties: dict, axis: int) -> dict:
    """Coefficients (by power of the tied variable) of the partial sum at ``axis``.

    Axes below ``axis`` are contiguous and carry z0 only; ``axis`` is scattered
    with all its later variables tied to one unknown t; axes above are
    scattered with their tuple (z0, t_a, ..., t_a) already fixed in ``ties``.
    """
    r, l = Xr.d, W.side
    kinds = ["c" if a < axis else "s" for a in range(r)]
    rows = _family_rows(Xr.n, l, kinds)
    coeffs = _family_coeffs(Xr, Yr, W, rows)
    poly: dict = {}
    for i in np.flatnonzero(coeffs):
        k = rows[i]
        term = int(coeffs[i])
        for a in range(r):
            if a < axis:
                term = term * z0[a] ** int(k[a, 0])
            elif a == axis:
                term = term * z0[a] ** int(k[a, 0])
            else:
                za = (z0[a],) + (ties[a],) * (l - 1)
                term = term * odot_power(za, [int(x) for x in k[a]])
        e = int(k[axis, -1] - k[axis, 0] - (l - 1))
        poly[e] = poly.get(e, 0) + term
    return poly


def _poly_value(poly: dict, t):
    total = 0
    for e, c in poly.items():
        total = total + c * t ** e
    return total


def decontiguize(Xr: Hypermatrix, Yr: Hypermatrix, W: Pattern, z0, p, grid: int = 4096,
                 rel_tol: float = 1e-6, c1: float | None = None, c2: float | None = None,
                 unit_tol: float = 1e-12) -> DecontiguizeResult:
    """Lift a nonzero value of the contiguous function h(z0) to the full W-generating function.

    Each axis, last first, gets its non-leading variables tied to one real t
    searched over [1 - 2p, 1]; the value carried into a step is asserted to
    equal the partial sum at t = 0.  Exact z0 (GaussianRational) makes every
    carried value and assertion exact.
    """
    r, l, n = Xr.d, W.side, Xr.n
    if W.rank != r or Yr.dims != Xr.dims:
        raise ShapeError("need r-dimensional X, Y and a rank-r pattern")
    z0 = tuple(z0)
    if len(z0) != r:
        raise ShapeError("one unit scalar per axis")
    for v in z0:
        mod = math.sqrt(v.norm2()) if isinstance(v, GaussianRational) else abs(v)
        if abs(mod - 1) > unit_tol:
            raise ValueError(f"|z0| = {mod} is not on the unit circle")
    exact = any(isinstance(v, GaussianRational) for v in z0)
    h = eval_contiguous(ContiguousGenfunSpec(Xr, W, Yr), z0)
    if h == 0:
        raise ValueError("h vanishes at z0; nothing to lift")
    p = float(p)
    lo, hi = 1 - 2 * p, 1.0
    ties: dict = {}
    carried = h
    steps = []
    for axis in range(r - 1, -1, -1) if l > 1 else ():
        poly = partial_sum_poly(Xr, Yr, W, z0, ties, axis)
        at_zero = poly.get(0, 0)
        if exact:
            assert at_zero == carried, "partial sum at t=0 differs from the carried value"
        else:
            assert abs(complex(at_zero) - complex(carried)) <= 1e-10 * max(1.0, abs(complex(carried))), \
                "partial sum at t=0 differs from the carried value"
        deg = max(poly)
        dense = np.zeros(deg + 1, dtype=complex)
        for e, c in poly.items():
            dense[e] += complex(c)

        def mods(ts, dense=dense):
            return np.abs(np.polynomial.polynomial.polyval(ts, dense))

        ts = np.linspace(lo, hi, grid)
        t_best, _ = grid_refine_max(mods, ts, candidates=4, tol=rel_tol)
        t_val = Fraction(t_best) if exact else t_best
        new = _poly_value(poly, t_val)
        start = abs(complex(carried)) if not isinstance(carried, GaussianRational) else abs(carried)
        value = abs(new) if isinstance(new, GaussianRational) else abs(complex(new))
        floor = be_floor_log(start, n, l, r, p, c1, c2) if c1 is not None else None
        steps.append(AxisStep(axis, start, value, float(t_best), floor))
        ties[axis] = t_val
        carried = new
    rows = tuple((z0[a],) + (ties.get(a, 0),) * (l - 1) for a in range(r))
    point = ComplexPoint(rows, ())
    final = abs(carried) if isinstance(carried, GaussianRational) else abs(complex(carried))
    return DecontiguizeResult(point, float(final), h, steps)


def last_axis_coeffs(X: Hypermatrix, Y: Hypermatrix | None, W: Pattern, prefix: ComplexPoint) -> np.ndarray:
    """Coefficients in the last variable of g, the earlier variables fixed by ``prefix``.

    ``prefix`` holds all r rows and the first d - r - 1 scalar points, so the
    last axis must be a scalar axis (r < d).
    """
    n, d, r = X.n, X.d, W.rank
    if r >= d:
        raise ShapeError("the last axis must carry a scalar variable")
    if len(prefix.points) != d - r - 1 or prefix.rank != r:
        raise ShapeError("prefix must fix every variable but the last")
    table = positions(n, d, W.side, r)
    c = genfun_coeffs(X, W, Y)
    nz = np.flatnonzero(c)
    out = np.zeros(n, dtype=complex)
    if len(nz):
        sub = _Subtable(table, nz)
        full = ComplexPoint(prefix.rows, tuple(prefix.points) + (1.0,))
        np.add.at(out, table.points[nz, -1], c[nz] * monomials(sub, full))
    return out


def abs_monomial_sum(n: int, d: int, l: int, r: int, w: ComplexPoint) -> float:
    """sum over all positions j of |w-monomial at j|; the trace-side mass at w."""
    table = positions(n, d, l, r)
    return float(np.sum(np.abs(monomials(table, w))))
