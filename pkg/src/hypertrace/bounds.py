"""Lower-bound searches for polynomials on short arcs of the unit circle.

All searches are deterministic: a uniform grid in the angle, then
golden-section polishing of the best local maxima.  Floors of the form
exp(-C * scale) use constants read from the calibration file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .config import calib_constant, load_config
from .genfun import eval_poly
from .hypermatrix import sparsity_index, support_split
from .search import golden_max, grid_refine_max

_CHUNK = 1 << 22


@dataclass(frozen=True)
class ArcSpec:
    """The arc rho * {e^{i theta}: |theta| <= pi / L}, searched with density * L intervals."""

    L: float
    rho: float = 1.0
    density: int = 256

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho = {self.rho} outside (0, 1]")
        if self.density < 64:
            raise ValueError("density must be at least 64")

    def fractions(self) -> np.ndarray:
        """Grid of theta / pi, symmetric, endpoints pulled inside the closed arc."""
        count = int(math.ceil(self.density * self.L))
        t = np.linspace(-1.0 / self.L, 1.0 / self.L, count + 1)
        t[0], t[-1] = _inside(t[0], self.L), _inside(t[-1], self.L)
        return t


def _inside(t: float, L) -> float:
    """Largest float of magnitude <= |t| whose exact value lies in [-1/L, 1/L]."""
    bound = Fraction(1) / Fraction(L)
    while abs(Fraction(t)) > bound:
        t = float(np.nextafter(t, 0.0))
    return t


def in_arc(theta_over_pi, L) -> bool:
    """Exact test that e^{i pi t} lies in gamma(L), for a float or Fraction t."""
    return abs(Fraction(theta_over_pi)) <= Fraction(1) / Fraction(L)


@dataclass(frozen=True)
class LatticeDirection:
    b: tuple

    def __post_init__(self):
        if math.gcd(*(abs(x) for x in self.b)) != 1:
            raise ValueError(f"{self.b} is not primitive")

    @property
    def norm(self) -> float:
        return math.sqrt(sum(x * x for x in self.b))


@dataclass
class BoundWitness:
    point: tuple
    value: float
    budget: float | None = None       # the floor exp(-C * scale) compared against
    calib: float | None = None        # the constant C behind the floor
    info: dict = field(default_factory=dict)

    @property
    def log_value(self) -> float:
        return math.log(self.value) if self.value > 0 else -math.inf

    def meets_floor(self) -> bool:
        return self.budget is None or self.value >= self.budget

    def to_json(self) -> dict:
        def enc(z):
            z = complex(z)
            return [z.real, z.imag]
        pt = self.point if isinstance(self.point, tuple) else (self.point,)
        return {"point": [enc(z) for z in pt], "value": self.value, "floor": self.budget,
                "C": self.calib, **{k: v for k, v in self.info.items() if _jsonable(v)}}


def _jsonable(v) -> bool:
    return isinstance(v, (int, float, str, bool, list, tuple, type(None)))


# ---------------------------------------------------------------------------
# w-norm


def arc_radius(p: float, L: float) -> float:
    return 1 - 7 / (p * L * L)


def lift_w(z, p, q=None, L=None, tol: float = 1e-12):
    """w = (z - q) / p with its size ell(w) = max(|w|, 1).

    When L is given and z lies on rho*gamma(L) with L >= 4/p, |w| <= 1 is asserted.
    """
    if p == 0:
        raise ZeroDivisionError("p = 0 has no inverse substitution")
    q = 1 - p if q is None else q
    w = (z - q) / p
    ell = max(abs(w), 1.0)
    if L is not None and L >= 4 / p:
        rho = arc_radius(p, L)
        zc = complex(z)
        on_arc = abs(abs(zc) - rho) <= 1e-12 and abs(np.angle(zc)) <= math.pi / L + 1e-15
        if on_arc:
            assert abs(w) <= 1 + tol, f"|w| = {abs(w)} > 1 at z = {z}"
    return w, ell


# ---------------------------------------------------------------------------
# univariate


def _sparse_terms(coeffs):
    coeffs = np.asarray(coeffs)
    exps = np.flatnonzero(coeffs)
    return exps, coeffs[exps].astype(complex)


def eval_on_circle(exps, cs, rho: float, thetas) -> np.ndarray:
    """sum_k c_k rho^k e^{i k theta} at each theta, chunked."""
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    scale = cs * (rho ** exps.astype(float))
    out = np.empty(len(thetas), dtype=complex)
    step = max(1, _CHUNK // max(len(exps), 1))
    for s in range(0, len(thetas), step):
        ph = np.exp(1j * np.outer(thetas[s:s + step], exps))
        out[s:s + step] = ph @ scale
    return out


def max_modulus_univariate(coeffs, m0: int = 0, L: float = 1, rho: float = 1.0,
                           density: int | None = None, candidates: int | None = None,
                           tol: float | None = None) -> BoundWitness:
    """Search |z^{m0} f(z)| over rho*gamma(L), f given by its dense coefficients."""
    cfg = load_config()
    density = density or cfg["arc"]["density"]
    candidates = cfg["arc"]["refine_candidates"] if candidates is None else candidates
    tol = tol or cfg["arc"]["refine_tol"]
    coeffs = np.asarray(coeffs)
    if len(coeffs) - 1 > cfg["caps"]["degree"]:
        raise MemoryError("degree exceeds the cap")
    exps, cs = _sparse_terms(coeffs)
    if not len(exps):
        raise ValueError("zero polynomial")
    arc = ArcSpec(L, rho, density)
    ts = arc.fractions()
    lo, hi = ts[0], ts[-1]

    def mods(t):
        return np.abs(eval_on_circle(exps, cs, rho, math.pi * np.asarray(t)))

    def scalar(t):
        return float(mods(np.array([min(max(t, lo), hi)]))[0])

    t_best, _ = grid_refine_max(mods, ts, scalar_fn=scalar, candidates=candidates, tol=tol)
    t_best = _inside(min(max(t_best, lo), hi), L)
    theta = math.pi * t_best
    z = rho * complex(math.cos(theta), math.sin(theta))
    value = float(abs(eval_on_circle(exps, cs, rho, [theta])[0])) * rho ** m0
    return BoundWitness((z,), value, info={"t": t_best, "L": L, "rho": rho, "m0": m0,
                                           "density": density})


def littlewood_arc(m: int, p: float) -> tuple[int, float]:
    """(L, rho) for a degree-m polynomial: L = max(ceil(m^{1/3}), ceil(4/p))."""
    L = max(math.ceil(round(m ** (1 / 3), 9)), math.ceil(4 / p - 1e-12), 1)
    return L, arc_radius(p, L)


def littlewood_bound(coeffs, p: float, C: float | None = None, density=None) -> BoundWitness:
    """Arc search with the floor exp(-C m^{1/3}), for |c_0| = 1 and |c_i| <= 1."""
    m = len(coeffs) - 1
    L, rho = littlewood_arc(max(m, 1), p)
    bw = max_modulus_univariate(coeffs, 0, L, rho, density)
    C = calib_constant("littlewood") if C is None else C
    bw.calib = C
    bw.budget = math.exp(-C * max(m, 1) ** (1 / 3))
    return bw


# ---------------------------------------------------------------------------
# lattice directions


def primitive_vectors(R: float, d: int, cap: int | None = None) -> list:
    """Primitive integer d-vectors of norm <= R, first nonzero entry positive, lex order."""
    if R < 1 or d < 1:
        raise ValueError("need R >= 1 and d >= 1")
    cap = cap or load_config()["caps"]["primitive_vectors"]
    return [LatticeDirection(b) for b in _primitive_tuples(float(R), d, int(cap))]


@lru_cache(maxsize=32)
def _primitive_tuples(R: float, d: int, cap: int) -> tuple:
    R2 = R * R + 1e-9
    rb = int(math.floor(R + 1e-9))
    out = []

    def rec(prefix, norm2, leading):
        if len(prefix) == d:
            if leading and math.gcd(*prefix) == 1:
                out.append(tuple(prefix))
                if len(out) > cap:
                    raise MemoryError(f"more than {cap} primitive vectors")
            return
        lo = 0 if not leading else -rb
        for x in range(lo, rb + 1):
            n2 = norm2 + x * x
            if n2 > R2:
                continue
            rec(prefix + [x], n2, leading or x > 0)

    rec([], 0, False)
    return tuple(out)


def _search_order(R: float, d: int) -> np.ndarray:
    vecs = np.array([v.b for v in primitive_vectors(R, d)], dtype=np.int64)
    norms = (vecs ** 2).sum(axis=1)
    order = np.lexsort(tuple((-vecs[:, c]) for c in range(d - 1, -1, -1)) + (norms,))
    vecs = vecs[order]
    signed = np.empty((2 * len(vecs), d), dtype=np.int64)
    signed[0::2] = vecs
    signed[1::2] = -vecs
    return signed


class FacetError(RuntimeError):
    pass


@dataclass(frozen=True)
class Facet:
    b: tuple
    m0: int
    contacts: tuple
    tried: int


def tangent_facet(H1, H2, R: float) -> Facet:
    """First signed direction (by norm) whose minimising hyperplane meets each sign class at most once."""
    H1, H2 = [tuple(k) for k in H1], [tuple(k) for k in H2]
    pts = np.array(H1 + H2, dtype=np.int64)
    if not len(pts):
        raise ValueError("empty support")
    sign = np.array([1] * len(H1) + [-1] * len(H2))
    d = pts.shape[1]
    B = _search_order(R, d)
    step = max(1, _CHUNK // len(pts))
    for s in range(0, len(B), step):
        vals = B[s:s + step] @ pts.T
        m0 = vals.min(axis=1)
        on = vals == m0[:, None]
        n1 = (on & (sign > 0)).sum(axis=1)
        n2 = (on & (sign < 0)).sum(axis=1)
        good = np.flatnonzero((n1 <= 1) & (n2 <= 1))
        if len(good):
            i = int(good[0])
            contacts = tuple(tuple(int(c) for c in pts[j]) for j in np.flatnonzero(on[i]))
            return Facet(tuple(int(x) for x in B[s + i]), int(m0[i]), contacts, s + i + 1)
    raise FacetError(f"no direction of norm <= {R} isolates the support; H1={H1}, H2={H2}")


# ---------------------------------------------------------------------------
# substitution z_i = u^{b_i} (times v on one axis)


@dataclass
class Substitution:
    offset: int          # exponent of coeffs[0]
    coeffs: np.ndarray   # complex, by exponent - offset
    m0: int              # smallest exponent over the support
    C_v: complex         # accumulated coefficient at m0


def substitute(coeffs, b, v=None, v_axis: int | None = None) -> Substitution:
    c = np.asarray(coeffs)
    ks = np.argwhere(c != 0)
    if not len(ks):
        raise ValueError("zero polynomial")
    b = np.asarray(b, dtype=np.int64)
    e = ks @ b
    w = c[tuple(ks.T)].astype(complex)
    if v is not None:
        w = w * np.power(complex(v), ks[:, v_axis])
    m0 = int(e.min())
    out = np.zeros(int(e.max()) - m0 + 1, dtype=complex)
    np.add.at(out, e - m0, w)
    return Substitution(m0, out, m0, complex(out[0]))


# ---------------------------------------------------------------------------
# multivariate pipelines


def _ceil(x: float) -> int:
    return int(math.ceil(x - 1e-9))


def _finish(c, facet, v_frac, v_axis, L, Lp, density, C, floor_scale, extra):
    """Shared tail: substitute, search the u-arc, map back, assert arc membership."""
    v = None if v_frac is None else complex(math.cos(math.pi * v_frac), math.sin(math.pi * v_frac))
    sub = substitute(c, facet.b, v, v_axis)
    bw = max_modulus_univariate(sub.coeffs, 0, Lp, 1.0, density)
    t_u = bw.info["t"]
    d = c.ndim
    z, fracs = [], []
    for i in range(d):
        f = Fraction(facet.b[i]) * Fraction(t_u)
        if v_frac is not None and i == v_axis:
            f += Fraction(v_frac)
        if not in_arc(f, L):
            raise AssertionError(f"z_{i} leaves gamma({L}): theta/pi = {float(f)}")
        fracs.append(f)
        th = math.pi * float(f)
        z.append(complex(math.cos(th), math.sin(th)))
    value = abs(eval_poly(c, tuple(z)))
    info = {"b": list(facet.b), "m0": facet.m0, "contacts": [list(k) for k in facet.contacts],
            "L": L, "L_u": Lp, "t_u": t_u, "C_v_abs": abs(sub.C_v), "u_value": bw.value,
            "v_axis": v_axis, **extra}
    return BoundWitness(tuple(z), value, math.exp(-C * floor_scale), C, info)


def multivariate_bound(coeffs, mu: float, L: float, Delta: float = 1.0, C: float | None = None,
                       density: int | None = None, check_sparse: bool = True) -> BoundWitness:
    """Lift a large value of a sparse signed polynomial from a univariate substitution.

    ``coeffs`` is a {0, +-1} array over [n]^d.  The returned point has every
    coordinate in gamma(L), checked exactly on theta / pi.
    """
    c = np.asarray(coeffs)
    n, d = c.shape[0], c.ndim
    if not c.any():
        raise ValueError("zero polynomial")
    if not 1 <= L <= n ** Delta:
        raise ValueError("need 1 <= L <= n^Delta")
    if check_sparse and sparsity_index(c) < n ** mu - 1e-9:
        raise ValueError(f"coefficients are not n^mu-sparse (index {sparsity_index(c)})")
    R = _ceil(d * n ** (1 - mu))
    H1, H2 = support_split(_Signed(c))
    facet = tangent_facet(sorted(H1), sorted(H2), R)
    if len(facet.contacts) == 2:
        a, b = facet.contacts
        v_axis = next(i for i in range(d) if a[i] != b[i])
    else:
        v_axis = 0
    if float(Delta).is_integer():
        v_frac = Fraction(1, 2 * n ** int(Delta))
    else:
        v_frac = 1 / (2 * Fraction(n ** Delta))
    Lp = 2 * L * R
    C = calib_constant("multivariate") if C is None else C
    scale = Delta * L * n ** (1 - mu) * math.log(n)
    return _finish(c, facet, v_frac, v_axis, L, Lp, density, C, scale,
                   {"R": R, "mu": mu, "Delta": Delta, "tried": facet.tried})


def corollary_bound(coeffs, L: float, C: float | None = None, density: int | None = None) -> BoundWitness:
    """Dense case: no sparsity, R = d * n, single contact, no rotation v."""
    c = np.asarray(coeffs)
    n, d = c.shape[0], c.ndim
    if not c.any():
        raise ValueError("zero polynomial")
    R = d * n
    H1, H2 = support_split(_Signed(c))
    facet = _single_contact_facet(sorted(H1) + sorted(H2), R)
    Lp = 2 * L * R
    C = calib_constant("corollary") if C is None else C
    return _finish(c, facet, None, None, L, Lp, density, C, L * n * math.log(max(n, 2)),
                   {"R": R, "tried": facet.tried})


def _single_contact_facet(H, R) -> Facet:
    f = tangent_facet(H, [], R)
    if len(f.contacts) != 1:
        raise FacetError("dense path needs a single contact")
    return f


class _Signed:
    def __init__(self, arr):
        self.array = np.asarray(arr)


# ---------------------------------------------------------------------------
# two free axes and the disk


def two_axis_arc_search(g, L: float, density: int | None = None, refine_rounds: int = 40):
    """Maximise |g(z2, z3)| over gamma(L) x gamma(L); g is vectorised in both arguments."""
    cfg = load_config()
    density = density or cfg["arc"]["density"]
    ts = np.linspace(-1.0 / L, 1.0 / L, density + 1)
    ts[0], ts[-1] = _inside(ts[0], L), _inside(ts[-1], L)
    u = np.exp(1j * math.pi * ts)
    Z2, Z3 = np.meshgrid(u, u, indexing="ij")
    vals = np.abs(np.asarray(g(Z2.ravel(), Z3.ravel()))).reshape(Z2.shape)
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    a, b = float(ts[i]), float(ts[j])
    best = float(vals[i, j])
    lo, hi = ts[0], ts[-1]
    h = ts[1] - ts[0]

    def at(x, y):
        x, y = min(max(x, lo), hi), min(max(y, lo), hi)
        return float(abs(np.asarray(g(np.array([np.exp(1j * math.pi * x)]),
                                      np.array([np.exp(1j * math.pi * y)])))[0]))

    for _ in range(refine_rounds):
        x, fx = golden_max(lambda s: at(s, b), max(a - h, lo), min(a + h, hi))
        y, fy = golden_max(lambda s: at(a if fx <= best else x, s), max(b - h, lo), min(b + h, hi))
        moved = False
        if fx > best:
            a, best, moved = x, fx, True
        if fy > best:
            b, best, moved = y, fy, True
        if not moved:
            break
    a, b = _inside(min(max(a, lo), hi), L), _inside(min(max(b, lo), hi), L)
    z2, z3 = np.exp(1j * math.pi * a), np.exp(1j * math.pi * b)
    return complex(z2), complex(z3), at(a, b)


def cube_floor_log(g1_abs: float, mass: float, L: int) -> float:
    """log of |g1|^{L^2} / M^{L^2 - 1}, the two-axis product floor."""
    if g1_abs <= 0:
        return -math.inf
    return L * L * math.log(g1_abs) - (L * L - 1) * math.log(max(mass, 1.0))


def disk_extension_search(g, p: float, q: float | None = None, radii: int | None = None,
                          angles: int | None = None, max_L: int | None = None):
    """Best (w, |g(p w + q)|) over the closed unit disk |w| <= 1.

    Looks at w = 0, a polar grid, and the images of the arcs rho*gamma(L)
    for L = 1, 2, 4, ... with L >= 4/p, then zooms in on the best point.
    """
    cfg = load_config()["disk"]
    q = 1 - p if q is None else q
    radii = radii or cfg["radii"]
    angles = angles or cfg["angles"]
    max_L = max_L or cfg["max_L"]

    def val(w):
        w = np.asarray(w, dtype=complex)
        return np.abs(np.asarray(g(p * w + q)))

    cands = [np.zeros(1, dtype=complex)]
    rs = np.linspace(0, 1, radii)[1:]
    th = np.linspace(-math.pi, math.pi, angles, endpoint=False)
    cands.append((rs[:, None] * np.exp(1j * th)[None, :]).ravel())
    L = 1
    while L <= max_L:
        if L >= 4 / p:
            rho = arc_radius(p, L)
            z = rho * np.exp(1j * math.pi * np.linspace(-1 / L, 1 / L, 257))
            w = (z - q) / p
            cands.append(w[np.abs(w) <= 1])
        L *= 2
    allw = np.concatenate(cands)
    vals = val(allw)
    k = int(np.argmax(vals))
    w_best, best = complex(allw[k]), float(vals[k])
    dr, dth = 1.0 / max(radii - 1, 1), 2 * math.pi / angles
    for _ in range(30):
        r0, t0 = abs(w_best), math.atan2(w_best.imag, w_best.real)
        rr = np.clip(r0 + dr * np.linspace(-1, 1, 9), 0, 1)
        tt = t0 + dth * np.linspace(-1, 1, 9)
        W = (rr[:, None] * np.exp(1j * tt)[None, :]).ravel()
        v = val(W)
        k = int(np.argmax(v))
        if v[k] > best:
            w_best, best = complex(W[k]), float(v[k])
        dr, dth = dr / 4, dth / 4
    return w_best, best
