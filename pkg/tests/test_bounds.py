import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypertrace.bounds import (ArcSpec, FacetError, arc_radius, corollary_bound, cube_floor_log,
                               disk_extension_search, eval_on_circle, in_arc, lift_w,
                               littlewood_arc, littlewood_bound, max_modulus_univariate,
                               multivariate_bound, primitive_vectors, substitute, tangent_facet,
                               two_axis_arc_search)
from hypertrace.calibrate import sparse_signed_array
from hypertrace.genfun import eval_poly, horner_eval
from hypertrace.hypermatrix import sparsity_index


# --- arcs and the w substitution -------------------------------------------

@pytest.mark.parametrize("L", [1, 3, 7, 12.5, 33])
def test_arc_grid_inside(L):
    ts = ArcSpec(L, 1.0, 64).fractions()
    assert all(in_arc(float(t), L) for t in ts)
    assert ts[0] < 0 < ts[-1] and np.all(np.diff(ts) > 0)


def test_in_arc_is_exact():
    assert in_arc(Fraction(1, 3), 3)
    assert not in_arc(Fraction(1, 3) + Fraction(1, 10 ** 30), 3)


def test_arc_spec_validation():
    with pytest.raises(ValueError):
        ArcSpec(0.5)
    with pytest.raises(ValueError):
        ArcSpec(2, rho=0)
    with pytest.raises(ValueError):
        ArcSpec(2, density=8)


def test_lift_w_trivial_points():
    assert lift_w(1.0, 0.4)[0] == pytest.approx(1)
    assert lift_w(0.6, 0.4)[0] == pytest.approx(0)
    with pytest.raises(ZeroDivisionError):
        lift_w(1.0, 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(1.0, 40.0), st.floats(-1.0, 1.0))
def test_w_in_unit_disk_on_shrunk_arc(p, scale, frac):
    L = 4 / p * scale
    rho = arc_radius(p, L)
    z = rho * complex(math.cos(math.pi * frac / L), math.sin(math.pi * frac / L))
    w, ell = lift_w(z, p, L=L)
    assert abs(w) <= 1 + 1e-12 and ell == pytest.approx(1.0)


def test_littlewood_arc_choice():
    assert littlewood_arc(1000, 0.5) == (10, arc_radius(0.5, 10))
    L, rho = littlewood_arc(8, 0.5)
    assert L == 8 and 0 < rho < 1


# --- univariate search --------------------------------------------------------

def test_constant_and_monomial():
    assert max_modulus_univariate([1], 0, 3, 1.0).value == pytest.approx(1)
    bw = max_modulus_univariate([0] * 20 + [1], 0, 3, 0.9)
    assert bw.value == pytest.approx(0.9 ** 20)


def test_zero_polynomial_rejected():
    with pytest.raises(ValueError):
        max_modulus_univariate([0, 0], 0, 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(4, 300), st.integers(1, 8))
def test_search_beats_independent_fine_grid(seed, m, L):
    rng = np.random.default_rng(seed)
    c = rng.choice([-1, 1], m + 1)
    bw = max_modulus_univariate(c, 0, L, 1.0)
    thetas = np.linspace(-math.pi / L, math.pi / L, 8192)
    brute = max(abs(np.polynomial.polynomial.polyval(np.exp(1j * th), c)) for th in thetas)
    assert bw.value >= brute * (1 - 1e-3)
    z = bw.point[0]
    assert abs(np.polynomial.polynomial.polyval(z, c)) == pytest.approx(bw.value, rel=1e-9)
    assert in_arc(bw.info["t"], L)


def test_eval_on_circle_matches_polyval():
    rng = np.random.default_rng(1)
    c = rng.normal(size=40)
    exps = np.arange(40)
    th = rng.uniform(-1, 1, 17)
    got = eval_on_circle(exps, c.astype(complex), 0.8, th)
    want = np.polynomial.polynomial.polyval(0.8 * np.exp(1j * th), c)
    assert np.allclose(got, want)


@pytest.mark.parametrize("m", [64, 256])
def test_littlewood_floor(m):
    rng = np.random.default_rng(m)
    for _ in range(10):
        bw = littlewood_bound(rng.choice([-1, 1], m + 1), 0.5)
        assert bw.meets_floor(), (bw.value, bw.budget)
        assert bw.budget == pytest.approx(math.exp(-bw.calib * m ** (1 / 3)))


# --- lattice directions -------------------------------------------------------

def test_primitive_examples():
    assert [v.b for v in primitive_vectors(1, 2)] == [(0, 1), (1, 0)]
    assert [v.b for v in primitive_vectors(3, 1)] == [(1,)]


@pytest.mark.parametrize("R,d", [(10, 2), (4, 3), (2.5, 4)])
def test_primitive_count_and_invariants(R, d):
    got = {v.b for v in primitive_vectors(R, d)}
    rb = int(R)
    brute = set()
    for b in np.ndindex(*(2 * rb + 1,) * d):
        v = tuple(x - rb for x in b)
        if not any(v) or sum(x * x for x in v) > R * R:
            continue
        if next(x for x in v if x) < 0:
            continue
        if math.gcd(*v) == 1:
            brute.add(v)
    assert got == brute
    for v in got:
        assert math.gcd(*v) == 1 and math.hypot(*v) <= R + 1e-12


def test_tangent_facet_examples():
    f = tangent_facet([(2, 3)], [], 2)
    assert f.b == (1, 0) and len(f.contacts) == 1
    f = tangent_facet([(0, 0), (3, 0)], [], 3)
    assert len(f.contacts) == 1
    with pytest.raises(FacetError):
        tangent_facet([(0, 0), (0, 1), (1, 0), (1, 1)], [], 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([(2, 16, 0.6), (3, 8, 0.6), (2, 32, 0.6)]))
def test_tangent_facet_property(seed, case):
    d, n, mu = case
    rng = np.random.default_rng(seed)
    s = math.ceil(n ** mu - 1e-9)
    a = sparse_signed_array(rng, n, d, s, int(rng.integers(1, 30)))
    R = math.ceil(d * n ** (1 - mu) - 1e-9)
    H1 = [tuple(k) for k in np.argwhere(a == 1)]
    H2 = [tuple(k) for k in np.argwhere(a == -1)]
    f = tangent_facet(H1, H2, R)
    vals = {k: sum(x * y for x, y in zip(f.b, k)) for k in H1 + H2}
    assert min(vals.values()) == f.m0
    on1 = [k for k in H1 if vals[k] == f.m0]
    on2 = [k for k in H2 if vals[k] == f.m0]
    assert len(on1) <= 1 and len(on2) <= 1 and set(on1 + on2) == set(f.contacts)


def test_substitution_examples():
    c = np.zeros((2, 2))
    c[1, 1] = 1
    sub = substitute(c, (1, 1), 1.0, 0)
    assert sub.m0 == 2 and np.allclose(sub.coeffs, [1])
    c = np.zeros((2, 2))
    c[1, 0], c[0, 1] = 1, -1
    v = np.exp(0.3j)
    sub = substitute(c, (2, 1), v, 0)
    assert sub.m0 == 1 and np.allclose(sub.coeffs, [-1, v])
    c = np.zeros((3, 3))
    c[2, 0], c[0, 2] = 1, 1
    sub = substitute(c, (1, 1))
    assert sub.m0 == 2 and np.allclose(sub.coeffs, [2])


# --- multivariate pipelines ----------------------------------------------------

def _check_pipeline(c, bw):
    L = bw.info["L"]
    for z in bw.point:
        assert abs(abs(z) - 1) < 1e-12
    t = [math.atan2(z.imag, z.real) / math.pi for z in bw.point]
    assert all(abs(x) <= 1 / L + 1e-12 for x in t)
    direct = abs(eval_poly(c, bw.point))
    assert direct == pytest.approx(bw.value, rel=1e-9)
    assert abs(horner_eval(c, bw.point)) == pytest.approx(bw.value, rel=1e-9)


@pytest.mark.parametrize("d,n", [(2, 32), (3, 32), (2, 64)])
def test_multivariate_bound(d, n):
    rng = np.random.default_rng(d * 1000 + n)
    mu = 0.6
    s = math.ceil(n ** mu - 1e-9)
    L = math.ceil(n ** 0.2 - 1e-9)
    for _ in range(4):
        c = sparse_signed_array(rng, n, d, s, int(rng.integers(1, 40)))
        assert sparsity_index(c) >= s
        bw = multivariate_bound(c, mu, L, 1)
        _check_pipeline(c, bw)
        assert bw.meets_floor()


def test_multivariate_rejects_dense():
    c = np.ones((8, 8), dtype=np.int8)
    with pytest.raises(ValueError):
        multivariate_bound(c, 0.6, 1, 1)


def test_rotation_keeps_binomial_away_from_zero():
    n, t = 32, 5
    c = np.zeros((n, n), dtype=np.int8)
    c[0, 0], c[t, 0] = 1, -1
    bw = multivariate_bound(c, 0.6, 2, 1)
    floor = abs(1 - np.exp(1j * math.pi / (2 * n)))
    assert bw.info["C_v_abs"] >= floor
    assert abs(1 - np.exp(1j * math.pi * t / (2 * n))) >= floor


def test_corollary_dense():
    rng = np.random.default_rng(16)
    c = rng.choice([-1, 1], (16, 16)).astype(np.int8)
    bw = corollary_bound(c, 4)
    _check_pipeline(c, bw)
    assert bw.meets_floor()


def test_corollary_one_dim_is_univariate():
    rng = np.random.default_rng(17)
    for _ in range(5):
        c = rng.choice([-1, 0, 1], 12)
        c[0] = 1
        bw = corollary_bound(c, 2)
        uni = max_modulus_univariate(c, 0, 2 * 2 * 12, 1.0)
        assert bw.value == pytest.approx(uni.value, rel=1e-9)


def test_single_monomial_corollary():
    c = np.zeros((4, 4), dtype=np.int8)
    c[2, 1] = -1
    assert corollary_bound(c, 1).value == pytest.approx(1)


# --- two free axes and the disk -------------------------------------------------

def test_two_axis_trivial():
    z2, z3, v = two_axis_arc_search(lambda a, b: a * b, 4)
    assert v == pytest.approx(1)
    _, _, v = two_axis_arc_search(lambda a, b: 0 * a + 2.5, 4)
    assert v == pytest.approx(2.5)


def test_two_axis_beats_grid():
    rng = np.random.default_rng(3)
    c = rng.choice([-1, 0, 1], (6, 6))
    c[0, 0] = 1

    def g(a, b):
        return np.array([eval_poly(c, (x, y)) for x, y in zip(a, b)])

    z2, z3, v = two_axis_arc_search(g, 4, density=64)
    t = np.linspace(-0.25, 0.25, 41)
    u = np.exp(1j * math.pi * t)
    brute = max(abs(eval_poly(c, (x, y))) for x in u for y in u)
    assert v >= brute * (1 - 1e-9)
    assert abs(eval_poly(c, (z2, z3))) == pytest.approx(v)
    assert in_arc(math.atan2(z2.imag, z2.real) / math.pi, 4)


def test_cube_floor_log():
    assert cube_floor_log(0.5, 3.0, 2) == pytest.approx(4 * math.log(0.5) - 3 * math.log(3))
    assert cube_floor_log(0.0, 3.0, 2) == -math.inf


def test_disk_examples():
    w, v = disk_extension_search(lambda z: 0 * z + 3.0, 0.5)
    assert v == pytest.approx(3.0)
    w, v = disk_extension_search(lambda z: z ** 9, 0.4)
    assert v == pytest.approx(1.0, abs=1e-6) and abs(w - 1) < 1e-3


def test_disk_littlewood_floor():
    from hypertrace.config import calib_constant
    C = calib_constant("disk")
    rng = np.random.default_rng(5)
    for _ in range(5):
        m = int(rng.integers(8, 200))
        c = rng.choice([-1, 1], m + 1).astype(float)
        w, v = disk_extension_search(lambda z, c=c: np.polynomial.polynomial.polyval(z, c), 0.5)
        assert abs(w) <= 1 + 1e-12
        assert v >= math.exp(-C * m ** (1 / 3))
