import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypertrace.hypermatrix import (AxisTransform, Hypermatrix, Pattern, ScatterPosition, ShapeError,
                                    SignedHypermatrix, canonical_shifts, diff, extract_block,
                                    find_period, gather, is_period, is_sparse_strict,
                                    iter_positions, parse_hmx, position_count, positions,
                                    sparsity_index, support_split, to_hmx)


def bits(n, d):
    return st.lists(st.integers(0, 1), min_size=n ** d, max_size=n ** d).map(
        lambda v: Hypermatrix(np.array(v, dtype=np.int8).reshape((n,) * d)))


def signed(n, d):
    return st.lists(st.integers(-1, 1), min_size=n ** d, max_size=n ** d).map(
        lambda v: SignedHypermatrix(np.array(v, dtype=np.int8).reshape((n,) * d)))


# --- diff -------------------------------------------------------------------

def test_diff_equal_is_zero():
    X = Hypermatrix.random(4, 3, np.random.default_rng(0))
    assert diff(X, X).is_zero()


def test_diff_ones_minus_zeros():
    A = diff(Hypermatrix(np.ones((2, 2))), Hypermatrix.zeros((2, 2)))
    assert (A.array == 1).all()


def test_diff_single_entry_support():
    X = Hypermatrix.random(3, 2, np.random.default_rng(1))
    a = X.array.copy()
    a[1, 2] ^= 1
    assert diff(X, Hypermatrix(a)).support() == [(1, 2)]


def test_diff_shape_mismatch():
    with pytest.raises(ShapeError):
        diff(Hypermatrix.zeros((2, 2)), Hypermatrix.zeros((3, 3)))


def test_entries_validated():
    with pytest.raises(ValueError):
        Hypermatrix(np.array([[0, 2], [1, 1]]))
    with pytest.raises(ValueError):
        SignedHypermatrix(np.array([[0, -2], [1, 1]]))


# --- gather / extract_block -------------------------------------------------

def test_gather_scattered_column():
    X = Hypermatrix.random(6, 2, np.random.default_rng(2))
    W = gather(X, ScatterPosition(((1, 4, 5),), (2,)))
    assert W.entries.tolist() == [X.array[1, 2], X.array[4, 2], X.array[5, 2]]


def test_gather_rank_zero():
    X = Hypermatrix.random(4, 3, np.random.default_rng(3))
    W = gather(X, ScatterPosition((), (1, 2, 3)))
    assert W.rank == 0 and int(W.entries) == X.array[1, 2, 3]


def test_extract_block_examples():
    x = Hypermatrix(np.array([1, 0, 1, 1]))
    assert extract_block(x, (1,), 2).entries.tolist() == [0, 1]
    assert extract_block(x, (0,), 4).entries.tolist() == [1, 0, 1, 1]
    with pytest.raises(IndexError):
        extract_block(x, (3,), 2)


@pytest.mark.parametrize("n,r,l", [(n, r, l) for n in range(1, 6) for r in (1, 2) for l in range(1, n + 1)])
def test_gather_contiguous_matches_block(n, r, l):
    X = Hypermatrix.random(n, r, np.random.default_rng(n * 100 + r * 10 + l))
    for corner in itertools.product(range(n - l + 1), repeat=r):
        k = ScatterPosition.contiguous(corner, l, r)
        assert gather(X, k) == extract_block(X, corner, l)


# --- periods ----------------------------------------------------------------

def test_all_ones_has_unit_period():
    W = Pattern(np.ones((4, 4), dtype=np.int8))
    assert find_period(W, 2) == (0, 1)


def test_single_corner_one_is_aperiodic_in_one_dim():
    for l in (2, 3, 4, 5):
        a = np.zeros(l, dtype=np.int8)
        a[0] = 1
        for s in range(1, l):
            assert find_period(Pattern(a), s) is None


def test_single_corner_one_has_antidiagonal_period_in_two_dims():
    # the overlap of W and W shifted by (1, -1) misses the corner cell entirely
    a = np.zeros((3, 3), dtype=np.int8)
    a[0, 0] = 1
    t = find_period(Pattern(a), 1)
    assert t == (1, -1) and _brute_periodic(a, t)
    assert not _brute_periodic(a, (0, 1)) and not _brute_periodic(a, (1, 0))


def test_alternating_sequence_period_two():
    assert find_period(Pattern(np.array([1, 0, 1, 0, 1])), 2) == (2,)


def test_find_period_needs_s_below_l():
    with pytest.raises(ValueError):
        find_period(Pattern(np.ones(3, dtype=np.int8)), 3)


def _brute_periodic(a, t):
    l = a.shape[0]
    for k in itertools.product(range(l), repeat=a.ndim):
        k2 = tuple(x + y for x, y in zip(k, t))
        if all(0 <= v < l for v in k2) and a[k] != a[k2]:
            return False
    return True


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 2).flatmap(lambda r: st.integers(2, 4).flatmap(
    lambda l: st.tuples(st.just(r), st.just(l), st.integers(1, l - 1),
                        st.lists(st.integers(0, 1), min_size=l ** r, max_size=l ** r)))))
def test_find_period_against_exhaustive_scan(case):
    r, l, s, vals = case
    a = np.array(vals, dtype=np.int8).reshape((l,) * r)
    found = find_period(Pattern(a), s)
    nonzero = [t for t in itertools.product(range(-s, s + 1), repeat=r) if any(t)]
    brute = [t for t in nonzero if _brute_periodic(a, t)]
    assert (found is None) == (not brute)
    if found is not None:
        assert _brute_periodic(a, found)
        canon = sorted(t for t in brute if next(x for x in t if x) > 0)
        assert found == canon[0]


def test_canonical_shifts_cover_sign_classes():
    ts = list(canonical_shifts(2, 2))
    assert len(ts) == (5 ** 2 - 1) // 2
    assert all(tuple(-x for x in t) not in ts for t in ts)


def test_is_period_large_shift_vacuous():
    assert is_period(Pattern(np.array([1, 0])), (2,))


# --- sparsity ---------------------------------------------------------------

def _arr(n, entries):
    a = np.zeros((n, n), dtype=np.int8)
    for k, v in entries.items():
        a[k] = v
    return SignedHypermatrix(a)


def test_sparsity_examples():
    assert sparsity_index(_arr(5, {(2, 2): 1})) == 5
    assert sparsity_index(_arr(5, {(0, 0): 1, (3, 1): 1})) == 3
    assert sparsity_index(_arr(5, {(0, 0): 1, (1, 0): -1})) == 5
    with pytest.raises(ValueError):
        sparsity_index(SignedHypermatrix(np.zeros((3, 3), dtype=np.int8)))


@settings(max_examples=200, deadline=None)
@given(signed(5, 2))
def test_sparsity_implies_euclidean_separation(A):
    if A.is_zero():
        return
    s = sparsity_index(A)
    for sign in (1, -1):
        pts = np.argwhere(A.array == sign)
        for a, b in itertools.combinations(pts, 2):
            assert np.abs(a - b).max() >= s
            assert math.dist(a, b) >= s


@settings(max_examples=100, deadline=None)
@given(signed(4, 2))
def test_strict_sparsity_is_stronger(A):
    if A.is_zero():
        return
    s = sparsity_index(A)
    for t in range(1, 5):
        if is_sparse_strict(A, t):
            assert t <= s


def test_support_split():
    assert support_split(SignedHypermatrix(np.zeros((3, 3), dtype=np.int8))) == (set(), set())
    A = _arr(3, {(0, 1): 1, (2, 2): -1, (1, 0): 1})
    h1, h2 = support_split(A)
    assert h1 == {(0, 1), (1, 0)} and h2 == {(2, 2)}
    assert h1 | h2 == set(A.support())


# --- positions --------------------------------------------------------------

def test_positions_small_example():
    got = [k.rows[0] for k in iter_positions(3, 1, 2, 1)]
    assert got == [(0, 1), (0, 2), (1, 2)]


@pytest.mark.parametrize("n,d,l,r", [(n, d, l, r) for n in range(1, 7) for d in range(1, 4)
                                     for r in range(0, d + 1) for l in range(1, n + 1)
                                     if position_count(n, d, l, r) < 20000])
def test_position_count_closed_form(n, d, l, r):
    it = list(iter_positions(n, d, l, r))
    assert len(it) == math.comb(n, l) ** r * n ** (d - r) == len(positions(n, d, l, r))
    assert len(set(it)) == len(it)


def test_position_table_order_and_flat():
    n, d, l, r = 4, 3, 2, 2
    table = positions(n, d, l, r)
    X = Hypermatrix.random(n, d, np.random.default_rng(9))
    for i, k in enumerate(iter_positions(n, d, l, r)):
        assert table.position(i) == k and table.index(k) == i
        assert X.array.reshape(-1)[table.flat[i]].tolist() == gather(X, k).entries.reshape(-1).tolist()


def test_scatter_position_validation():
    with pytest.raises(ValueError):
        ScatterPosition(((2, 1),), ())


# --- transforms -------------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(st.permutations(range(3)), st.lists(st.booleans(), min_size=3, max_size=3),
       st.permutations(range(3)), st.lists(st.booleans(), min_size=3, max_size=3))
def test_transform_composition(p1, r1, p2, r2):
    a = np.arange(27).reshape(3, 3, 3)
    s, t = AxisTransform(tuple(p1), tuple(r1)), AxisTransform(tuple(p2), tuple(r2))
    assert np.array_equal(s.then(t).apply_array(a), t.apply_array(s.apply_array(a)))


def test_transform_extend_leaves_tail():
    t = AxisTransform((1, 0), (True, False)).extend(3)
    a = np.arange(8).reshape(2, 2, 2)
    b = t.apply_array(a)
    assert np.array_equal(b[..., 1], np.flip(a[..., 1].T, 0))


# --- HMX --------------------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4).flatmap(lambda d: signed(3, d)))
def test_hmx_round_trip_signed(A):
    text = to_hmx(A)
    B = parse_hmx(text, signed=True)
    assert B == A and to_hmx(B) == text


@settings(max_examples=50, deadline=None)
@given(bits(4, 2))
def test_hmx_round_trip_bits(X):
    assert parse_hmx(to_hmx(X)) == X


def test_hmx_rejects_truncated():
    with pytest.raises(ValueError):
        parse_hmx("2 2 2\n0 1\n1")
