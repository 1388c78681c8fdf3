"""Binary and signed hypermatrices, scattered positions and the HMX text format.

Storage is dense and row-major: axis 0 varies slowest, so a position
``k = (k_1, ..., k_d)`` indexes ``array[k_1, ..., k_d]`` directly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

MAX_DIM = 8
MAX_SIDE = 64
DEFAULT_POSITION_CAP = 10_000_000

# Value written outside a trace when it is padded for pattern matching.
# It never equals a pattern entry, so cells beyond the trace never match.
SENTINEL = 2


class ShapeError(ValueError):
    pass


class _Cube:
    _allowed: frozenset = frozenset()
    _min_dim = 1

    def __init__(self, entries, dims: Sequence[int] | None = None):
        arr = np.array(entries, dtype=np.int8)
        if dims is not None:
            dims = tuple(int(x) for x in dims)
            if arr.size != math.prod(dims):
                raise ShapeError(f"{arr.size} entries do not fill dims {dims}")
            arr = arr.reshape(dims)
        if not self._min_dim <= arr.ndim <= MAX_DIM:
            raise ShapeError(f"dimension {arr.ndim} outside [{self._min_dim}, {MAX_DIM}]")
        if arr.size and (arr.min() < min(self._allowed) or arr.max() > max(self._allowed)):
            raise ValueError(f"entries must lie in {sorted(self._allowed)}")
        arr.setflags(write=False)
        self._arr = arr
        self._key = None

    @property
    def array(self) -> np.ndarray:
        return self._arr

    @property
    def dims(self) -> tuple[int, ...]:
        return self._arr.shape

    @property
    def d(self) -> int:
        return self._arr.ndim

    @property
    def n(self) -> int:
        """Common side length; raises for ragged shapes."""
        if len(set(self.dims)) > 1:
            raise ShapeError(f"ragged dims {self.dims}")
        return self.dims[0] if self.dims else 1

    def key(self) -> bytes:
        if self._key is None:
            self._key = bytes(str(self.dims), "ascii") + self._arr.tobytes()
        return self._key

    def __eq__(self, other):
        return type(self) is type(other) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"{type(self).__name__}(dims={self.dims}, entries={self._arr.ravel().tolist()})"


class Hypermatrix(_Cube):
    """A {0,1}-valued array; traces may have unequal (even zero) side lengths."""

    _allowed = frozenset({0, 1})

    @classmethod
    def zeros(cls, dims) -> "Hypermatrix":
        return cls(np.zeros(dims, dtype=np.int8))

    @classmethod
    def random(cls, n: int, d: int, rng: np.random.Generator, density: float = 0.5):
        return cls((rng.random((n,) * d) < density).astype(np.int8))

    @classmethod
    def from_index(cls, index: int, n: int, d: int) -> "Hypermatrix":
        """Candidate number ``index`` in the fixed enumeration of {0,1}^{n^d}."""
        size = n ** d
        bits = [(index >> i) & 1 for i in range(size)]
        return cls(np.array(bits, dtype=np.int8).reshape((n,) * d))


class SignedHypermatrix(_Cube):
    _allowed = frozenset({-1, 0, 1})
    _min_dim = 0

    def is_zero(self) -> bool:
        return not self._arr.any()

    def support(self) -> list[tuple[int, ...]]:
        return [tuple(int(c) for c in k) for k in np.argwhere(self._arr != 0)]


@dataclass(frozen=True)
class Pattern:
    """A binary l^{x r} block; rank 0 is a single scalar entry."""

    side: int
    rank: int
    entries: np.ndarray

    def __init__(self, entries, side: int | None = None):
        arr = np.array(entries, dtype=np.int8)
        rank = arr.ndim
        if rank and len(set(arr.shape)) != 1:
            raise ShapeError(f"pattern must be square, got {arr.shape}")
        if side is None:
            side = arr.shape[0] if rank else 1
        if rank and arr.shape[0] != side:
            raise ShapeError("side does not match entries")
        if arr.size and not set(np.unique(arr).tolist()) <= {0, 1}:
            raise ValueError("pattern entries must be bits")
        arr.setflags(write=False)
        object.__setattr__(self, "side", int(side))
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def scalar(cls, value: int = 1) -> "Pattern":
        return cls(np.int8(value))

    def key(self) -> bytes:
        return bytes(f"{self.side},{self.rank}:", "ascii") + self.entries.tobytes()

    def __eq__(self, other):
        return (isinstance(other, Pattern) and self.side == other.side
                and self.rank == other.rank and np.array_equal(self.entries, other.entries))

    def __hash__(self):
        return hash(self.key())


@dataclass(frozen=True)
class ScatterPosition:
    """An element of I(n^d, l^r): r increasing l-tuples, then d - r indices."""

    rows: tuple[tuple[int, ...], ...]
    points: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(int(x) for x in t) for t in self.rows))
        object.__setattr__(self, "points", tuple(int(x) for x in self.points))
        for t in self.rows:
            if any(b <= a for a, b in zip(t, t[1:])):
                raise ValueError(f"tuple {t} is not strictly increasing")
        if len({len(t) for t in self.rows}) > 1:
            raise ValueError("tuples must share one length")

    @property
    def rank(self) -> int:
        return len(self.rows)

    @property
    def side(self) -> int:
        return len(self.rows[0]) if self.rows else 1

    @property
    def d(self) -> int:
        return len(self.rows) + len(self.points)

    @classmethod
    def contiguous(cls, corner: Sequence[int], l: int, r: int) -> "ScatterPosition":
        corner = [int(c) for c in corner]
        return cls(tuple(tuple(range(c, c + l)) for c in corner[:r]), tuple(corner[r:]))


@dataclass(frozen=True)
class ComplexPoint:
    """A point of C(d, l^r), shaped like a ScatterPosition."""

    rows: tuple[tuple, ...]
    points: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(t) for t in self.rows))
        object.__setattr__(self, "points", tuple(self.points))

    @property
    def rank(self) -> int:
        return len(self.rows)

    @property
    def side(self) -> int:
        return len(self.rows[0]) if self.rows else 1

    def values(self) -> list:
        return [v for t in self.rows for v in t] + list(self.points)

    def map(self, fn) -> "ComplexPoint":
        return ComplexPoint(tuple(tuple(fn(v) for v in t) for t in self.rows),
                            tuple(fn(v) for v in self.points))


@dataclass(frozen=True)
class AxisTransform:
    """Transpose by ``perm`` (new axis t is old axis perm[t]), then flip new axes."""

    perm: tuple[int, ...]
    reverse: tuple[bool, ...]

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f"{self.perm} is not a permutation")
        if len(self.reverse) != len(self.perm):
            raise ValueError("one reversal flag per axis")

    @classmethod
    def identity(cls, d: int) -> "AxisTransform":
        return cls(tuple(range(d)), (False,) * d)

    def is_identity(self) -> bool:
        return self.perm == tuple(range(len(self.perm))) and not any(self.reverse)

    def extend(self, d: int) -> "AxisTransform":
        """Act on the leading axes of a d-dimensional array, fixing the rest."""
        i = len(self.perm)
        return AxisTransform(self.perm + tuple(range(i, d)), self.reverse + (False,) * (d - i))

    def then(self, other: "AxisTransform") -> "AxisTransform":
        """The transform applying ``self`` first and ``other`` second."""
        perm = tuple(self.perm[t] for t in other.perm)
        rev = tuple(bool(other.reverse[t]) ^ bool(self.reverse[other.perm[t]])
                    for t in range(len(other.perm)))
        return AxisTransform(perm, rev)

    def apply_array(self, arr: np.ndarray) -> np.ndarray:
        out = np.transpose(arr, self.perm)
        flips = tuple(t for t, f in enumerate(self.reverse) if f)
        return np.flip(out, axis=flips) if flips else out

    def apply(self, h):
        return type(h)(np.ascontiguousarray(self.apply_array(h.array)))

    def to_json(self) -> dict:
        return {"perm": list(self.perm), "reverse": list(self.reverse)}


# ---------------------------------------------------------------------------
# operations


def diff(X: Hypermatrix, Y: Hypermatrix) -> SignedHypermatrix:
    if X.dims != Y.dims:
        raise ShapeError(f"dims differ: {X.dims} vs {Y.dims}")
    return SignedHypermatrix(X.array.astype(np.int8) - Y.array.astype(np.int8))


def gather(X: Hypermatrix, k: ScatterPosition) -> Pattern:
    """Sub-hypermatrix X_k: Cartesian product of the tuples with the fixed indices."""
    if k.d != X.d:
        raise ShapeError(f"position has {k.d} axes, hypermatrix has {X.d}")
    index = list(k.rows) + [[p] for p in k.points]
    for ax, idx in enumerate(index):
        if min(idx) < 0 or max(idx) >= X.dims[ax]:
            raise IndexError(f"index {idx} out of range on axis {ax}")
    block = X.array[np.ix_(*index)]
    block = block.reshape(block.shape[:k.rank]) if k.rank else block.reshape(())
    return Pattern(block, side=k.side)


def extract_block(X, corner: Sequence[int], l: int) -> Pattern:
    corner = tuple(int(c) for c in corner)
    if len(corner) != X.d:
        raise ShapeError("corner needs one index per axis")
    if any(c < 0 or c + l > m for c, m in zip(corner, X.dims)):
        raise IndexError(f"block at {corner} of side {l} exceeds {X.dims}")
    sl = tuple(slice(c, c + l) for c in corner)
    return Pattern(X.array[sl], side=l)


def canonical_shifts(r: int, s: int) -> Iterator[tuple[int, ...]]:
    """Nonzero t in [-s, s]^r with first nonzero entry positive, in lex order.

    t is a period exactly when -t is, so these cover every candidate.
    """
    for t in itertools.product(range(-s, s + 1), repeat=r):
        nz = next((x for x in t if x), 0)
        if nz > 0:
            yield t


def is_period(W: Pattern, t: Sequence[int]) -> bool:
    a = W.entries
    src, dst = [], []
    for shift, size in zip(t, a.shape):
        if abs(shift) >= size:
            return True
        src.append(slice(max(0, -shift), size - max(0, shift)))
        dst.append(slice(max(0, shift), size - max(0, -shift)))
    return bool(np.array_equal(a[tuple(src)], a[tuple(dst)]))


def find_period(W: Pattern, s: int) -> tuple[int, ...] | None:
    """Smallest canonical period in [-s, s]^r, or None if W is s-aperiodic."""
    if s < 1 or W.rank == 0:
        return None
    if s >= W.side:
        raise ValueError(f"need s < l, got s={s}, l={W.side}")
    for t in canonical_shifts(W.rank, s):
        if is_period(W, t):
            return t
    return None


def _equal_sign_pairs(A):
    arr = A.array if hasattr(A, "array") else np.asarray(A)
    for sign in (1, -1):
        pts = np.argwhere(arr == sign)
        if len(pts) > 1:
            yield pts


def sparsity_index(A) -> int:
    """Largest s with every equal-coefficient pair s-apart in some coordinate.

    That is the minimum Chebyshev distance within each sign class; the side
    length n is returned when no class holds two positions.
    """
    arr = A.array if hasattr(A, "array") else np.asarray(A)
    if not arr.any():
        raise ValueError("sparsity of the zero hypermatrix is undefined")
    best = arr.shape[0] if arr.ndim else 1
    for pts in _equal_sign_pairs(arr):
        cheb = np.abs(pts[:, None, :] - pts[None, :, :]).max(axis=2)
        np.fill_diagonal(cheb, np.iinfo(cheb.dtype).max)
        best = min(best, int(cheb.min()))
    return best


def is_sparse_strict(A, s: int) -> bool:
    """Stronger reading: one fixed axis separates every equal-coefficient pair."""
    arr = A.array if hasattr(A, "array") else np.asarray(A)
    groups = list(_equal_sign_pairs(arr))
    for j in range(arr.ndim):
        ok = True
        for pts in groups:
            gap = np.abs(pts[:, None, j] - pts[None, :, j])
            np.fill_diagonal(gap, s)
            if gap.min() < s:
                ok = False
                break
        if ok:
            return True
    return False


def support_split(A: SignedHypermatrix):
    arr = A.array
    h1 = {tuple(int(c) for c in k) for k in np.argwhere(arr == 1)}
    h2 = {tuple(int(c) for c in k) for k in np.argwhere(arr == -1)}
    return h1, h2


def position_count(n: int, d: int, l: int, r: int) -> int:
    return math.comb(n, l) ** r * n ** (d - r)


def _check_position_params(n, d, l, r):
    if not (0 <= r <= d and 1 <= l <= n):
        raise ValueError(f"invalid position parameters n={n} d={d} l={l} r={r}")


def iter_positions(n: int, d: int, l: int, r: int) -> Iterator[ScatterPosition]:
    """Every element of I(n^d, l^r) once, in lexicographic order."""
    _check_position_params(n, d, l, r)
    tuples = list(itertools.combinations(range(n), l))
    axes = [tuples] * r + [range(n)] * (d - r)
    for combo in itertools.product(*axes):
        yield ScatterPosition(combo[:r], combo[r:])


class PositionTable:
    """Vectorised view of I(n^d, l^r) in the same order as ``iter_positions``.

    ``rows`` has shape (P, r, l), ``points`` (P, d - r) and ``flat`` (P, l^r)
    holds row-major flat indices into an n^d array, one per pattern cell.
    """

    def __init__(self, n: int, d: int, l: int, r: int, cap: int = DEFAULT_POSITION_CAP):
        _check_position_params(n, d, l, r)
        count = position_count(n, d, l, r)
        if count > cap:
            raise MemoryError(f"{count} positions exceed the cap {cap}")
        self.n, self.d, self.l, self.r = n, d, l, r
        tuples = np.array(list(itertools.combinations(range(n), l)), dtype=np.int64).reshape(-1, l)
        grids = np.meshgrid(*([np.arange(len(tuples))] * r + [np.arange(n)] * (d - r)),
                            indexing="ij")
        flat_ids = [g.ravel() for g in grids]
        P = count
        self.rows = np.stack([tuples[flat_ids[a]] for a in range(r)], axis=1) if r else \
            np.zeros((P, 0, l), dtype=np.int64)
        self.points = np.stack(flat_ids[r:], axis=1) if d > r else np.zeros((P, 0), dtype=np.int64)
        strides = [n ** (d - 1 - a) for a in range(d)]
        cells = list(itertools.product(range(l), repeat=r))
        flat = np.zeros((P, len(cells)), dtype=np.int64)
        base = sum(self.points[:, b] * strides[r + b] for b in range(d - r)) if d > r else 0
        for c, cell in enumerate(cells):
            off = base
            for a in range(r):
                off = off + self.rows[:, a, cell[a]] * strides[a]
            flat[:, c] = off
        self.flat = flat
        self._index = None

    def __len__(self):
        return self.flat.shape[0]

    def position(self, i: int) -> ScatterPosition:
        return ScatterPosition(tuple(tuple(int(x) for x in t) for t in self.rows[i]),
                               tuple(int(x) for x in self.points[i]))

    def index(self, k: ScatterPosition) -> int:
        if self._index is None:
            self._index = {self.position(i): i for i in range(len(self))}
        return self._index[k]

    def gaps(self) -> np.ndarray:
        """Exponents of the odot powers: (P, r, l) gap array."""
        g = self.rows.copy()
        if self.l > 1:
            g[:, :, 1:] = self.rows[:, :, 1:] - self.rows[:, :, :-1] - 1
        return g


@lru_cache(maxsize=256)
def positions(n: int, d: int, l: int, r: int) -> PositionTable:
    return PositionTable(n, d, l, r)


def match_matrix(stack: np.ndarray, W: Pattern, table: PositionTable) -> np.ndarray:
    """Bool (U, P): row u of ``stack`` (flattened n^d arrays) matches W at each position."""
    want = W.entries.reshape(-1)
    got = stack[:, table.flat]
    return np.all(got == want, axis=2)


# ---------------------------------------------------------------------------
# HMX v1 text format


def to_hmx(h) -> str:
    """Header ``d n1 .. nd``, then entries with one last-axis row per line."""
    arr = h.entries if isinstance(h, Pattern) else h.array
    lines = [" ".join(str(x) for x in (arr.ndim,) + arr.shape)]
    if arr.ndim == 0:
        lines.append(str(int(arr)))
    elif arr.size:
        for row in arr.reshape(-1, arr.shape[-1]):
            lines.append(" ".join(str(int(x)) for x in row))
    return "\n".join(lines) + "\n"


def parse_hmx(text: str, signed: bool | None = None):
    """Parse HMX v1; ``signed=None`` picks the type from the symbols present."""
    tokens = text.split()
    if not tokens:
        raise ValueError("empty HMX document")
    d = int(tokens[0])
    dims = tuple(int(x) for x in tokens[1:1 + d])
    if len(dims) != d:
        raise ValueError("truncated HMX header")
    body = [int(x) for x in tokens[1 + d:]]
    if len(body) != math.prod(dims):
        raise ValueError(f"expected {math.prod(dims)} entries, found {len(body)}")
    if signed is None:
        signed = d == 0 or any(v < 0 for v in body)
    cls = SignedHypermatrix if signed else Hypermatrix
    return cls(np.array(body, dtype=np.int8).reshape(dims))
