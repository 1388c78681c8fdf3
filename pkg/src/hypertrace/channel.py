"""Slice-deletion channel: sampling, padding and exact/Monte Carlo pattern statistics.

A trace keeps each of the ``d * n`` slices independently with probability
``p = 1 - q``.  Pattern statistics read the trace at a scattered position;
positions that reach beyond the retained shape never match.  Exact values
come from enumerating all ``2^(d n)`` retention patterns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .config import make_rng
from .hypermatrix import (SENTINEL, AxisTransform, Hypermatrix, Pattern, ScatterPosition,
                          ShapeError, match_matrix, parse_hmx, positions, to_hmx)

DEFAULT_ENUMERATION_CAP = 2 ** 24
_STACK_BYTES = 1 << 26


@dataclass(frozen=True)
class ChannelParams:
    q: float | Fraction
    oracle: bool = False

    def __post_init__(self):
        q = self.q
        if not 0 <= q <= 1:
            raise ValueError(f"deletion probability {q} outside [0, 1]")
        if q in (0, 1) and not self.oracle:
            raise ValueError("q in {0, 1} is only allowed in oracle mode")

    @property
    def p(self):
        return 1 - self.q

    @property
    def exact(self) -> bool:
        return isinstance(self.q, Fraction)


@dataclass(frozen=True)
class Trace:
    retained: tuple[tuple[int, ...], ...]
    entries: Hypermatrix
    n: int

    def __post_init__(self):
        object.__setattr__(self, "retained", tuple(tuple(int(i) for i in ax) for ax in self.retained))
        if tuple(len(ax) for ax in self.retained) != self.entries.dims:
            raise ShapeError("entries do not match the retained index lists")
        for ax in self.retained:
            if any(b <= a for a, b in zip(ax, ax[1:])) or any(i < 0 or i >= self.n for i in ax):
                raise ValueError(f"bad retained list {ax}")

    @property
    def shape(self):
        return self.entries.dims


@dataclass(frozen=True)
class PaddedTrace:
    matrix: Hypermatrix
    trace_shape: tuple[int, ...]


def _trace_from_mask(X: Hypermatrix, mask: np.ndarray) -> Trace:
    kept = [np.flatnonzero(m) for m in mask]
    entries = X.array[np.ix_(*kept)] if X.d else X.array
    return Trace(tuple(tuple(k) for k in kept), Hypermatrix(entries), X.n)


def _draw_masks(rng: np.random.Generator, T: int, d: int, n: int, q) -> np.ndarray:
    # axes in order, indices increasing, one uniform draw per slice
    u = rng.random((T, d, n))
    return u >= float(q)


def sample_trace(X: Hypermatrix, params: ChannelParams, seed) -> Trace:
    rng = make_rng(seed)
    return _trace_from_mask(X, _draw_masks(rng, 1, X.d, X.n, params.q)[0])


def pad(t: Trace, dims: Sequence[int]) -> PaddedTrace:
    """Place the trace at the all-low corner of a zero hypermatrix of ``dims``."""
    dims = tuple(dims)
    if len(dims) != len(t.shape) or any(m > n for m, n in zip(t.shape, dims)):
        raise ShapeError(f"trace shape {t.shape} does not fit {dims}")
    out = np.zeros(dims, dtype=np.int8)
    out[tuple(slice(0, m) for m in t.shape)] = t.entries.array
    return PaddedTrace(Hypermatrix(out), t.shape)


def _sentinel_pad(arr: np.ndarray, n: int, d: int) -> np.ndarray:
    out = np.full((n,) * d, SENTINEL, dtype=np.int8)
    out[tuple(slice(0, m) for m in arr.shape)] = arr
    return out


def trace_matches(t: Trace, W: Pattern, j: ScatterPosition, frame: AxisTransform | None = None) -> bool:
    """Indicator that the (optionally re-framed) trace shows W at position j."""
    arr = t.entries.array
    if frame is not None:
        arr = frame.apply_array(arr)
    index = list(j.rows) + [[p] for p in j.points]
    if any(max(ix) >= m for ix, m in zip(index, arr.shape)):
        return False
    block = arr[np.ix_(*index)].reshape(W.entries.shape)
    return bool(np.array_equal(block, W.entries))


# ---------------------------------------------------------------------------
# exact enumeration


@lru_cache(maxsize=16)
def _axis_maps(n: int):
    """Per-axis retention masks in bit order, their source maps and kept counts."""
    M = 1 << n
    masks = ((np.arange(M)[:, None] >> np.arange(n)) & 1).astype(bool)
    counts = masks.sum(axis=1)
    order = np.argsort(~masks, axis=1, kind="stable")
    src = np.where(np.arange(n)[None, :] < counts[:, None], order, n)
    return masks, src, counts


def axis_weights(n: int, params: ChannelParams) -> np.ndarray:
    """Probability of each retention mask on one axis."""
    _, _, counts = _axis_maps(n)
    p, q = params.p, params.q
    if params.exact:
        return np.array([p ** int(c) * q ** (n - int(c)) for c in counts], dtype=object)
    return np.array([float(p) ** int(c) * float(q) ** (n - int(c)) for c in counts])


def combo_weights(n: int, d: int, params: ChannelParams) -> np.ndarray:
    """Joint retention probabilities, axis-0 mask slowest."""
    w = axis_weights(n, params)
    out = np.array([1], dtype=w.dtype) if params.exact else np.ones(1)
    for _ in range(d):
        out = np.multiply.outer(out, w).reshape(-1)
    return out


def _stack_blocks(arr: np.ndarray, n: int, d: int):
    """Yield sentinel-padded traces for every retention combo, in blocks.

    Each block is (rows, n^d) and the blocks run through the combos in order.
    """
    _, src, _ = _axis_maps(n)
    M = 1 << n
    big = np.full((n + 1,) * d, SENTINEL, dtype=np.int8)
    big[(slice(0, n),) * d] = arr
    per_first = M ** (d - 1) * n ** d
    step = max(1, _STACK_BYTES // max(per_first, 1))
    for start in range(0, M, step):
        firsts = src[start:start + step]
        idx = []
        for a in range(d):
            s = firsts if a == 0 else src
            shape = [1] * (2 * d)
            shape[a] = s.shape[0]
            shape[d + a] = n
            idx.append(s.reshape(shape))
        block = big[tuple(idx)]
        yield block.reshape(-1, n ** d)


def check_enumeration(n: int, d: int, cap: int = DEFAULT_ENUMERATION_CAP):
    if d * n > math.log2(cap):
        raise MemoryError(f"2^{d * n} retention combos exceed the cap {cap}")


def pattern_prob_table(X: Hypermatrix, W: Pattern, params: ChannelParams,
                       cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """Exact P[trace shows W at j] for every j in I(n^d, l^r), lex order."""
    n, d = X.n, X.d
    return _prob_table(X.key(), X.array.tobytes(), n, d, W, params, params.exact, cap).copy()


@lru_cache(maxsize=65536)
def _prob_table(_key, raw, n, d, W, params, _exact, cap):
    # _exact keeps q=0.5 and q=Fraction(1, 2) apart: they compare equal
    check_enumeration(n, d, cap)
    if W.rank > d or W.side > n:
        raise ShapeError("pattern does not fit the hypermatrix")
    arr = np.frombuffer(raw, dtype=np.int8).reshape((n,) * d)
    table = positions(n, d, W.side, W.rank)
    weights = combo_weights(n, d, params)
    if params.exact:
        out = np.array([Fraction(0)] * len(table), dtype=object)
    else:
        out = np.zeros(len(table))
    start = 0
    for block in _stack_blocks(arr, n, d):
        hits = match_matrix(block, W, table)
        w = weights[start:start + len(block)]
        if params.exact:
            for jj in range(len(table)):
                col = w[hits[:, jj]]
                if col.size:
                    out[jj] += sum(col, Fraction(0))
        else:
            out += w @ hits
        start += len(block)
    out.setflags(write=False)
    return out


def exact_pattern_prob(X: Hypermatrix, W: Pattern, j: ScatterPosition, params: ChannelParams,
                       cap: int = DEFAULT_ENUMERATION_CAP):
    table = positions(X.n, X.d, W.side, W.rank)
    return pattern_prob_table(X, W, params, cap)[table.index(j)]


# ---------------------------------------------------------------------------
# samples of traces


class TraceBatch:
    """T traces of a common n^d source, grouped by retention pattern.

    Statistics only ever read the trace contents; grouping identical retention
    patterns just avoids re-reading the same trace twice.
    """

    def __init__(self, masks: np.ndarray, group_entries: dict, n: int, d: int):
        self.masks = np.asarray(masks, dtype=bool).reshape(-1, d, n)
        self.n, self.d = n, d
        codes = np.packbits(self.masks.reshape(len(self.masks), -1), axis=1)
        if len(self.masks):
            uniq, inverse, counts = np.unique(codes, axis=0, return_inverse=True, return_counts=True)
        else:
            uniq, inverse, counts = codes, np.zeros(0, dtype=int), np.zeros(0, dtype=int)
        self._counts = counts
        self._inverse = inverse.reshape(-1)
        self._group_arrays = []
        for g in range(len(uniq)):
            first = int(np.flatnonzero(self._inverse == g)[0])
            self._group_arrays.append(group_entries[first])
        self._stacks = {}
        self._freq = {}

    def __len__(self):
        return len(self.masks)

    @classmethod
    def sample(cls, X: Hypermatrix, params: ChannelParams, T: int, seed) -> "TraceBatch":
        rng = make_rng(seed)
        masks = _draw_masks(rng, T, X.d, X.n, params.q)
        return cls.from_masks(X, masks)

    @classmethod
    def from_masks(cls, X: Hypermatrix, masks: np.ndarray) -> "TraceBatch":
        entries = _EntryView(X, masks)
        return cls(masks, entries, X.n, X.d)

    @classmethod
    def from_traces(cls, traces: Sequence[Trace], n: int | None = None, d: int | None = None):
        traces = list(traces)
        if traces:
            n, d = traces[0].n, len(traces[0].shape)
        masks = np.zeros((len(traces), d, n), dtype=bool)
        for t, tr in enumerate(traces):
            for a, ax in enumerate(tr.retained):
                masks[t, a, list(ax)] = True
        return cls(masks, [tr.entries.array for tr in traces], n, d)

    def prefix(self, T: int) -> "TraceBatch":
        """The first T traces, sharing no cached state."""
        sub = [self._group_arrays[g] for g in self._inverse[:T]]
        return TraceBatch(self.masks[:T], sub, self.n, self.d)

    def traces(self) -> list[Trace]:
        out = []
        for t in range(len(self)):
            kept = tuple(tuple(np.flatnonzero(m)) for m in self.masks[t])
            arr = self._group_arrays[self._inverse[t]]
            out.append(Trace(kept, Hypermatrix(arr), self.n))
        return out

    def _stack(self, frame: AxisTransform | None):
        key = frame
        if key not in self._stacks:
            rows = []
            for arr in self._group_arrays:
                if frame is not None:
                    arr = frame.apply_array(arr)
                rows.append(_sentinel_pad(arr, self.n, self.d).reshape(-1))
            self._stacks[key] = np.array(rows, dtype=np.int8).reshape(-1, self.n ** self.d)
        return self._stacks[key]

    def match_frequency(self, W: Pattern, frame: AxisTransform | None = None) -> np.ndarray:
        """Empirical frequency of a W-match at every position, lex order."""
        if frame is not None and frame.is_identity():
            frame = None
        key = (W, frame)
        if key not in self._freq:
            table = positions(self.n, self.d, W.side, W.rank)
            if len(self) == 0:
                freq = np.zeros(len(table))
            else:
                hits = match_matrix(self._stack(frame), W, table)
                freq = (self._counts @ hits) / len(self)
            freq.setflags(write=False)
            self._freq[key] = freq
        return self._freq[key]


class _EntryView:
    """Lazy trace contents indexed by trace number."""

    def __init__(self, X: Hypermatrix, masks: np.ndarray):
        self.X, self.masks = X, masks

    def __getitem__(self, t):
        kept = [np.flatnonzero(m) for m in self.masks[t]]
        return self.X.array[np.ix_(*kept)]


def mc_pattern_prob(X: Hypermatrix, W: Pattern, j: ScatterPosition, params: ChannelParams,
                    T: int, seed) -> tuple[float, float]:
    if T < 1:
        raise ValueError("need at least one trial")
    batch = TraceBatch.sample(X, params, T, seed)
    table = positions(X.n, X.d, W.side, W.rank)
    m = float(batch.match_frequency(W)[table.index(j)])
    return m, math.sqrt(m * (1 - m) / T)


# ---------------------------------------------------------------------------
# TRC v1 text format


def to_trc(t: Trace) -> str:
    lines = ["TRC v1", f"{len(t.retained)} {t.n}"]
    lines += [" ".join(str(i) for i in ax) for ax in t.retained]
    return "\n".join(lines) + "\n" + to_hmx(t.entries)


def parse_trc(text: str) -> Trace:
    lines = text.split("\n")
    if lines[0].strip() != "TRC v1":
        raise ValueError("missing TRC v1 header")
    d, n = (int(x) for x in lines[1].split())
    retained = tuple(tuple(int(x) for x in lines[2 + a].split()) for a in range(d))
    entries = parse_hmx("\n".join(lines[2 + d:]), signed=False)
    return Trace(retained, entries, n)
