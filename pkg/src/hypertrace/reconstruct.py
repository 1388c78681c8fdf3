"""Telling two hypermatrices apart from traces, and exhaustive reconstruction.

A statistic is a pattern W and a position j such that the chance of a
trace showing W at j differs between X and Y.  Which W to use follows
the dimension reduction of X - Y; the position is chosen by the exact
enumeration oracle.  Statistics live in the reduction frame: traces are
re-framed (transposed and flipped) before they are read.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bounds import corollary_bound, disk_extension_search, max_modulus_univariate
from .channel import ChannelParams, TraceBatch, pattern_prob_table
from .config import load_config, make_rng
from .genfun import (abs_monomial_sum, contiguous_coeffs, decontiguize, eval_genfun,
                     GenfunSpec, last_axis_coeffs)
from .hypermatrix import (AxisTransform, ComplexPoint, Hypermatrix, Pattern, ScatterPosition,
                          positions)
from .reduction import classify, construct_witness, reduce_pair


def _odd_clamp(raw: float, n: int) -> int:
    l = math.ceil(raw - 1e-9)
    if l % 2 == 0:
        l += 1
    cap = (n - 1) // 2
    if l > cap:
        l = cap if cap % 2 else cap - 1
    return max(l, 1)


def l_for(n: int, d: int) -> int:
    """Witness side for dimension d: grows like n^{1/5}, n^{1/7}, n^{1/9}, n^{3/5}."""
    if d == 1:
        raw = 2 * n ** (1 / 5)
    elif d == 2:
        raw = 4 * n ** (1 / 7) + 1
    elif d == 3:
        raw = 4 * n ** (1 / 9) + 1
    else:
        raw = 4 * n ** (3 / 5) + 1
    return _odd_clamp(raw, n)


@dataclass(frozen=True)
class Statistic:
    W: Pattern
    j: ScatterPosition          # position in the frame
    frame: AxisTransform | None  # applied to traces before matching; None is the identity
    gap: float
    expected_x: float
    expected_y: float
    r: int
    l: int
    lambdas: tuple = ()
    case: str = ""

    def index(self, n: int, d: int) -> int:
        return positions(n, d, self.W.side, self.W.rank).index(self.j)

    def swapped(self) -> "Statistic":
        return Statistic(self.W, self.j, self.frame, self.gap, self.expected_y, self.expected_x,
                         self.r, self.l, self.lambdas, self.case)

    def to_json(self) -> dict:
        return {
            "W": self.W.entries.tolist(), "r": self.r, "l": self.l,
            "j": {"rows": [list(t) for t in self.j.rows], "points": list(self.j.points)},
            "frame": self.frame.to_json() if self.frame else None,
            "gap": float(self.gap), "expected_x": float(self.expected_x),
            "expected_y": float(self.expected_y), "lambdas": list(self.lambdas), "case": self.case,
        }


def _best_position(Xf, Yf, W, params):
    px = pattern_prob_table(Xf, W, params)
    py = pattern_prob_table(Yf, W, params)
    gaps = np.abs((px - py).astype(float)) if params.exact else np.abs(px - py)
    i = int(np.argmax(gaps))
    return i, px[i], py[i], abs(px[i] - py[i])


def select_statistic(X: Hypermatrix, Y: Hypermatrix, params: ChannelParams, l_rule=l_for) -> Statistic:
    if X.dims != Y.dims:
        raise ValueError("X and Y must share dims")
    if X == Y:
        raise ValueError("X and Y coincide; nothing to distinguish")
    n, d = X.n, X.d
    res = reduce_pair(X, Y)
    l = l_rule(n, d)
    r = classify(res.lambdas, l)
    frame = res.frame(r)
    Xf, Yf = frame.apply(X), frame.apply(Y)
    if r == 0:
        W, case = Pattern.scalar(), "scalar"
    else:
        wit = construct_witness(res.level(X, r), res.level(Y, r), l)
        W, case = wit.W, f"witness-{wit.chosen_from}"
    if frame.is_identity():
        frame = None
    i, ex, ey, gap = _best_position(Xf, Yf, W, params)
    if gap == 0:
        W, frame, case = Pattern.scalar(), None, "fallback"
        i, ex, ey, gap = _best_position(X, Y, W, params)
        if gap == 0:
            raise ArithmeticError("no statistic separates X and Y at oracle precision")
    j = positions(n, d, W.side, W.rank).position(i)
    return Statistic(W, j, frame, gap, ex, ey, r, l, res.lambdas, case)


def pairwise_decide(traces, X: Hypermatrix, Y: Hypermatrix, stat: Statistic) -> Hypermatrix:
    """The hypothesis whose expectation is nearer the empirical frequency; ties go to X."""
    batch = traces if isinstance(traces, TraceBatch) else \
        TraceBatch.from_traces(traces, X.n, X.d)
    if len(batch) == 0:
        freq = 0.0
    else:
        freq = float(batch.match_frequency(stat.W, stat.frame)[stat.index(X.n, X.d)])
    dx = abs(freq - float(stat.expected_x))
    dy = abs(freq - float(stat.expected_y))
    return X if dx <= dy else Y


def hoeffding_budget(gap: float, n: int, d: int, delta: float) -> int:
    """ceil(2 ln(2 * 2^{n^d} / delta) / gap^2), with 2^{n^d} kept in log form."""
    if gap <= 0:
        raise ValueError("gap must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    log_term = n ** d * math.log(2) + math.log(2 / delta)
    return math.ceil(2 * log_term / float(gap) ** 2 - 1e-12)


class StatisticCache:
    """Statistics per unordered pair, computed once."""

    def __init__(self, params: ChannelParams, l_rule=l_for):
        self.params, self.l_rule = params, l_rule
        self._store = {}

    def get(self, X: Hypermatrix, Y: Hypermatrix) -> Statistic:
        kx, ky = X.key(), Y.key()
        if (kx, ky) in self._store:
            return self._store[(kx, ky)]
        if (ky, kx) in self._store:
            return self._store[(ky, kx)].swapped()
        stat = select_statistic(X, Y, self.params, self.l_rule)
        self._store[(kx, ky)] = stat
        return stat

    def __len__(self):
        return len(self._store)


def all_candidates(n: int, d: int, cap: int | None = None) -> list:
    cap = cap or load_config()["caps"]["candidates"]
    count = 2 ** (n ** d)
    if count > cap:
        raise MemoryError(f"{count} candidates exceed the cap {cap}")
    return [Hypermatrix.from_index(i, n, d) for i in range(count)]


def reconstruct_exhaustive(traces, n: int, d: int, params: ChannelParams, candidates=None,
                           cache: StatisticCache | None = None) -> Hypermatrix:
    """Single-elimination bracket over the candidates in their given order."""
    pool = list(candidates) if candidates is not None else all_candidates(n, d)
    if not pool:
        raise ValueError("no candidates")
    batch = traces if isinstance(traces, TraceBatch) else TraceBatch.from_traces(traces, n, d)
    cache = cache if cache is not None else StatisticCache(params)
    while len(pool) > 1:
        nxt = []
        for a in range(0, len(pool) - 1, 2):
            X, Y = pool[a], pool[a + 1]
            nxt.append(X if X == Y else pairwise_decide(batch, X, Y, cache.get(X, Y)))
        if len(pool) % 2:
            nxt.append(pool[-1])
        pool = nxt
    return pool[0]


@dataclass
class ExperimentReport:
    n: int
    d: int
    q: float
    trials: int
    schedule: list
    success: list               # raw rate per T
    successes: list             # raw counts per T
    minimal_T: int | None
    target: float
    seed: object
    wall_clock: float
    rows: list = field(default_factory=list)   # (T, trial, truth index, correct)

    def stderr(self) -> list:
        return [math.sqrt(max(s * (1 - s), 0) / self.trials) for s in self.success]

    def monotone_within(self, sigmas: float = 3.0) -> bool:
        """No later rate drops below an earlier one by more than ``sigmas`` joint standard errors."""
        se = self.stderr()
        for a in range(len(self.success)):
            for b in range(a + 1, len(self.success)):
                slack = sigmas * math.hypot(se[a], se[b])
                if self.success[b] < self.success[a] - slack - 1e-12:
                    return False
        return True

    def to_json(self) -> dict:
        return {"n": self.n, "d": self.d, "q": float(self.q), "trials": self.trials,
                "schedule": self.schedule, "success": self.success, "successes": self.successes,
                "minimal_T": self.minimal_T, "target": self.target, "seed": self.seed,
                "wall_clock": self.wall_clock}


def doubling_schedule(start: int, stop: int) -> list:
    out, T = [], max(1, start)
    while T <= stop:
        out.append(T)
        T *= 2
    return out


def trace_complexity_experiment(n: int, d: int, params: ChannelParams, target: float, trials: int,
                                seed, schedule=None, truths="random", stop_at_target: bool = False,
                                cache: StatisticCache | None = None) -> ExperimentReport:
    """Success rate of exhaustive reconstruction along a doubling schedule of T.

    Trial i draws one long batch of traces from stream (seed, i); every T
    uses its first T traces, so the rates are coupled across T.  With
    ``truths="all"`` trial i reconstructs candidate i mod 2^{n^d}.
    """
    cfg = load_config()["experiment"]
    schedule = list(schedule or doubling_schedule(cfg["schedule_start"], cfg["schedule_stop"]))
    cands = all_candidates(n, d)
    cache = cache if cache is not None else StatisticCache(params)
    started = time.perf_counter()
    truth_rng = make_rng((_seed_int(seed), 0x7275746873))
    if truths == "all":
        idx = [i % len(cands) for i in range(trials)]
    else:
        idx = [int(x) for x in truth_rng.integers(0, len(cands), trials)]
    batches = [TraceBatch.sample(cands[k], params, max(schedule), (_seed_int(seed), i))
               for i, k in enumerate(idx)]
    success, successes, rows = [], [], []
    minimal = None
    for T in schedule:
        ok = 0
        for i, k in enumerate(idx):
            got = reconstruct_exhaustive(batches[i].prefix(T), n, d, params, cands, cache)
            hit = got == cands[k]
            ok += hit
            rows.append((T, i, k, int(hit)))
        rate = ok / trials
        success.append(rate)
        successes.append(ok)
        if minimal is None and rate >= target:
            minimal = T
            if stop_at_target:
                schedule = schedule[:len(success)]
                break
    return ExperimentReport(n, d, float(params.q), trials, schedule, success, successes, minimal,
                            target, seed, time.perf_counter() - started, rows)


def _seed_int(seed) -> int:
    if isinstance(seed, (tuple, list)):
        return int(np.random.SeedSequence(list(seed)).generate_state(1, np.uint64)[0])
    return int(seed) & 0xFFFFFFFFFFFFFFFF


# ---------------------------------------------------------------------------
# certificate: the polynomial side of the same separation


@dataclass
class PairCertificate:
    point: ComplexPoint
    g_value: float
    mass: float
    bound: float           # p^{rl+d-r} |g(z)| / sum_j |w-monomial|, a floor on the best gap
    gap: float

    @property
    def holds(self) -> bool:
        return self.gap >= self.bound * (1 - 1e-9)


def certify_pair(X: Hypermatrix, Y: Hypermatrix, params: ChannelParams, W: Pattern | None = None,
                 l_rule=l_for) -> PairCertificate:
    """Construct a point where the W-generating function of X - Y is large, axis by axis.

    Works in the reduction frame of the witness level.  Scattered axes get
    their leading variables from the contiguous function and the rest by
    de-contiguisation; scalar axes are filled in reduction order by a disk
    search in w.  The identity then forces some position to separate X and Y
    by at least the returned bound; ``gap`` is the best separation in the
    same frame, found by the oracle.
    """
    n, d = X.n, X.d
    p, q = float(params.p), float(params.q)
    res = reduce_pair(X, Y)
    if W is None:
        r = classify(res.lambdas, l_rule(n, d))
        W = construct_witness(res.level(X, r), res.level(Y, r), l_rule(n, d)).W if r else \
            Pattern.scalar()
    r = W.rank
    rows = ()
    if r:
        Xr, Yr = res.level(X, r), res.level(Y, r)
        h = contiguous_coeffs(Xr, W, Yr)
        if r == 1:
            bw = max_modulus_univariate(h, 0, 1, 1.0)
        else:
            bw = corollary_bound(h, 1, C=0.0)
        rows = decontiguize(Xr, Yr, W, bw.point, p).point.rows
    points = []
    for i in range(r + 1, d + 1):
        Xi, Yi = res.level(X, i, r), res.level(Y, i, r)
        c = last_axis_coeffs(Xi, Yi, W, ComplexPoint(rows, tuple(points)))
        w, _ = disk_extension_search(lambda z, c=c: np.polynomial.polynomial.polyval(z, c), p, q)
        points.append(p * w + q)
    z = ComplexPoint(rows, tuple(points))
    frame = res.frame(r)
    Xf, Yf = frame.apply(X), frame.apply(Y)
    g = abs(complex(eval_genfun(GenfunSpec(Xf, W, Yf), z)))
    w = z.map(lambda v: (v - q) / p)
    mass = abs_monomial_sum(n, d, W.side, r, w)
    bound = p ** (r * W.side + d - r) * g / mass
    gap = float(_best_position(Xf, Yf, W, params)[3])
    return PairCertificate(z, g, mass, bound, gap)
