"""Dimension reduction of a signed hypermatrix and witness patterns with certificates.

Each step measures the thinnest all-zero margin over every axis and side,
turns the hypermatrix so that margin sits below the last axis, and keeps
the first nonzero slice there.  The margins are the lambdas; the recorded
transforms let statistics be computed in the same frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .genfun import contiguous_coeffs, eval_poly
from .hypermatrix import (AxisTransform, Hypermatrix, Pattern, ShapeError, SignedHypermatrix,
                          diff, extract_block, find_period, sparsity_index, to_hmx)


@dataclass(frozen=True)
class ReductionResult:
    chain: tuple            # A^d, A^{d-1}, ..., A^0 in the frames they were sliced in
    lambdas: tuple          # (lambda_1, ..., lambda_d)
    transforms: tuple       # per step, d-dim first; each acts on the i axes of A^i
    slice_indices: tuple    # per step, the index kept on the last axis

    @property
    def d(self) -> int:
        return len(self.lambdas)

    def A(self, i: int) -> SignedHypermatrix:
        return self.chain[self.d - i]

    def transform(self, i: int) -> AxisTransform:
        """The transform applied to A^i before slicing it."""
        return self.transforms[self.d - i]

    def frame(self, r: int) -> AxisTransform:
        """Composite d-dim transform after which A^r is the slice fixing the last d - r axes."""
        f = AxisTransform.identity(self.d)
        for i in range(self.d, r, -1):
            f = f.then(self.transform(i).extend(self.d))
        return f

    def level(self, H, i: int, frame_level: int | None = None):
        """Carry a d-dim hypermatrix of the pair to level i.

        The frame is that of level ``frame_level`` (default i); any
        frame_level <= i keeps the slices consistent, since later transforms
        only move the leading axes.
        """
        arr = self.frame(i if frame_level is None else frame_level).apply_array(H.array)
        fixed = tuple(self.lambdas[k - 1] for k in range(i + 1, self.d + 1))
        return type(H)(np.array(arr[(Ellipsis,) + fixed]) if fixed else arr.copy())

    def to_json(self) -> dict:
        return {
            "lambdas": list(self.lambdas),
            "transforms": [t.to_json() for t in self.transforms],
            "slice_indices": list(self.slice_indices),
        }


def margins(arr: np.ndarray):
    """(low, high) zero-margin thickness per axis of a nonzero array."""
    pts = np.argwhere(arr != 0)
    n = arr.shape[0]
    return [(int(pts[:, a].min()), int(n - 1 - pts[:, a].max())) for a in range(arr.ndim)]


def reduce(A: SignedHypermatrix) -> ReductionResult:
    if A.is_zero():
        raise ValueError("cannot reduce the zero hypermatrix")
    cur = A.array
    chain = [A]
    lambdas = {}
    transforms, slices = [], []
    for i in range(A.d, 0, -1):
        m = margins(cur)
        lam = min(min(lo, hi) for lo, hi in m)
        # lowest axis first, low side before high side
        axis, high = next((a, side) for a in range(i) for side in (0, 1) if m[a][side] == lam)
        perm = tuple(a for a in range(i) if a != axis) + (axis,)
        t = AxisTransform(perm, (False,) * (i - 1) + (bool(high),))
        cur = np.array(t.apply_array(cur)[..., lam])
        chain.append(SignedHypermatrix(cur))
        lambdas[i] = lam
        transforms.append(t)
        slices.append(lam)
    return ReductionResult(tuple(chain), tuple(lambdas[i] for i in range(1, A.d + 1)),
                           tuple(transforms), tuple(slices))


def reduce_pair(X: Hypermatrix, Y: Hypermatrix) -> ReductionResult:
    return reduce(diff(X, Y))


def classify(lambdas, l: int) -> int:
    """Largest r with lambda_r >= l, or 0 when lambda_1 < l."""
    r = 0
    for i, lam in enumerate(lambdas, start=1):
        if lam >= l:
            r = i
    return r


def find_tangent_point(H):
    """Point of H minimising the coordinate sum, ties to the lexicographically smallest."""
    H = [tuple(int(c) for c in k) for k in H]
    if not H:
        raise ValueError("empty position set")
    j = min(H, key=lambda k: (sum(k), k))
    return j, (1,) * len(j)


class WitnessError(RuntimeError):
    """A witness could not be certified; carries a reproducer."""

    def __init__(self, message: str, Xr=None, Yr=None, l=None):
        self.repro = {"l": l,
                      "X": to_hmx(Xr) if Xr is not None else None,
                      "Y": to_hmx(Yr) if Yr is not None else None}
        super().__init__(f"{message}\nrepro: {self.repro}")


@dataclass(frozen=True)
class Witness:
    W: Pattern
    center: tuple
    s: int
    direction: tuple
    chosen_from: str
    certificate: dict = field(default_factory=dict)

    @property
    def corner(self) -> tuple:
        half = (self.W.side - 1) // 2
        return tuple(c - half for c in self.center)


def certify(Xr: Hypermatrix, Yr: Hypermatrix, W: Pattern, s: int) -> dict:
    h = contiguous_coeffs(Xr, W, Yr)
    nonzero = bool(h.any())
    return {
        "aperiodic": find_period(W, s) is None,
        "h_nonzero": nonzero,
        "sparsity": sparsity_index(h) if nonzero else 0,
        "s": s,
        "sparse": nonzero and sparsity_index(h) >= s,
    }


def construct_witness(Xr: Hypermatrix, Yr: Hypermatrix, l: int) -> Witness:
    if l < 1 or l % 2 == 0:
        raise ValueError(f"witness side must be odd, got {l}")
    if Xr.dims != Yr.dims:
        raise ShapeError("X and Y must share dims")
    A = diff(Xr, Yr)
    if A.is_zero():
        raise ValueError("X and Y coincide; no witness exists")
    j, direction = find_tangent_point(A.support())
    half = (l - 1) // 2
    corner = tuple(c - half for c in j)
    s = (l - 1) // 4
    try:
        blocks = {"X": extract_block(Xr, corner, l), "Y": extract_block(Yr, corner, l)}
    except IndexError as exc:
        raise WitnessError(f"centered block at {j} leaves the hypermatrix", Xr, Yr, l) from exc
    for name in ("X", "Y"):
        W = blocks[name]
        if find_period(W, s) is None:
            cert = certify(Xr, Yr, W, s)
            if not (cert["h_nonzero"] and cert["sparse"]):
                raise WitnessError(f"certificate failed: {cert}", Xr, Yr, l)
            return Witness(W, j, s, direction, name, cert)
    raise WitnessError(f"both centered blocks are {s}-periodic", Xr, Yr, l)


def genfun_recursion_check(result: ReductionResult, samples) -> float:
    """Max |[z_{i+1}^{lambda}] g_{i+1} - g_i| over the chain and sample points.

    The coefficient of z_{i+1}^{lambda_{i+1}} is extracted by a discrete
    Fourier sum over the n-th roots of unity, so the check never looks at
    how the slice was cut out of the array.
    """
    samples = np.asarray(samples, dtype=complex)
    worst = 0.0
    for i in range(result.d - 1, -1, -1):
        upper = result.transform(i + 1).apply_array(result.A(i + 1).array)
        n = upper.shape[-1]
        lam = result.lambdas[i]
        lower = result.A(i).array
        roots = np.exp(2j * math.pi * np.arange(n) / n)
        for z in samples:
            zz = z[:i]
            acc = 0j
            for m, w in enumerate(roots):
                acc += eval_poly(upper, tuple(zz) + (w,)) * w ** (-lam)
            coeff = acc / n
            low = eval_poly(lower, tuple(zz)) if i else complex(lower.item())
            worst = max(worst, abs(coeff - low))
    return worst
