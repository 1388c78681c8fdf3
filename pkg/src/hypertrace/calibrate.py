"""Pilot runs that fix the constants C in the exp(-C * scale) floors.

Every pilot uses its own seed stream, disjoint from the streams used by the
acceptance suites.  A constant is the worst ratio seen on the pilot times a
safety factor, clamped at zero; the pilot's inputs are stored next to it.
"""

from __future__ import annotations

import argparse
import json
import math
from fractions import Fraction
from datetime import date
from pathlib import Path

import numpy as np

from .bounds import (corollary_bound, disk_extension_search, littlewood_bound, multivariate_bound)
from .channel import ChannelParams
from .config import make_rng
from .exact import GaussianRational
from .genfun import decontiguize, eval_contiguous, ContiguousGenfunSpec
from .hypermatrix import Hypermatrix, Pattern
from .reconstruct import trace_complexity_experiment

PILOT_SEED = 0x5EED_0001
SAFETY = 1.5
T_SAFETY = 4


def random_sign_poly(rng, m: int) -> np.ndarray:
    return rng.choice(np.array([-1, 1], dtype=np.int8), m + 1)


def sparse_signed_array(rng, n: int, d: int, s: int, k: int, max_tries: int = 20000) -> np.ndarray:
    """Up to k random signed entries, equal signs at Chebyshev distance >= s."""
    a = np.zeros((n,) * d, dtype=np.int8)
    placed = {1: [], -1: []}
    tries = 0
    while sum(map(len, placed.values())) < k and tries < max_tries:
        tries += 1
        pt = rng.integers(0, n, d)
        sg = int(rng.choice([-1, 1]))
        if a[tuple(pt)]:
            continue
        if all(np.max(np.abs(pt - o)) >= s for o in placed[sg]):
            placed[sg].append(pt)
            a[tuple(pt)] = sg
    if not a.any():
        a[tuple(rng.integers(0, n, d))] = 1
    return a


def random_unit(rng) -> GaussianRational:
    """A rational point of the unit circle with a small-height parameter."""
    return GaussianRational.unit_circle(Fraction(int(rng.integers(-40, 41)), 17))


def _fit(ratios, safety=SAFETY) -> float:
    worst = max(ratios)
    return max(worst * safety, 0.0)


def pilot_littlewood(seed=PILOT_SEED, per_degree: int = 30, p: float = 0.5):
    rng = make_rng((seed, 1))
    ratios = []
    for m in (64, 256, 1024):
        for _ in range(per_degree):
            bw = littlewood_bound(random_sign_poly(rng, m), p, C=0.0)
            ratios.append(-math.log(bw.value) / m ** (1 / 3))
    return ratios, {"degrees": [64, 256, 1024], "per_degree": per_degree, "p": p}


def pilot_disk(seed=PILOT_SEED, count: int = 30, p: float = 0.5):
    rng = make_rng((seed, 2))
    ratios = []
    for _ in range(count):
        m = int(rng.integers(8, 513))
        c = random_sign_poly(rng, m).astype(float)
        _, val = disk_extension_search(lambda z, c=c: np.polynomial.polynomial.polyval(z, c), p)
        ratios.append(-math.log(val) / m ** (1 / 3))
    return ratios, {"degrees": "uniform 8..512", "count": count, "p": p}


def pilot_multivariate(seed=PILOT_SEED, per_case: int = 15, mu: float = 0.6):
    rng = make_rng((seed, 3))
    ratios = []
    for d in (2, 3):
        for n in (32, 64):
            s = math.ceil(n ** mu - 1e-9)
            L = math.ceil(n ** 0.2 - 1e-9)
            for _ in range(per_case):
                a = sparse_signed_array(rng, n, d, s, int(rng.integers(1, 80)))
                bw = multivariate_bound(a, mu, L, 1, C=0.0)
                ratios.append(-math.log(bw.value) / (L * n ** (1 - mu) * math.log(n)))
    return ratios, {"d": [2, 3], "n": [32, 64], "mu": mu, "per_case": per_case, "Delta": 1}


def pilot_corollary(seed=PILOT_SEED, count: int = 10):
    rng = make_rng((seed, 4))
    ratios = []
    for _ in range(count):
        n = int(rng.integers(4, 17))
        a = rng.choice(np.array([-1, 0, 1], dtype=np.int8), (n, n))
        if not a.any():
            continue
        L = int(rng.integers(1, 5))
        bw = corollary_bound(a, L, C=0.0)
        ratios.append(-math.log(bw.value) / (L * n * math.log(n)))
    return ratios, {"d": 2, "n": "uniform 4..16", "L": "uniform 1..4", "count": count}


def decontiguize_instance(rng, n: int = 8, l: int = 3):
    """Random pair whose contiguous function is nonzero at a random rational unit point."""
    while True:
        X = Hypermatrix.random(n, 2, rng)
        Y = Hypermatrix.random(n, 2, rng)
        corner = rng.integers(0, n - l + 1, 2)
        W = Pattern(X.array[corner[0]:corner[0] + l, corner[1]:corner[1] + l].copy())
        z0 = (random_unit(rng), random_unit(rng))
        h = eval_contiguous(ContiguousGenfunSpec(X, W, Y), z0)
        if h != 0:
            return X, Y, W, z0


def pilot_decontiguize(seed=PILOT_SEED, count: int = 30, ps=(0.3, 0.5, 0.7), c1: float = 1.0):
    """Fit c2 in  log|g| >= (c1/2p) log|h| - c2/2p + r (1 - c1/2p) log C(n, l)  per step."""
    rng = make_rng((seed, 5))
    ratios = []
    n, l, r = 8, 3, 2
    logbin = math.log(math.comb(n, l))
    for p in ps:
        for _ in range(count):
            X, Y, W, z0 = decontiguize_instance(rng, n, l)
            res = decontiguize(X, Y, W, z0, p)
            a = c1 / (2 * p)
            for st in res.steps:
                need = a * math.log(st.start) + r * (1 - a) * logbin - math.log(st.value)
                ratios.append(2 * p * need)
    return ratios, {"n": n, "l": l, "r": r, "p": list(ps), "count_per_p": count, "c1": c1}


def pilot_reconstruction(seed=PILOT_SEED):
    out = {}
    for name, n, q, target, trials in (("n2_d2_q0.3", 2, 0.3, 0.99, 200),
                                       ("n3_d2_q0.5", 3, 0.5, 0.95, 256)):
        rep = trace_complexity_experiment(n, 2, ChannelParams(q), target, trials, (seed, 6, n),
                                          schedule=[2 ** k for k in range(0, 15)],
                                          truths="all", stop_at_target=True)
        if rep.minimal_T is None:
            raise RuntimeError(f"pilot {name} never reached the target")
        out[name] = {"value": rep.minimal_T * T_SAFETY, "pilot_minimal_T": rep.minimal_T,
                     "safety": T_SAFETY, "n": n, "d": 2, "q": q, "target": target,
                     "trials": trials, "success": rep.success, "schedule": rep.schedule,
                     "seed": [seed, 6, n]}
    return out


PILOTS = {
    "littlewood": pilot_littlewood,
    "disk": pilot_disk,
    "multivariate": pilot_multivariate,
    "corollary": pilot_corollary,
    "decontiguize_c2": pilot_decontiguize,
}


def run(seed=PILOT_SEED, only=None) -> dict:
    calib = {"provenance": {"seed": seed, "date": date.today().isoformat(),
                            "note": "empirical constants from pilot runs; not theoretical values"},
             "constants": {}}
    for name, fn in PILOTS.items():
        if only and name not in only:
            continue
        ratios, meta = fn(seed)
        calib["constants"][name] = {"value": _fit(ratios), "worst_ratio": max(ratios),
                                    "median_ratio": float(np.median(ratios)), "safety": SAFETY,
                                    "pilot": {**meta, "samples": len(ratios)}}
    calib["constants"]["decontiguize_c1"] = {"value": 1.0, "pilot": {"fixed": True}}
    if not only or "reconstruction" in only:
        calib["reconstruction"] = pilot_reconstruction(seed)
    return calib


def main(argv=None):
    ap = argparse.ArgumentParser(description="Run the pilot suites and write calib.json.")
    ap.add_argument("--out", type=Path,
                    default=Path(__file__).resolve().parent / "data" / "calib.json")
    ap.add_argument("--seed", type=int, default=PILOT_SEED)
    ap.add_argument("--only", nargs="*")
    args = ap.parse_args(argv)
    calib = run(args.seed, args.only)
    args.out.write_text(json.dumps(calib, indent=2) + "\n")
    print(json.dumps({k: v.get("value") for k, v in calib["constants"].items()}, indent=2))


if __name__ == "__main__":
    main()
