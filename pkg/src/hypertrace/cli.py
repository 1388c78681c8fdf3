"""Command line entry point.

Every command writes a JSON manifest (inputs, versions, seeds, output files)
and at least one CSV table into ``--out``; the main result is also printed
to stdout as JSON.  Commands that draw random numbers refuse to run without
``--seed`` unless ``--entropy`` is given, in which case the drawn seed is
recorded in the manifest.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import platform
import secrets
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import corollary_bound, littlewood_bound, multivariate_bound
from .calibrate import random_sign_poly, random_unit, sparse_signed_array
from .channel import ChannelParams, TraceBatch, parse_trc, to_trc
from .config import load_calibration, load_config, make_rng, use_config
from .exact import GaussianRational
from .genfun import verify_identity
from .hypermatrix import (ComplexPoint, Hypermatrix, Pattern, SignedHypermatrix, parse_hmx,
                          to_hmx)
from .reconstruct import (all_candidates, doubling_schedule, l_for, reconstruct_exhaustive,
                          trace_complexity_experiment)
from .reduction import WitnessError, classify, construct_witness, reduce_pair


class SeedRequired(SystemExit):
    pass


class Run:
    """Output directory, seed handling and the manifest of one invocation."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.seed = args.seed
        self._rng = None
        self.started = time.perf_counter()

    def rng(self):
        if self._rng is None:
            if self.seed is None:
                if not self.args.entropy:
                    raise SeedRequired(f"{self.args.command}: pass --seed N (or --entropy to draw one)")
                self.seed = secrets.randbits(63)
            self._rng = make_rng(self.seed)
        return self._rng

    def path(self, name: str) -> Path:
        p = self.out / name
        self.files.append(name)
        return p

    def write_csv(self, name: str, header, rows):
        with self.path(name).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)

    def write_text(self, name: str, text: str):
        self.path(name).write_text(text)

    def finish(self, result: dict) -> dict:
        calib = {}
        try:
            calib = load_calibration().get("provenance", {})
        except FileNotFoundError:
            pass
        manifest = {
            "command": self.args.command,
            "argv": self.argv,
            "inputs": {k: _plain(v) for k, v in vars(self.args).items() if k != "func"},
            "seed": self.seed,
            "versions": _versions(),
            "calibration": calib,
            "outputs": self.files + ["manifest.json"],
            "wall_clock": time.perf_counter() - self.started,
            "result": result,
        }
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_plain) + "\n")
        return manifest


def _versions() -> dict:
    import matplotlib
    return {"hypertrace": __version__, "numpy": np.__version__,
            "matplotlib": matplotlib.__version__, "python": platform.python_version()}


def _plain(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (complex, GaussianRational)):
        v = complex(v)
        return [v.real, v.imag]
    if isinstance(v, Fraction):
        return float(v)
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def _cplx(v) -> list:
    v = complex(v)
    return [v.real, v.imag]


def _read_hmx(path, signed=None):
    return parse_hmx(Path(path).read_text(), signed=signed)


def _params(args, exact=False) -> ChannelParams:
    q = args.q if args.q is not None else load_config()["q"]
    if exact:
        q = Fraction(str(q)).limit_denominator(10 ** 6)
    return ChannelParams(q)


def _pair(run, args):
    """X, Y from files, or uniformly random distinct hypermatrices."""
    if args.x:
        X = _read_hmx(args.x, signed=False)
        Y = _read_hmx(args.y, signed=False) if args.y else None
        if Y is None:
            raise SystemExit("--x needs --y")
        return X, Y
    rng = run.rng()
    X = Hypermatrix.random(args.n, args.d, rng)
    while True:
        Y = Hypermatrix.random(args.n, args.d, rng)
        if Y != X:
            return X, Y


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(run, args) -> dict:
    X = _read_hmx(args.x, signed=False) if args.x else Hypermatrix.random(args.n, args.d, run.rng())
    params = _params(args)
    run.rng()
    batch = TraceBatch.sample(X, params, args.T, (run.seed, 1))
    tdir = run.out / "traces"
    tdir.mkdir(exist_ok=True)
    rows = []
    for k, t in enumerate(batch.traces()):
        name = f"traces/trace_{k:05d}.trc"
        run.write_text(name, to_trc(t))
        rows.append([k, *[len(ax) for ax in t.retained]])
    run.write_text("truth.hmx", to_hmx(X))
    run.write_csv("traces.csv", ["trace"] + [f"kept_axis{a}" for a in range(X.d)], rows)
    kept = np.array([r[1:] for r in rows], dtype=float)
    return {"n": X.n, "d": X.d, "q": float(params.q), "T": args.T,
            "mean_kept_per_axis": kept.mean(axis=0).tolist() if len(rows) else []}


def pattern_from(X: Hypermatrix, rng, l: int, r: int) -> Pattern:
    """W read off X at random increasing l-tuples on the first r axes, the rest fixed.

    Drawing W from X keeps the identity check away from the trivial 0 = 0.
    """
    idx = [np.sort(rng.choice(X.n, l, replace=False)) for _ in range(r)]
    fixed = tuple(int(v) for v in rng.integers(0, X.n, X.d - r))
    block = X.array[np.ix_(*idx)] if r else X.array
    return Pattern(np.array(block[(Ellipsis,) + fixed]))


def _torus_point(rng, n, d, l, r, exact):
    draw = (lambda: random_unit(rng)) if exact else \
        (lambda: complex(np.exp(1j * rng.uniform(-np.pi, np.pi))))
    rows = tuple(tuple(draw() for _ in range(l)) for _ in range(r))
    return ComplexPoint(rows, tuple(draw() for _ in range(d - r)))


def cmd_identity_check(run, args) -> dict:
    rng = run.rng()
    params = _params(args, exact=args.exact)
    X, Y = _pair(run, args)
    n, d = X.n, X.d
    W = pattern_from(X, rng, args.l, args.r)
    records, rows = [], []
    for k in range(args.points):
        z = _torus_point(rng, n, d, args.l, args.r, args.exact)
        res = float(verify_identity(X, Y, W, z, params))
        zs = [[_cplx(v) for v in row] for row in z.rows] + [_cplx(v) for v in z.points]
        records.append({"n": n, "d": d, "r": args.r, "l": args.l, "q": float(params.q),
                        "z": zs, "residual": res})
        rows.append([k, n, d, args.r, args.l, float(params.q), res])
    run.write_csv("identity.csv", ["point", "n", "d", "r", "l", "q", "residual"], rows)
    run.write_text("W.hmx", to_hmx(W))
    return {"records": records, "max_residual": max(r["residual"] for r in records)}


def cmd_reduce(run, args) -> dict:
    X, Y = _pair(run, args)
    res = reduce_pair(X, Y)
    l = args.l or l_for(X.n, X.d)
    r = classify(res.lambdas, l)
    chain = [to_hmx(res.A(i)) for i in range(res.d, -1, -1)]
    run.write_csv("lambdas.csv", ["i", "lambda", "slice_index"],
                  [[i + 1, lam, res.slice_indices[res.d - 1 - i]] for i, lam in enumerate(res.lambdas)])
    return {**res.to_json(), "l": l, "r": r, "chain": chain,
            "X": to_hmx(X), "Y": to_hmx(Y)}


def cmd_witness(run, args) -> dict:
    X, Y = _pair(run, args)
    res = reduce_pair(X, Y)
    l = args.l or l_for(X.n, X.d)
    r = classify(res.lambdas, l)
    out = {**res.to_json(), "l": l, "r": r, "X": to_hmx(X), "Y": to_hmx(Y)}
    if r == 0:
        out.update({"W": to_hmx(Pattern.scalar()), "case": "scalar", "certificate": {}})
    else:
        try:
            wit = construct_witness(res.level(X, r), res.level(Y, r), l)
        except WitnessError as exc:
            out.update({"W": None, "error": str(exc).split("\n")[0], "repro": exc.repro})
            return out
        out.update({"W": to_hmx(wit.W), "case": wit.chosen_from, "center": list(wit.center),
                    "s": wit.s, "direction": list(wit.direction),
                    "certificate": {k: bool(v) if isinstance(v, (bool, np.bool_)) else _plain(v)
                                    for k, v in wit.certificate.items()}})
    cert = out["certificate"]
    run.write_csv("witness.csv", ["r", "l", "case", *cert.keys()],
                  [[r, l, out["case"], *cert.values()]])
    return out


def cmd_bound(run, args) -> dict:
    if args.kind == "littlewood":
        if args.coeffs:
            c = np.array([int(x) for x in Path(args.coeffs).read_text().split()])
        else:
            c = random_sign_poly(run.rng(), args.m)
        bw = littlewood_bound(c, float(_params(args).p))
        from .plotting import arc_profile
        t = math.atan2(complex(bw.point[0]).imag, complex(bw.point[0]).real) / math.pi
        arc_profile(np.arange(len(c)), c, bw.info.get("rho", 1.0), bw.info.get("L", 1), t,
                    run.path("arc_profile.png"))
        scale = {"m": len(c) - 1}
    else:
        if args.coeffs:
            c = _read_hmx(args.coeffs, signed=True).array
        elif args.kind == "multivariate":
            s = math.ceil(args.n ** args.mu - 1e-9)
            c = sparse_signed_array(run.rng(), args.n, args.d, s, args.k)
        else:
            c = run.rng().choice(np.array([-1, 0, 1], dtype=np.int8), (args.n,) * args.d)
            if not c.any():
                c.flat[0] = 1
        n = c.shape[0]
        L = args.L or 1
        if args.kind == "multivariate":
            L = args.L or math.ceil(n ** 0.2 - 1e-9)
            bw = multivariate_bound(c, args.mu, L, args.Delta)
        else:
            bw = corollary_bound(c, L)
        run.write_text("coeffs.hmx", to_hmx(SignedHypermatrix(c)))
        scale = {"n": n, "d": c.ndim}
    rec = {"kind": args.kind, **scale, **bw.to_json(), "meets_floor": bw.meets_floor()}
    run.write_csv("bound.csv", ["kind", "value", "floor", "C", "meets_floor"],
                  [[args.kind, bw.value, bw.budget, bw.calib, bw.meets_floor()]])
    return rec


def _default_T(n, d, q):
    rec = load_calibration().get("reconstruction", {}).get(f"n{n}_d{d}_q{q:g}")
    return rec["value"] if rec else None


def cmd_reconstruct(run, args) -> dict:
    params = _params(args)
    if args.traces:
        traces = [parse_trc(p.read_text()) for p in sorted(Path(args.traces).glob("*.trc"))]
        if not traces:
            raise SystemExit(f"no .trc files in {args.traces}")
        n, d = traces[0].n, len(traces[0].retained)
        truth = _read_hmx(args.x, signed=False) if args.x else None
        batch = TraceBatch.from_traces(traces, n, d)
    else:
        truth = _read_hmx(args.x, signed=False) if args.x else \
            Hypermatrix.random(args.n, args.d, run.rng())
        n, d = truth.n, truth.d
        T = args.T or _default_T(n, d, float(params.q))
        if T is None:
            raise SystemExit("no calibrated T for these parameters; pass -T")
        batch = TraceBatch.sample(truth, params, T, (run.seed, 1))
    est = reconstruct_exhaustive(batch, n, d, params, all_candidates(n, d))
    correct = None if truth is None else bool(est == truth)
    run.write_text("estimate.hmx", to_hmx(est))
    run.write_csv("reconstruct.csv", ["n", "d", "q", "T", "correct"],
                  [[n, d, float(params.q), len(batch), correct]])
    return {"n": n, "d": d, "q": float(params.q), "T": len(batch), "estimate": to_hmx(est),
            "truth": to_hmx(truth) if truth is not None else None, "correct": correct}


def cmd_experiment(run, args) -> dict:
    from .plotting import success_curve
    params = _params(args)
    run.rng()           # enforce the seed policy before the long run
    schedule = doubling_schedule(args.schedule_start, args.schedule_stop)
    rep = trace_complexity_experiment(args.n, args.d, params, args.target, args.trials,
                                      run.seed, schedule, truths=args.truths)
    run.write_csv("trials.csv", ["T", "trial", "truth_index", "correct"], rep.rows)
    se = rep.stderr()
    run.write_csv("success.csv", ["T", "successes", "trials", "rate", "stderr"],
                  [[T, k, rep.trials, s, e] for T, k, s, e in
                   zip(rep.schedule, rep.successes, rep.success, se)])
    success_curve(rep, run.path("success.png"))
    return {**rep.to_json(), "monotone_within_3sigma": rep.monotone_within(3.0)}


# ---------------------------------------------------------------------------
# parser


def _pair_args(sp, n=3, d=2):
    sp.add_argument("--x", type=Path, help="HMX file for X")
    sp.add_argument("--y", type=Path, help="HMX file for Y")
    sp.add_argument("--n", type=int, default=n)
    sp.add_argument("--d", type=int, default=d)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q", type=float, help="deletion probability (default from config)")
    common.add_argument("--seed", type=int, help="master seed for every random draw")
    common.add_argument("--entropy", action="store_true",
                        help="draw a fresh seed from the OS when --seed is absent")
    common.add_argument("--config", type=Path, help="JSON file overriding packaged defaults")
    common.add_argument("--out", type=Path, default=Path("hypertrace-out"),
                        help="directory for manifest, CSV and figures")

    ap = argparse.ArgumentParser(prog="hypertrace", parents=[common],
                                 description="Trace reconstruction tools for binary hypermatrices.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", parents=[common], help="sample traces of a hypermatrix")
    sp.add_argument("--x", type=Path)
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("-T", type=int, default=10)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("identity-check", parents=[common],
                        help="compare both sides of the generating-function identity")
    _pair_args(sp, n=4)
    sp.add_argument("--r", type=int, default=2)
    sp.add_argument("--l", type=int, default=3)
    sp.add_argument("--points", type=int, default=8)
    sp.add_argument("--exact", action="store_true", help="rational q and rational torus points")
    sp.set_defaults(func=cmd_identity_check)

    sp = sub.add_parser("reduce", parents=[common], help="dimension reduction of X - Y")
    _pair_args(sp, n=8)
    sp.add_argument("--l", type=int)
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("witness", parents=[common], help="witness pattern for a pair")
    _pair_args(sp, n=16)
    sp.add_argument("--l", type=int)
    sp.set_defaults(func=cmd_witness)

    sp = sub.add_parser("bound", parents=[common], help="large values of polynomials on arcs")
    sp.add_argument("--kind", choices=["littlewood", "multivariate", "corollary"],
                    default="littlewood")
    sp.add_argument("--coeffs", type=Path, help="whitespace list (littlewood) or signed HMX")
    sp.add_argument("--m", type=int, default=256)
    sp.add_argument("--n", type=int, default=32)
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--k", type=int, default=20, help="nonzero entries of a random sparse array")
    sp.add_argument("--mu", type=float, default=0.6)
    sp.add_argument("--L", type=float)
    sp.add_argument("--Delta", type=float, default=1.0)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("reconstruct", parents=[common], help="reconstruct from traces")
    sp.add_argument("--x", type=Path, help="truth HMX (scored if given)")
    sp.add_argument("--traces", type=Path, help="directory of .trc files")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("-T", type=int)
    sp.set_defaults(func=cmd_reconstruct)

    sp = sub.add_parser("experiment", parents=[common], help="success rate against T")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--target", type=float, default=0.99)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--truths", choices=["random", "all"], default="random")
    sp.add_argument("--schedule-start", type=int, default=1)
    sp.add_argument("--schedule-stop", type=int, default=256)
    sp.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    if args.config:
        use_config(args.config)
    run = Run(args, argv)
    try:
        result = args.func(run, args)
    except (SeedRequired, MemoryError) as exc:
        print(exc, file=sys.stderr)
        return 2
    run.finish(result)
    print(json.dumps(result, indent=2, default=_plain))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
