"""Command-line front end: sampling, cross-method verification, statistics.

Three subcommands share one executable:

* ``sample`` draws stationary ring configurations (optionally whole
  stacked diagrams) and streams them line by line;
* ``verify`` computes the stationary distribution by several methods
  and checks the pairwise distances, or prints the cleared symbolic
  solution;
* ``stats`` estimates line/clustering statistics and compares them to
  their closed forms as CSV.

Every run writes a flat key-value manifest next to its output (stderr
when writing to stdout) so a run can be reproduced from its recorded
seed and parameters.  Exit codes: 0 pass, 1 verification failure,
2 usage error.
"""

from __future__ import annotations

import argparse
import math
import secrets
import sys
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats as _scipy_stats

from . import __version__
from .lineq import (TandemParams, convoy_walk, pair_correlations,
                    q_series_identity_check, sample_line_config)
from .matprod import stationary_distribution_trace
from .oracle import build_generator, solve_stationary, total_variation
from .qpoly import ONE, RAT_Q, QPoly
from .ring import RingConfig
from .sampler import sample_multitype
from .weights import exact_departure_distribution

CHI2_SIGNIFICANCE = 1e-3
TRACE_TOLERANCE = 1e-10
EXACT_STATE_CAP = 256


def parse_counts(text: str) -> tuple[int, ...]:
    """Class sizes like "1,1,2"; "KxN" repeats K for N classes."""
    out: list[int] = []
    try:
        for item in text.split(","):
            if "x" in item:
                value, repeat = item.split("x")
                out.extend([int(value)] * int(repeat))
            else:
                out.append(int(item))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad counts {text!r}")
    if not out or any(k < 1 for k in out):
        raise argparse.ArgumentTypeError("counts must be positive integers")
    return tuple(out)


def parse_q(text: str) -> Fraction:
    """Asymmetry as "p/r" or a decimal, held exactly as a fraction."""
    try:
        q = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad asymmetry {text!r}")
    if not 0 <= q < 1:
        raise argparse.ArgumentTypeError("asymmetry must lie in [0, 1)")
    return q


@dataclass
class RunManifest:
    """Flat record of one invocation, written alongside its output."""

    command: str
    params: dict = field(default_factory=dict)

    def dump(self) -> str:
        lines = [f"command = {self.command}",
                 f"version = {__version__}"]
        for key in sorted(self.params):
            lines.append(f"{key} = {self.params[key]}")
        return "\n".join(lines) + "\n"


class _Output:
    """Stream data to stdout or a file; the manifest goes alongside."""

    def __init__(self, path: str):
        self.path = path
        self._fh = sys.stdout if path == "-" else open(path, "w")

    def write(self, text: str) -> None:
        self._fh.write(text)

    def finish(self, manifest: RunManifest) -> None:
        if self._fh is sys.stdout:
            sys.stderr.write(manifest.dump())
        else:
            self._fh.close()
            with open(self.path + ".manifest", "w") as fh:
                fh.write(manifest.dump())


def _seed_or_random(seed: int | None) -> int:
    return secrets.randbits(63) if seed is None else seed


# -- sample -----------------------------------------------------------------

def cmd_sample(args) -> int:
    seed = _seed_or_random(args.seed)
    rng = np.random.default_rng(seed)
    out = _Output(args.out)
    q = float(args.q)
    for _ in range(args.n):
        diagram = sample_multitype(args.counts, q, rng, L=args.ring,
                                   engine=args.engine)
        if args.dump_diagrams:
            out.write(diagram.dump() + "\n")
        else:
            out.write(diagram.bottom.to_text() + "\n")
    out.finish(RunManifest("sample", {
        "ring": args.ring, "counts": args.counts_text, "q": args.q,
        "n": args.n, "seed": seed, "engine": args.engine,
        "dump_diagrams": args.dump_diagrams, "out": args.out}))
    return 0


# -- verify -----------------------------------------------------------------

def _poly_lcm(a: QPoly, b: QPoly) -> QPoly:
    g = a.gcd(b)
    return a.exact_divide(g) * b if g.degree > 0 else a * b


def _cleared_numerators(dist):
    """Smallest common clearing factor and the integer numerators."""
    den = ONE
    for v in dist.values():
        den = _poly_lcm(den, v.den)
    nums = {k: v.num * den.exact_divide(v.den) for k, v in dist.items()}
    scale = 1
    for n in nums.values():
        for c in n.coeffs:
            scale = math.lcm(scale, c.denominator)
    return den * scale, {k: n * scale for k, n in nums.items()}


def _verify_symbolic(args) -> int:
    gen = build_generator(args.counts, RAT_Q, L=args.L)
    dist = solve_stationary(gen, mode="symbolic")
    factor, nums = _cleared_numerators(dist)
    print(f"clearing factor: {factor}")
    for config in sorted(nums):
        text = RingConfig(config).to_text()
        print(f"{text}\t{nums[config]}")
    return 0


def _chi_square(counter: Counter, exact: dict, n: int):
    """Chi-square p-value of sampled states against an exact law.

    Bins with expectation below 5 are pooled so the asymptotics hold.
    """
    expected, observed = [], []
    pool_e = pool_o = 0.0
    for state, p in exact.items():
        e = float(p) * n
        o = counter.get(state, 0)
        if e < 5.0:
            pool_e += e
            pool_o += o
        else:
            expected.append(e)
            observed.append(o)
    if pool_e > 0:
        expected.append(pool_e)
        observed.append(pool_o)
    expected = np.asarray(expected)
    observed = np.asarray(observed)
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    return chi2, float(_scipy_stats.chi2.sf(chi2, len(expected) - 1))


def _verify_distributions(args, methods, rng):
    dists: dict[str, tuple[dict, bool]] = {}  # name -> (law, is_exact)
    failures = 0
    for name in methods:
        try:
            if name == "oracle":
                exact = math.comb(args.L, sum(args.counts)) <= EXACT_STATE_CAP
                gen = build_generator(args.counts, args.q, L=args.L)
                mode = "exact" if exact else "float"
                dists[name] = (solve_stationary(gen, mode=mode), exact)
            elif name == "weights":
                dists[name] = (exact_departure_distribution(
                    args.counts, args.q, L=args.L), True)
            elif name == "matprod":
                dists[name] = (stationary_distribution_trace(
                    args.counts, args.q, L=args.L), True)
            elif name == "mlq":
                counter: Counter = Counter()
                qf = float(args.q)
                for _ in range(args.n):
                    d = sample_multitype(args.counts, qf, rng, L=args.L)
                    counter[d.bottom.types] += 1
                dists[name] = (counter, False)
            else:
                print(f"method {name}: unknown", file=sys.stderr)
                return None, failures + 1
        except (ValueError, MemoryError) as exc:
            print(f"method {name}: skipped ({exc})", file=sys.stderr)
            failures += 1
    for name, (law, exact) in dists.items():
        if name == "mlq":
            print(f"method mlq: {args.n} samples")
        else:
            kind = "exact" if exact else "float"
            print(f"method {name}: {kind}, {len(law)} states")
    return dists, failures


def _verify_pairs(args, dists) -> int:
    failures = 0
    names = [n for n in dists]
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            law_a, exact_a = dists[a]
            law_b, exact_b = dists[b]
            if a == "mlq" or b == "mlq":
                counter = law_a if a == "mlq" else law_b
                exact = law_b if a == "mlq" else law_a
                chi2, p = _chi_square(counter, exact, args.n)
                ok = p > CHI2_SIGNIFICANCE
                print(f"pair {a}/{b}: chi-square = {chi2:.2f}, "
                      f"p = {p:.3g} {'PASS' if ok else 'FAIL'} "
                      f"(threshold {CHI2_SIGNIFICANCE})")
            else:
                tv = total_variation(law_a, law_b)
                tol = 0 if exact_a and exact_b else TRACE_TOLERANCE
                ok = tv <= tol
                print(f"pair {a}/{b}: TV = {float(tv):.3g} "
                      f"{'PASS' if ok else 'FAIL'} (tolerance {tol})")
            failures += 0 if ok else 1
    return failures


def cmd_verify(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if args.symbolic:
        if methods not in ([], ["oracle"]):
            print("error: --symbolic only supports the oracle method",
                  file=sys.stderr)
            return 2
        return _verify_symbolic(args)
    seed = _seed_or_random(args.seed)
    rng = np.random.default_rng(seed)
    dists, failures = _verify_distributions(args, methods, rng)
    if dists is None:
        return 2
    if len(dists) < 2:
        print("error: need at least two computable methods",
              file=sys.stderr)
        return 1
    failures += _verify_pairs(args, dists)
    manifest = RunManifest("verify", {
        "L": args.L, "counts": args.counts_text, "q": args.q,
        "methods": ",".join(methods), "n": args.n, "seed": seed})
    sys.stderr.write(manifest.dump())
    return 1 if failures else 0


# -- stats ------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return f"{value:.10g}"


def _emit_rows(rows, out: _Output) -> None:
    out.write("statistic, estimate, stderr, closed_form, z_score\n")
    for row in rows:
        out.write(", ".join(_fmt(v) for v in row) + "\n")


def _batch_stderr(indicator: np.ndarray, batches: int = 200) -> float:
    """Standard error of the mean respecting serial correlation."""
    usable = len(indicator) - len(indicator) % batches
    means = indicator[:usable].reshape(batches, -1).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))


def _stats_pairs(args, rng):
    lam, mu, q = args.lam, args.mu, float(args.q)
    if lam is None or mu is None:
        print("error: pairs mode needs --lambda and --mu", file=sys.stderr)
        return None
    if not 0 < lam < mu < 1:
        print("error: need 0 < lambda < mu < 1", file=sys.stderr)
        return None
    sites = int(args.sites)
    window = sample_line_config(TandemParams((lam, mu - lam), q), rng=rng,
                                window=(0, sites))
    codes = np.asarray([1 if t == 1 else (2 if t == 2 else 3)
                        for t in window.types], dtype=np.int8)
    at_two = codes[:-1] == 2
    closed = pair_correlations(lam, mu, q)
    rows = []
    worst = 0.0
    for target, code, label in zip(closed, (3, 2, 1),
                                   ("nu(2,inf)", "nu(2,2)", "nu(2,1)")):
        ind = (at_two & (codes[1:] == code)).astype(float)
        est = float(ind.mean())
        se = _batch_stderr(ind)
        z = (est - target) / se
        worst = max(worst, abs(z))
        rows.append((label, est, se, target, z))
    return rows, worst <= 4


def _stats_cluster(args, rng):
    L, n, w = args.L, args.n, args.window
    q = float(args.q)
    closed = (1 - q) / 6
    per_sample = []
    for _ in range(n):
        d = sample_multitype((1,) * L, q, rng, L=L)
        y = np.asarray(d.bottom.types, dtype=np.int64)
        gap = np.abs(np.diff(np.concatenate([y, y[:1]])))
        # label gaps below the window count the diagonal atom plus
        # off-diagonal mass linear (and quadratic) in the window width;
        # extrapolating three widths to zero removes both terms
        p1, p2, p4 = ((gap <= m * w).mean() for m in (1, 2, 4))
        per_sample.append((8 * p1 - 6 * p2 + p4) / 3)
    ests = np.asarray(per_sample)
    est = float(ests.mean())
    se = float(ests.std(ddof=1) / math.sqrt(n))
    z = (est - closed) / se
    rows = [("P(adjacent_types_equal)", est, se, closed, z)]
    return rows, abs(z) <= 4


def _stats_identity(args):
    residual = q_series_identity_check(args.alpha, float(args.q), args.terms)
    rows = [("q_series_residual", residual, None, 0.0, None)]
    return rows, residual < 1e-12


def _stats_convoy(args, rng):
    recorded = convoy_walk(args.x, float(args.q), args.steps, rng)
    half = sum(1 for i in recorded if i <= args.steps // 2)
    rows = [("convoy_records", float(len(recorded)), None, None, None),
            ("convoy_records_first_half", float(half), None, None, None)]
    return rows, True


def cmd_stats(args) -> int:
    seed = _seed_or_random(args.seed)
    rng = np.random.default_rng(seed)
    if args.mode == "pairs":
        result = _stats_pairs(args, rng)
    elif args.mode == "cluster":
        result = _stats_cluster(args, rng)
    elif args.mode == "identity":
        result = _stats_identity(args)
    else:
        result = _stats_convoy(args, rng)
    if result is None:
        return 2
    rows, ok = result
    out = _Output(args.out)
    _emit_rows(rows, out)
    params = {"mode": args.mode, "q": args.q, "seed": seed,
              "out": args.out}
    for key in ("lam", "mu", "sites", "L", "n", "window", "alpha",
                "terms", "x", "steps"):
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    out.finish(RunManifest("stats", params))
    return 0 if ok else 1


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtasep",
        description="Multi-type ASEP stationary laws: sample, verify, "
                    "and measure.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw stationary ring configurations")
    p.add_argument("--ring", type=int, required=True, metavar="L")
    p.add_argument("--counts", type=parse_counts, required=True)
    p.add_argument("--q", type=parse_q, required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--engine", choices=("auto", "kernel", "fallback"),
                   default="auto")
    p.add_argument("--dump-diagrams", action="store_true",
                   help="write whole stacked diagrams, not just the "
                        "bottom line")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("verify",
                       help="cross-check the stationary distribution")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--counts", type=parse_counts, required=True)
    p.add_argument("--q", type=parse_q, default=Fraction(1, 2))
    p.add_argument("--symbolic", action="store_true",
                   help="print the cleared symbolic solution instead")
    p.add_argument("--methods", default="weights,matprod,oracle")
    p.add_argument("--n", type=int, default=100_000,
                   help="sample count for the mlq method")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stats", help="closed-form statistics comparisons")
    p.add_argument("--mode", required=True,
                   choices=("pairs", "cluster", "identity", "convoy"))
    p.add_argument("--q", type=parse_q, default=Fraction(1, 2))
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--sites", type=float, default=1e6)
    p.add_argument("--L", type=int, default=1000)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--window", type=int, default=32)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--terms", type=int, default=60)
    p.add_argument("--x", type=float, default=0.5)
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.counts_text = (",".join(str(k) for k in args.counts)
                        if getattr(args, "counts", None) else "")
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
