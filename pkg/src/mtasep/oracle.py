"""Brute-force ground truth: generator construction and stationary solve.

Builds the continuous-time generator of the multi-type exclusion process on
a ring (adjacent values sort into increasing order at rate 1 and into
decreasing order at rate q) and solves for the stationary distribution:
in floating point, exactly at rational q, or symbolically in q for tiny
state spaces.  Everything here is deliberately independent of the queueing
and matrix-product machinery so it can arbitrate between them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import TextIO

import numpy as np

from .qpoly import ONE, QPoly, QRational
from .ring import HOLE, ParticleCounts, arrangements, count_arrangements

STATE_CAP = 10 ** 5


@dataclass
class GeneratorMatrix:
    """Sparse CTMC generator over all configurations with fixed counts.

    ``rates[i]`` lists ``(j, rate)`` pairs for transitions out of state i;
    the diagonal is implicit (negative row sum).  Rates are kept in
    whatever arithmetic ``q`` uses (float, Fraction, or QPoly).
    """

    counts: ParticleCounts
    q: object
    states: list[tuple]
    index: dict = field(repr=False)
    rates: list[list[tuple[int, object]]] = field(repr=False)

    @property
    def n_states(self) -> int:
        return len(self.states)

    def row_sum(self, i: int):
        total = 0
        for _, r in self.rates[i]:
            total = total + r
        return total


def _as_particle_counts(counts, L=None) -> ParticleCounts:
    if isinstance(counts, ParticleCounts):
        return counts
    if L is None:
        raise ValueError("ring size L is required with a bare count vector")
    return ParticleCounts(tuple(counts), L)


def build_generator(counts, q, L=None, cap: int = STATE_CAP) -> GeneratorMatrix:
    """Enumerate all configurations and their sorting transitions.

    Parameters
    ----------
    counts : ParticleCounts or sequence of int
        Particle counts per class.
    q : float, Fraction, or QPoly
        Rate of sorting into decreasing order; sorting into increasing
        order has rate 1.
    L : int, optional
        Ring size when counts is a bare sequence.
    cap : int
        Refuse to enumerate more states than this.
    """
    pc = _as_particle_counts(counts, L)
    n_states = count_arrangements(pc.counts, pc.L)
    if n_states > cap:
        raise ValueError(f"{n_states} states exceed the cap of {cap}")
    states = list(arrangements(pc.counts, pc.L))
    index = {s: i for i, s in enumerate(states)}
    rates: list[list[tuple[int, object]]] = []
    L_ = pc.L
    for s in states:
        out = {}
        for i in range(L_):
            j = (i + 1) % L_
            a, b = s[i], s[j]
            if a == b:
                continue
            swapped = list(s)
            swapped[i], swapped[j] = b, a
            t = index[tuple(swapped)]
            rate = 1 if a > b else q
            if rate == 0:
                continue
            if t in out:
                out[t] = out[t] + rate
            else:
                out[t] = rate
        rates.append(sorted(out.items()))
    return GeneratorMatrix(pc, q, states, index, rates)


# -- exact linear algebra ----------------------------------------------------

def _bareiss_solve(rows: list[list], exact_divide, is_zero):
    """Solve an n x (n+1) augmented system by fraction-free elimination.

    Entries must form an integral domain under +, -, * with exact division
    ``exact_divide``.  Returns (numerators, denominator): the solution is
    numerators[i] / denominator.  Raises ValueError on a singular system.
    """
    n = len(rows)
    prev = None
    for k in range(n):
        pivot_row = next((r for r in range(k, n) if not is_zero(rows[r][k])),
                         None)
        if pivot_row is None:
            raise ValueError("singular system (unexpected rank deficiency)")
        if pivot_row != k:
            rows[k], rows[pivot_row] = rows[pivot_row], rows[k]
        pk = rows[k][k]
        for i in range(k + 1, n):
            aik = rows[i][k]
            row_i = rows[i]
            row_k = rows[k]
            for j in range(k + 1, n + 1):
                val = pk * row_i[j] - aik * row_k[j]
                if prev is not None:
                    val = exact_divide(val, prev)
                row_i[j] = val
            row_i[k] = 0
        prev = pk
    # Back substitution on the triangular integer system: scale so every
    # unknown shares the final pivot as common denominator.
    den = rows[n - 1][n - 1]
    nums = [None] * n
    nums[n - 1] = rows[n - 1][n]
    for i in range(n - 2, -1, -1):
        acc = rows[i][n] * den
        for j in range(i + 1, n):
            acc = acc - rows[i][j] * nums[j]
        nums[i] = exact_divide(acc, rows[i][i])
    return nums, den


def _exact_rows(G: GeneratorMatrix):
    """Integer-matrix balance equations with the first row replaced by the
    normalization constraint (the rows of the transposed generator sum to
    zero, so dropping one loses nothing)."""
    n = G.n_states
    q = G.q
    if isinstance(q, int):
        q = Fraction(q)
    if not isinstance(q, Fraction):
        raise TypeError("exact mode needs a rational q")
    scale = q.denominator
    rows = [[0] * (n + 1) for _ in range(n)]
    rows[0] = [1] * n + [1]
    for i in range(n):
        diag = 0
        for j, r in G.rates[i]:
            rs = Fraction(r) * scale
            if rs.denominator != 1:
                raise AssertionError("rate did not clear the denominator")
            rint = rs.numerator
            diag += rint
            if j != 0:
                rows[j][i] += rint
        if i != 0:
            rows[i][i] -= diag
    return rows


def solve_stationary(G: GeneratorMatrix, mode: str = "float") -> dict:
    """Stationary distribution of the generator.

    Modes: ``float`` (numpy dense solve), ``exact`` (fraction-free
    elimination, rational q required), ``symbolic`` (rational functions in
    q; state count gated to 120).  Returns a dict mapping configuration
    tuples to probabilities in the respective arithmetic.
    """
    n = G.n_states
    if n == 1:
        one = {"float": 1.0, "exact": Fraction(1),
               "symbolic": QRational(1)}[mode]
        return {G.states[0]: one}
    if mode == "float":
        A = np.zeros((n, n))
        for i in range(n):
            diag = 0.0
            for j, r in G.rates[i]:
                r = float(r)
                A[j, i] += r
                diag += r
            A[i, i] -= diag
        A[0, :] = 1.0
        b = np.zeros(n)
        b[0] = 1.0
        pi = np.linalg.solve(A, b)
        if not np.all(pi > -1e-12):
            raise ValueError("negative stationary mass (generator bug?)")
        return {s: float(p) for s, p in zip(G.states, pi)}
    if mode == "exact":
        rows = _exact_rows(G)
        nums, den = _bareiss_solve(rows, lambda a, b: a // b,
                                   lambda x: x == 0)
        return {s: Fraction(int(v), int(den))
                for s, v in zip(G.states, nums)}
    if mode == "symbolic":
        if n > 120:
            raise ValueError(f"symbolic solve gated to 120 states, got {n}")
        rows = [[QPoly() for _ in range(n + 1)] for _ in range(n)]
        one = ONE
        for j in range(n):
            rows[0][j] = one
        rows[0][n] = one
        for i in range(n):
            diag = QPoly()
            for j, r in G.rates[i]:
                if isinstance(r, QRational):
                    rp = r.as_poly()
                elif isinstance(r, QPoly):
                    rp = r
                else:
                    rp = one if r == 1 else QPoly((Fraction(r),))
                diag = diag + rp
                if j != 0:
                    rows[j][i] = rows[j][i] + rp
            if i != 0:
                rows[i][i] = rows[i][i] - diag
        nums, den = _bareiss_solve(
            rows, lambda a, b: a.exact_divide(b), lambda x: x.is_zero)
        return {s: QRational(v, den) for s, v in zip(G.states, nums)}
    raise ValueError(f"unknown mode {mode!r}")


def stationary_distribution(counts, q, L=None, mode: str = "float",
                            cap: int = STATE_CAP) -> dict:
    """Convenience wrapper: build the generator and solve it."""
    return solve_stationary(build_generator(counts, q, L=L, cap=cap), mode)


def total_variation(d1: dict, d2: dict):
    """Total variation distance (1/2 the L1 difference) of two distributions
    given as dicts; keys missing on one side count as zero mass."""
    keys = set(d1) | set(d2)
    diff = 0
    for k in keys:
        a = d1.get(k, 0)
        b = d2.get(k, 0)
        d = a - b
        if isinstance(d, float):
            diff += abs(d)
        else:
            diff = diff + (d if _nonnegative(d) else -d)
    return diff / 2


def _nonnegative(x) -> bool:
    if isinstance(x, QRational):
        # compare at a generic interior point; exactness is not needed for
        # picking the absolute value of a difference of probabilities
        return x.evaluate_at(Fraction(1, 3)) >= 0
    return x >= 0


def config_text(state: tuple) -> str:
    return " ".join("inf" if v == HOLE else str(int(v)) for v in state)


def dump_distribution(dist: dict, out: TextIO) -> None:
    """Write "config<TAB>value" lines; exact values as "num / den" strings."""
    for state in sorted(dist, key=lambda s: tuple(float(v) for v in s)):
        v = dist[state]
        if isinstance(v, QRational):
            val = str(v)
        elif isinstance(v, Fraction):
            val = f"{v.numerator}/{v.denominator}"
        else:
            val = repr(v)
        out.write(f"{config_text(state)}\t{val}\n")
