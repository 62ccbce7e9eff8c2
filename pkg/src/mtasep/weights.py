"""Queue-process validity, weights, and exact departure distributions.

A time slot i on the ring carries an optional arrival A_i (a customer class
or HOLE), an optional service S_i (1 or HOLE), and per-class queue lengths
Q_i = (Q_i^{(1)}, ..., Q_i^{(N-1)}).  A triple (A, S, Q) is valid when a
departure process D exists with:

  * per-class balance  Q^{(n)}_{i+1} - Q^{(n)}_i = 1(A_i = n) - 1(D_i = n);
  * no service implies no departure;
  * a service implies a departure of class <= A_i (class N marks a service
    that nobody used).

Each valid Q carries a weight: the probability that the services, offered
to queued customers in priority order with independent rejection
probability q each (a fresh arrival always accepts), produce exactly the
departures D.  Summing weights over shift classes of Q in closed form
yields exact stationary distributions for the ring process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .qpoly import QPoly, QRational
from .ring import HOLE, ParticleCounts

DEFAULT_L_CAP = 6


class InvalidProcess(ValueError):
    """Raised when (A, S, Q) admits no departure process.

    Attributes ``site`` and ``reason`` identify the first violation.
    """

    def __init__(self, site: int, reason: str):
        super().__init__(f"invalid at site {site}: {reason}")
        self.site = site
        self.reason = reason


@dataclass(frozen=True)
class WeightedState:
    """A queue process together with its total weight."""

    Q: tuple
    weight: object


def _lift_queue(Q: Sequence) -> tuple[tuple[int, ...], ...]:
    """Accept per-site ints (two-class shorthand) or per-site tuples."""
    out = []
    for v in Q:
        if isinstance(v, (int, float)) and v != HOLE:
            out.append((int(v),))
        else:
            out.append(tuple(int(x) for x in v))
    return tuple(out)


def _n_classes(A: Sequence, Q_lifted) -> int:
    width = len(Q_lifted[0]) if Q_lifted else 0
    n = width + 1
    top = max((int(v) for v in A if v != HOLE), default=0)
    if top > n - 1:
        raise ValueError(f"arrival class {top} exceeds queue width {width}")
    return n


def departure_process(A: Sequence, S: Sequence, Q: Sequence) -> tuple:
    """Reconstruct the unique departure process D from (A, S, Q).

    ``Q`` has one entry per site on the ring; pass ``len(A) + 1`` entries
    (explicit right boundary, non-cyclic) to validate a line window
    instead.  Raises ``InvalidProcess`` with the first violated condition.
    """
    L = len(A)
    if len(S) != L:
        raise ValueError("A and S must have equal length")
    Ql = _lift_queue(Q)
    cyclic = len(Ql) == L
    if not cyclic and len(Ql) != L + 1:
        raise ValueError("Q must cover the ring or the window plus boundary")
    N = _n_classes(A, Ql)
    width = N - 1
    for i, qvec in enumerate(Ql):
        for x in qvec:
            if x < 0:
                raise InvalidProcess(i % L, "negative queue length")
    D: list = []
    for i in range(L):
        qi = Ql[i]
        qnext = Ql[(i + 1) % L] if cyclic else Ql[i + 1]
        ai = A[i]
        gain = [0] * width
        if ai != HOLE:
            gain[int(ai) - 1] = 1
        residual = [qi[n] + gain[n] - qnext[n] for n in range(width)]
        if S[i] == HOLE:
            if any(residual):
                raise InvalidProcess(i, "departure without a service")
            D.append(HOLE)
            continue
        positive = [n for n, r in enumerate(residual) if r != 0]
        if not positive:
            if ai != HOLE:
                raise InvalidProcess(
                    i, "service with an arrival present must produce a "
                       "departure of class at most the arrival's")
            D.append(N)
            continue
        if len(positive) != 1 or residual[positive[0]] != 1:
            raise InvalidProcess(i, "queue step is not a single departure")
        d = positive[0] + 1
        if ai != HOLE and d > int(ai):
            raise InvalidProcess(
                i, f"departure class {d} outranked by arrival {int(ai)}")
        D.append(d)
    return tuple(D)


def _prefix(qvec: Sequence[int], m: int) -> int:
    return sum(qvec[:m])


def site_weight(A: Sequence, S: Sequence, Q: Sequence, i: int, q):
    """Weight of slot i: the probability of its departure outcome given the
    queue contents, under priority offers with rejection probability q."""
    D = departure_process(A, S, Q)
    Ql = _lift_queue(Q)
    return _site_weight_given(A[i], S[i], Ql[i], D[i], _n_classes(A, Ql), q)


def _site_weight_given(ai, si, qvec, di, N: int, q):
    if si == HOLE:
        return 1 if not isinstance(q, float) else 1.0
    d = int(di)
    if d == N:
        return q ** _prefix(qvec, N - 1)
    if ai != HOLE and int(ai) == d:
        return q ** _prefix(qvec, d - 1)
    return (q ** _prefix(qvec, d - 1)) * (1 - q ** qvec[d - 1])


def total_weight(A: Sequence, S: Sequence, Q: Sequence, q):
    """Product of site weights over the ring."""
    D = departure_process(A, S, Q)
    Ql = _lift_queue(Q)
    N = _n_classes(A, Ql)
    out = None
    for i in range(len(A)):
        w = _site_weight_given(A[i], S[i], Ql[i], D[i], N, q)
        out = w if out is None else out * w
    return out


def _norm_q(q):
    """Lift q into an arithmetic closed under division (ints would decay to
    float the first time a geometric series is summed) and reject values
    where the geometric series diverges."""
    if isinstance(q, QPoly):
        return QRational(q)
    if isinstance(q, int):
        q = Fraction(q)
    if isinstance(q, (float, Fraction)) and not 0 <= q < 1:
        raise ValueError("weight sums need 0 <= q < 1")
    return q


# -- shift-class enumeration and closed-form summation -----------------------

@dataclass(frozen=True)
class ShiftClass:
    """All valid Q sharing one departure pattern.

    The members are base + per-class constants c_n >= 0 where base is the
    member with every class's running minimum at zero.  ``exponents``
    collects, per class n, the number of departures of class > n (each
    unit of c_n multiplies the weight by q to this power); ``fixed_power``
    is the q-exponent of the base member; ``factor_offsets[n]`` lists the
    base queue lengths entering (1 - q^{c_n + offset}) factors.
    """

    D: tuple
    base: tuple
    exponents: tuple[int, ...]
    fixed_power: int
    factor_offsets: tuple[tuple[int, ...], ...]


def _arrival_counts(A: Sequence, width: int) -> list[int]:
    counts = [0] * width
    for v in A:
        if v != HOLE:
            counts[int(v) - 1] += 1
    return counts


def departure_classes(A: Sequence, S: Sequence) -> list[ShiftClass]:
    """Enumerate every departure pattern compatible with (A, S).

    Patterns assign each service site a departing class d <= A_i (any class
    when no arrival is present), using exactly the class counts of A plus
    unused services for the lowest class.
    """
    L = len(A)
    width = max((int(v) for v in A if v != HOLE), default=0)
    services = [i for i in range(L) if S[i] != HOLE]
    K = len(services)
    k = _arrival_counts(A, width)
    k_last = K - sum(k)
    if k_last < 1:
        raise ValueError("need more services than arrivals on the ring")
    N = width + 1
    remaining = k + [k_last]
    pattern: list[int] = []
    found: list[tuple] = []

    def rec(pos: int):
        if pos == len(services):
            found.append(tuple(pattern))
            return
        i = services[pos]
        ai = A[i]
        top = N if ai == HOLE else int(ai)
        for d in range(1, top + 1):
            if remaining[d - 1] == 0:
                continue
            remaining[d - 1] -= 1
            pattern.append(d)
            rec(pos + 1)
            pattern.pop()
            remaining[d - 1] += 1

    rec(0)
    out = []
    for pat in found:
        D = [HOLE] * L
        for site, d in zip(services, pat):
            D[site] = d
        out.append(_shift_class(A, tuple(D), N))
    return out


def _shift_class(A: Sequence, D: tuple, N: int) -> ShiftClass:
    L = len(A)
    width = N - 1
    # running queue profile from an arbitrary zero starting point
    g = [[0] * width]
    for i in range(L):
        step = list(g[-1])
        if A[i] != HOLE:
            step[int(A[i]) - 1] += 1
        if D[i] != HOLE and int(D[i]) <= width:
            step[int(D[i]) - 1] -= 1
        g.append(step)
    if g[L] != g[0]:
        raise AssertionError("departure pattern breaks class balance")
    base_shift = [-min(g[i][n] for i in range(L)) for n in range(width)]
    base = tuple(tuple(g[i][n] + base_shift[n] for n in range(width))
                 for i in range(L))
    exponents = [0] * width
    fixed = 0
    offsets: list[list[int]] = [[] for _ in range(width)]
    for i in range(L):
        if D[i] == HOLE:
            continue
        d = int(D[i])
        for n in range(d - 1):
            exponents[n] += 1
            fixed += base[i][n]
        if d <= width and A[i] != d:
            offsets[d - 1].append(base[i][d - 1])
    return ShiftClass(D, base, tuple(exponents), fixed,
                      tuple(tuple(o) for o in offsets))


def _one(q):
    return 1.0 if isinstance(q, float) else 1


def _class_sum(cls: ShiftClass, q, truncate: int | None = None):
    """Total weight of a shift class: q^fixed * prod_n S_n where

    S_n = sum_{c >= 0} q^{E_n c} prod_a (1 - q^{c + a}),

    expanded over subsets into geometric series.  ``truncate`` caps each
    c at that value instead (used for truncated sums with exact tails).
    """
    total = q ** cls.fixed_power
    for n, e in enumerate(cls.exponents):
        offsets = cls.factor_offsets[n]
        s = None
        for r in range(len(offsets) + 1):
            for subset in combinations(offsets, r):
                expo = e + r
                if expo == 0:
                    raise ValueError(
                        "weight sum diverges: a class with no lower-priority "
                        "departures has unbounded shifts")
                sign = -1 if r % 2 else 1
                coeff = q ** sum(subset)
                if truncate is None:
                    geo = 1 / (1 - q ** expo)
                else:
                    geo = (1 - q ** (expo * (truncate + 1))) \
                        / (1 - q ** expo)
                term = sign * coeff * geo
                s = term if s is None else s + term
        if s is not None:
            total = total * s
    return total


def weight_sum_exact(A: Sequence, S: Sequence, q):
    """Sum of total_weight over every valid queue process, in closed form."""
    q = _norm_q(q)
    total = None
    for cls in departure_classes(A, S):
        v = _class_sum(cls, q)
        total = v if total is None else total + v
    if total is None:
        raise ValueError("no departure pattern is compatible with (A, S)")
    return total


def weight_sum_truncated(A: Sequence, S: Sequence, q, max_shift: int):
    """Truncated weight sum plus a bound on the discarded tail.

    Sums all valid Q whose per-class shift above the minimal member is at
    most ``max_shift``.  The tail bound is exact: the closed-form remainder
    of the geometric series, so (sum, sum + tail) always brackets the full
    weight sum.
    """
    q = _norm_q(q)
    if max_shift < 0:
        raise ValueError("max_shift must be >= 0")
    trunc = None
    full = None
    for cls in departure_classes(A, S):
        t = _class_sum(cls, q, truncate=max_shift)
        f = _class_sum(cls, q)
        trunc = t if trunc is None else trunc + t
        full = f if full is None else full + f
    tail = full - trunc
    return trunc, tail


# -- exact stationary distribution via recursive enumeration -----------------

def _uniform_value(q, denom: int):
    if isinstance(q, float):
        return 1.0 / denom
    if isinstance(q, (QRational, QPoly)):
        return QRational(1, denom)
    return Fraction(1, denom)


def exact_departure_distribution(counts, q, L: int | None = None,
                                 l_cap: int = DEFAULT_L_CAP) -> dict:
    """Exact stationary distribution of the ring process with these counts.

    Recursively mixes over arrival configurations (stationary for the
    process with the last class dropped) and uniform service sets, summing
    queue-process weights per departure pattern in closed form and
    normalizing by the true per-(A, S) total.  Exact for Fraction or
    symbolic q; float q gives the floating-point image of the same formula.

    Returns a dict mapping configuration tuples to probabilities.
    """
    if isinstance(counts, ParticleCounts):
        L = counts.L
        counts = counts.counts
    if L is None:
        raise ValueError("ring size L is required")
    counts = tuple(counts)
    if not counts or any(kn < 1 for kn in counts):
        raise ValueError("all class counts must be >= 1")
    if sum(counts) > L:
        raise ValueError("more particles than sites")
    if L > l_cap:
        raise ValueError(f"L={L} exceeds the enumeration cap {l_cap}")
    return _edd(counts, _norm_q(q), L)


def _edd(counts: tuple, q, L: int) -> dict:
    if len(counts) == 1:
        k = counts[0]
        val = _uniform_value(q, math.comb(L, k))
        out = {}
        for sites in combinations(range(L), k):
            state = [HOLE] * L
            for s in sites:
                state[s] = 1
            out[tuple(state)] = val
        return out
    arr_dist = _edd(counts[:-1], q, L)
    K = sum(counts)
    n_subsets = math.comb(L, K)
    s_prob = _uniform_value(q, n_subsets)
    dist: dict = {}
    for A, pa in arr_dist.items():
        mix = pa * s_prob
        for sites in combinations(range(L), K):
            S = tuple(1 if i in set(sites) else HOLE for i in range(L))
            classes = departure_classes(A, S)
            sums = [_class_sum(c, q) for c in classes]
            Z = sums[0]
            for v in sums[1:]:
                Z = Z + v
            for c, v in zip(classes, sums):
                p = mix * (v / Z)
                if c.D in dist:
                    dist[c.D] = dist[c.D] + p
                else:
                    dist[c.D] = p
    return dist
