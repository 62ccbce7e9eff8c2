"""Matrix-product representation of ring stationary weights.

Stationary probabilities are proportional to traces of products of
type-indexed operators X_n built recursively from four semi-infinite
banded matrices: the identity, a diagonal decay matrix (alpha), a
subdiagonal completion matrix (delta), and a superdiagonal shift
(epsilon).  An alternative triple (alt_*) realizes the same two-type
distributions with the arrival/occupant service distinction removed.

Traces are evaluated two ways: exactly, by closed-form geometric
summation over banded cyclic paths (works at rational, float, or
symbolic q, no truncation error), and numerically on truncated tensor
spaces with size doubling (the reference construction; memory grows as
M^(N(N-1)/2), so it is practical only for few classes).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .qpoly import ONE, Q, QPoly, QRational
from .ring import HOLE, ParticleCounts, RingConfig, arrangements

# Band atoms: entry value in row k at column k+offset.
#   ("const", c)            -> c
#   ("qpow", s)             -> q^(k+s)
#   ("neg_qpow", s)         -> -q^(k+s)
#   ("one_minus_qpow", s)   -> 1 - q^(k+s)
KIND_BANDS = {
    "identity": ((0, ("const", 1)),),
    "alpha": ((0, ("qpow", 0)),),
    "delta": ((-1, ("one_minus_qpow", 0)),),
    "epsilon": ((1, ("const", 1)),),
    "alt_alpha": ((0, ("qpow", 0)), (1, ("qpow", 1))),
    "alt_delta": ((1, ("const", 1)),),
    "alt_epsilon": ((0, ("neg_qpow", 1)), (-1, ("one_minus_qpow", 0))),
}

KINDS = tuple(KIND_BANDS)

# Two-type operators as single banded letters, per family.
X_LETTER_BANDS = {
    "standard": {
        1: ((0, ("const", 1)), (-1, ("one_minus_qpow", 0))),
        2: ((0, ("qpow", 0)),),
        HOLE: ((0, ("const", 1)), (1, ("const", 1))),
    },
    "alternative": {
        1: ((0, ("one_minus_qpow", 1)), (-1, ("one_minus_qpow", 0))),
        2: ((0, ("qpow", 0)), (1, ("qpow", 1))),
        HOLE: ((0, ("const", 1)), (1, ("const", 1))),
    },
}


def _atom_value(atom, k: int, q):
    tag, arg = atom
    if tag == "const":
        return arg
    if tag == "qpow":
        return q ** (k + arg)
    if tag == "neg_qpow":
        return -(q ** (k + arg))
    if tag == "one_minus_qpow":
        return 1 - q ** (k + arg)
    raise ValueError(f"unknown atom {tag!r}")


@dataclass(frozen=True)
class StructuredOperator:
    """One of the banded building-block matrices, truncated to M x M."""

    kind: str
    M: int

    def __post_init__(self):
        if self.kind not in KIND_BANDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.M < 1:
            raise ValueError("truncation size must be positive")

    @property
    def bands(self):
        return KIND_BANDS[self.kind]

    def entry(self, i: int, j: int, q):
        for off, atom in self.bands:
            if j - i == off:
                return _atom_value(atom, i, q)
        return 0.0 if isinstance(q, float) else 0

    def dense(self, q):
        """Truncated matrix: a numpy array for float q, otherwise a list of
        lists of exact scalars (Fraction or QPoly)."""
        M = self.M
        if isinstance(q, float):
            out = np.zeros((M, M))
            for i in range(M):
                for off, atom in self.bands:
                    j = i + off
                    if 0 <= j < M:
                        out[i, j] = _atom_value(atom, i, q)
            return out
        zero = QPoly() if isinstance(q, QPoly) else Fraction(0)
        out = [[zero] * M for _ in range(M)]
        for i in range(M):
            for off, atom in self.bands:
                j = i + off
                if 0 <= j < M:
                    v = _atom_value(atom, i, q)
                    out[i][j] = v if isinstance(q, QPoly) else Fraction(v)
        return out

    def sparse(self, q: float):
        from scipy import sparse
        M = self.M
        mat = sparse.lil_matrix((M, M))
        for i in range(M):
            for off, atom in self.bands:
                j = i + off
                if 0 <= j < M:
                    mat[i, j] = _atom_value(atom, i, float(q))
        return mat.tocsr()


@dataclass(frozen=True)
class TensorWord:
    """A tensor product of banded building blocks (one per coordinate)."""

    factors: tuple[StructuredOperator, ...]

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(f.kind for f in self.factors)


@dataclass(frozen=True)
class XOperator:
    """Type-indexed operator at a given class level, as a lazy sum of
    (tensor word) x (previous-level operator) terms."""

    label: object
    level: int
    terms: tuple[tuple[TensorWord, object], ...]


def _word_kinds(N: int, arrival, output) -> tuple[str, ...] | None:
    """Per-coordinate building-block kinds of the transfer word sending the
    previous-level symbol ``arrival`` to the output symbol ``output``.
    Returns None for incompatible pairs (a departure cannot outrank the
    arrival it serves, and an unused service needs no arrival)."""
    if output == N and arrival != HOLE:
        return None
    if output != HOLE and output != N:
        if arrival != HOLE and int(arrival) < int(output):
            return None
    kinds = []
    for c in range(1, N):
        if output != HOLE and int(output) > c:
            kinds.append("alpha")
        elif output != HOLE and int(output) == c and arrival != c:
            kinds.append("delta")
        elif arrival != HOLE and int(arrival) == c and output != c:
            kinds.append("epsilon")
        else:
            kinds.append("identity")
    return tuple(kinds)


def build_X(N: int, M: int) -> dict:
    """Operators for every symbol at class level N, truncated at M per
    tensor factor.  Terms stay as (word, previous-level symbol) pairs; the
    order-N(N-1)/2 tensor products are never materialized here."""
    if N < 1:
        raise ValueError("need at least one class")
    labels = list(range(1, N + 1)) + [HOLE]
    if N == 1:
        return {lab: XOperator(lab, 1, ()) for lab in labels}
    prev_labels = list(range(1, N)) + [HOLE]
    out = {}
    for lab in labels:
        terms = []
        for m in prev_labels:
            kinds = _word_kinds(N, m, lab)
            if kinds is None:
                continue
            word = TensorWord(tuple(StructuredOperator(k, M) for k in kinds))
            terms.append((word, m))
        out[lab] = XOperator(lab, N, tuple(terms))
    return out


# -- closed-form cyclic traces of banded words --------------------------------

def cyclic_band_trace(site_bands: Sequence, q, _memo: dict | None = None):
    """Exact trace of a cyclic product of banded semi-infinite matrices.

    ``site_bands[i]`` lists the bands of factor i as (offset, atom) pairs.
    Every closed nonnegative path contributes a product of band entries;
    grouping paths by their band choices leaves geometric series in the
    starting level, summed in closed form.  Raises when a path family has
    no decay (the trace genuinely diverges).
    """
    L = len(site_bands)
    key = None
    if _memo is not None:
        key = tuple(tuple(b) for b in site_bands)
        if key in _memo:
            return _memo[key]
    if isinstance(q, QPoly):
        q = QRational(q)
    zero = 0.0 if isinstance(q, float) else 0
    total = zero

    def leaf(sign, consts, a, b, offs, min_prefix):
        nonlocal total
        k0 = max(0, -min_prefix)
        for r in range(len(offs) + 1):
            for T in combinations(offs, r):
                e = a + r
                if e == 0:
                    raise ValueError(
                        "trace diverges: a closed path family has no decay "
                        "(every class needs at least one lower-priority "
                        "particle)")
                t_sign = -sign if r % 2 else sign
                term = (q ** (b + sum(T) + e * k0)) / (1 - q ** e)
                total = total + t_sign * consts * term

    def walk(i, prefix, min_prefix, sign, consts, a, b, offs):
        if i == L:
            if prefix == 0:
                leaf(sign, consts, a, b, offs, min_prefix)
            return
        for off, (tag, arg) in site_bands[i]:
            npref = prefix + off
            nmin = min(min_prefix, npref)
            if tag == "const":
                walk(i + 1, npref, nmin, sign, consts * arg, a, b, offs)
            elif tag == "qpow":
                walk(i + 1, npref, nmin, sign, consts,
                     a + 1, b + prefix + arg, offs)
            elif tag == "neg_qpow":
                walk(i + 1, npref, nmin, -sign, consts,
                     a + 1, b + prefix + arg, offs)
            elif tag == "one_minus_qpow":
                walk(i + 1, npref, nmin, sign, consts,
                     a, b, offs + [prefix + arg])
            else:
                raise ValueError(f"unknown atom {tag!r}")

    walk(0, 0, 0, 1, 1, 0, 0, [])
    if _memo is not None:
        _memo[key] = total
    return total


def _kind_word_trace(kinds: Sequence[str], q, memo: dict):
    key = tuple(kinds)
    if key not in memo:
        memo[key] = cyclic_band_trace([KIND_BANDS[k] for k in kinds], q)
    return memo[key]


def trace_exact(config, q, n_classes: int | None = None,
                _tables: dict | None = None,
                _words: dict | None = None):
    """Exact trace of the operator product around the ring.

    Sums, over compatible previous-level symbol sequences, the product of
    per-coordinate closed-form cyclic traces times the previous-level
    trace, memoized per level.  Exact for Fraction or symbolic q.
    """
    types = config.types if isinstance(config, RingConfig) else tuple(config)
    N = n_classes
    if N is None:
        N = max((int(v) for v in types if v != HOLE), default=1)
    tables = {} if _tables is None else _tables
    words = {} if _words is None else _words
    return _trace_rec(types, N, q, tables, words)


def _trace_rec(types: tuple, N: int, q, tables: dict, words: dict):
    if N <= 1:
        return 1.0 if isinstance(q, float) else 1
    key = (N, types)
    if key in tables:
        return tables[key]
    L = len(types)
    budget = [0] * N  # arrivals of class c remaining; index N-1 counts holes
    for v in types:
        if v != HOLE and int(v) <= N - 1:
            budget[int(v) - 1] += 1
    budget[N - 1] = L - sum(budget)
    zero = 0.0 if isinstance(q, float) else 0
    total = zero
    site_options = []
    for v in types:
        if v == HOLE:
            opts = list(range(1, N)) + [HOLE]
        elif int(v) == N:
            opts = [HOLE]
        else:
            opts = list(range(int(v), N)) + [HOLE]
        site_options.append(opts)
    arrival = [HOLE] * L

    def rec(i):
        nonlocal total
        if i == L:
            A = tuple(arrival)
            w = None
            for c in range(1, N):
                kinds = []
                for s in range(L):
                    v = types[s]
                    a = A[s]
                    if v != HOLE and int(v) > c:
                        kinds.append("alpha")
                    elif v == c and a != c:
                        kinds.append("delta")
                    elif a == c and v != c:
                        kinds.append("epsilon")
                    else:
                        kinds.append("identity")
                t = _kind_word_trace(kinds, q, words)
                w = t if w is None else w * t
            total = total + w * _trace_rec(A, N - 1, q, tables, words)
            return
        for a in site_options[i]:
            slot = N - 1 if a == HOLE else int(a) - 1
            if budget[slot] == 0:
                continue
            budget[slot] -= 1
            arrival[i] = a
            rec(i + 1)
            budget[slot] += 1

    rec(0)
    tables[key] = total
    return total


def _letter_trace(types: tuple, q, family: str, memo: dict):
    bands = X_LETTER_BANDS[family]
    letters = []
    for v in types:
        lab = HOLE if v == HOLE else int(v)
        letters.append(bands[lab])
    return cyclic_band_trace(letters, q, _memo=memo)


# -- truncated dense/sparse reference trace -----------------------------------

DENSE_DIM_CAP = 2_000_000


_SPARSE_X_CACHE: dict = {}


def _sparse_X(N: int, M: int, q: float) -> dict:
    # cached across calls: a doubling sweep hits the same (N, M, q) once
    # per arrangement
    from scipy import sparse
    key = (N, M, q)
    cached = _SPARSE_X_CACHE.get(key)
    if cached is not None:
        return cached
    if N == 1:
        one = sparse.identity(1, format="csr")
        out = {1: one, HOLE: one}
    else:
        prev = _sparse_X(N - 1, M, q)
        ops = build_X(N, M)
        out = {}
        for lab, xop in ops.items():
            acc = None
            for word, m in xop.terms:
                mat = None
                for f in word.factors:
                    fs = f.sparse(q)
                    mat = fs if mat is None else sparse.kron(mat, fs,
                                                             format="csr")
                mat = sparse.kron(mat, prev[m], format="csr")
                acc = mat if acc is None else acc + mat
            out[lab] = acc.tocsr()
    if len(_SPARSE_X_CACHE) > 32:
        _SPARSE_X_CACHE.clear()
    _SPARSE_X_CACHE[key] = out
    return out


def dense_trace(config, q, M: int, n_classes: int | None = None) -> float:
    """Trace of the product of truncated operators (float arithmetic).

    Memory grows as M^(N(N-1)/2); a dimension cap keeps this usable only
    for small class counts, which is its role: an independent reference
    for the closed-form path summation.
    """
    types = config.types if isinstance(config, RingConfig) else tuple(config)
    N = n_classes
    if N is None:
        N = max((int(v) for v in types if v != HOLE), default=1)
    if N == 1:
        return 1.0
    dim = M ** (N * (N - 1) // 2)
    if dim > DENSE_DIM_CAP:
        raise ValueError(
            f"truncated tensor space of dimension {dim} exceeds the cap "
            f"{DENSE_DIM_CAP}; use the exact path-sum method")
    ops = _sparse_X(N, M, float(q))
    mats = [ops[HOLE if v == HOLE else int(v)] for v in types]
    half = len(mats) // 2
    left = mats[0]
    for m in mats[1:half] or []:
        left = left @ m
    right = None
    for m in mats[half:]:
        right = m if right is None else right @ m
    if right is None:
        return float(left.diagonal().sum())
    return float(left.multiply(right.T).sum())


# -- stationary distributions and reports -------------------------------------

@dataclass(frozen=True)
class TraceResult:
    """Unnormalized trace, normalized probability, and truncation tail."""

    unnormalized: object
    normalized: object
    tail_bound: object


def _as_counts(counts, L):
    if isinstance(counts, ParticleCounts):
        return counts
    if L is None:
        raise ValueError("ring size L is required")
    return ParticleCounts(tuple(counts), L)


def _traces_for_counts(pc: ParticleCounts, q, method: str, M, tol,
                       family: str) -> tuple[dict, dict]:
    """Traces for every arrangement with these counts; returns
    (trace dict, tail-bound dict)."""
    N = pc.N
    if any(k < 1 for k in pc.counts):
        raise ValueError("all class counts must be >= 1")
    if pc.total >= pc.L:
        raise ValueError("the trace representation needs at least one hole")
    traces: dict = {}
    tails: dict = {}
    if family == "alternative":
        if N != 2:
            raise ValueError("the alternative operators are two-class only")
        memo: dict = {}
        for types in arrangements(pc.counts, pc.L):
            traces[types] = _letter_trace(types, q, "alternative", memo)
            tails[types] = 0.0 if isinstance(q, float) else 0
        return traces, tails
    if method in ("auto", "exact"):
        tables: dict = {}
        words: dict = {}
        for types in arrangements(pc.counts, pc.L):
            traces[types] = _trace_rec(types, N, q, tables, words)
            tails[types] = 0.0 if isinstance(q, float) else 0
        return traces, tails
    if method == "dense":
        m0 = M if M else pc.total + 10
        for types in arrangements(pc.counts, pc.L):
            t, gap = _dense_doubling(types, q, N, m0, tol)
            traces[types] = t
            tails[types] = gap
        return traces, tails
    raise ValueError(f"unknown method {method!r}")


def _dense_doubling(types, q, N, m0: int, tol: float):
    m = m0
    prev = dense_trace(types, q, m, n_classes=N)
    while True:
        m *= 2
        try:
            cur = dense_trace(types, q, m, n_classes=N)
        except ValueError as exc:
            raise ValueError(
                f"trace did not converge to {tol} before the truncation "
                f"cap: {exc}") from exc
        gap = abs(cur - prev)
        if gap < tol:
            return cur, gap
        prev = cur


def stationary_weight_trace(config, q, M: int | None = None,
                            tol: float = 1e-12,
                            method: str = "auto") -> TraceResult:
    """Stationary weight of one configuration via the operator trace.

    ``method='exact'`` (the default under 'auto') evaluates the infinite
    trace in closed form with zero tail; ``method='dense'`` doubles the
    truncation from M until successive traces differ by less than tol.
    The normalization sums traces over all arrangements with the same
    particle counts.
    """
    types = config.types if isinstance(config, RingConfig) else tuple(config)
    pc = RingConfig(types).particle_counts()
    traces, tails = _traces_for_counts(pc, q, method, M, tol, "standard")
    Z = None
    for v in traces.values():
        Z = v if Z is None else Z + v
    t = traces[types]
    return TraceResult(t, t / Z, tails[types])


def stationary_distribution_trace(counts, q, L: int | None = None,
                                  method: str = "auto",
                                  M: int | None = None,
                                  tol: float = 1e-12,
                                  family: str = "standard") -> dict:
    """Normalized stationary distribution over all arrangements.

    A full ring (no holes) is handled by dropping the lowest class: its
    particles behave exactly like holes, so the distribution is computed
    with one class fewer and relabeled back.
    """
    pc = _as_counts(counts, L)
    if pc.total == pc.L:
        if pc.N == 1:
            state = tuple([1] * pc.L)
            return {state: 1.0 if isinstance(q, float) else Fraction(1)}
        sub = stationary_distribution_trace(
            ParticleCounts(pc.counts[:-1], pc.L), q,
            method=method, M=M, tol=tol, family=family)
        out = {}
        for types, p in sub.items():
            lifted = tuple(pc.N if v == HOLE else v for v in types)
            out[lifted] = p
        return out
    traces, _ = _traces_for_counts(pc, q, method, M, tol, family)
    Z = None
    for v in traces.values():
        Z = v if Z is None else Z + v
    return {types: v / Z for types, v in traces.items()}


def trace_report(counts, q, L: int | None = None, method: str = "auto",
                 M: int | None = None, tol: float = 1e-12) -> str:
    """TSV report: config, unnormalized, normalized, tail_bound."""
    pc = _as_counts(counts, L)
    traces, tails = _traces_for_counts(pc, q, method, M, tol, "standard")
    Z = None
    for v in traces.values():
        Z = v if Z is None else Z + v
    lines = ["config\tunnormalized\tnormalized\ttail_bound"]
    for types in sorted(traces, key=lambda t: tuple(
            (0, int(v)) if v != HOLE else (1, 0) for v in t)):
        cfg = " ".join("inf" if v == HOLE else str(int(v)) for v in types)
        t = traces[types]
        lines.append(f"{cfg}\t{t}\t{t / Z}\t{tails[types]}")
    return "\n".join(lines)


# -- algebra checks ------------------------------------------------------------

@dataclass(frozen=True)
class RelationReport:
    """Outcome of the quadratic-algebra check on truncated matrices."""

    ok: bool
    family: str
    M: int
    checked_window: int
    first_failure: tuple | None = None


_RELATION_ROLES = {
    "standard": ("delta", "epsilon", "alpha"),
    "alternative": ("alt_epsilon", "alt_delta", "alt_alpha"),
}


def _matmul(A, B, M):
    out = [[None] * M for _ in range(M)]
    for i in range(M):
        Ai = A[i]
        for j in range(M):
            acc = None
            for k in range(M):
                a = Ai[k]
                if not a:
                    continue
                b = B[k][j]
                if not b:
                    continue
                p = a * b
                acc = p if acc is None else acc + p
            out[i][j] = acc if acc is not None else 0
    return out


def check_fundamental_relations(M: int, family: str = "standard",
                                q=None, perturbation=None) -> RelationReport:
    """Verify the quadratic algebra on the truncation interior [0, M-2]^2.

    With symbolic q (the default) the three relations are checked as
    polynomial identities entry by entry; the last row and column are
    excluded since truncation corrupts them.  ``perturbation`` is a
    (kind, row, col, value) tuple added to one matrix, used as a negative
    control: the report then locates the first failing entry.
    """
    if M < 3:
        raise ValueError("need M >= 3 to have a truncation interior")
    if family not in _RELATION_ROLES:
        raise ValueError(f"unknown family {family!r}")
    if q is None:
        q = Q
    d_kind, e_kind, a_kind = _RELATION_ROLES[family]
    mats = {k: StructuredOperator(k, M).dense(q)
            for k in (d_kind, e_kind, a_kind)}
    if perturbation is not None:
        kind, i, j, value = perturbation
        mats[kind] = [row[:] for row in mats[kind]]
        mats[kind][i][j] = mats[kind][i][j] + value
    d, e, a = mats[d_kind], mats[e_kind], mats[a_kind]

    def is_zero(x):
        if isinstance(x, QPoly):
            return x.is_zero
        if isinstance(x, float):
            return abs(x) < 1e-12
        return x == 0

    one_minus_q = 1 - q if not isinstance(q, QPoly) else ONE - q
    ed = _matmul(e, d, M)
    de = _matmul(d, e, M)
    ad = _matmul(a, d, M)
    da = _matmul(d, a, M)
    ea = _matmul(e, a, M)
    ae = _matmul(a, e, M)
    relations = [
        (f"{e_kind}.{d_kind} - q {d_kind}.{e_kind} = (1-q) identity",
         lambda i, j: ed[i][j] - q * de[i][j]
         - (one_minus_q if i == j else 0)),
        (f"{a_kind}.{d_kind} = q {d_kind}.{a_kind}",
         lambda i, j: ad[i][j] - q * da[i][j]),
        (f"{e_kind}.{a_kind} = q {a_kind}.{e_kind}",
         lambda i, j: ea[i][j] - q * ae[i][j]),
    ]
    for name, resid in relations:
        for i in range(M - 1):
            for j in range(M - 1):
                r = resid(i, j)
                if not is_zero(r):
                    return RelationReport(False, family, M, M - 1,
                                          (name, i, j, r))
    return RelationReport(True, family, M, M - 1)


@dataclass(frozen=True)
class AltComparison:
    L: int
    counts: tuple
    q: object
    n_configs: int
    n_equal: int
    max_diff: object

    @property
    def equal(self) -> bool:
        return self.n_equal == self.n_configs


@dataclass(frozen=True)
class AltCheckReport:
    relations: RelationReport
    comparisons: tuple

    @property
    def all_equal(self) -> bool:
        return self.relations.ok and all(c.equal for c in self.comparisons)


def alt_matrices_check(L_max: int = 6, qs: Iterable = (Fraction(1, 3),
                                                       Fraction(1, 2)),
                       M: int = 10) -> AltCheckReport:
    """Check the alternative operator family.

    (a) the alternative triple satisfies the quadratic algebra on the
    truncation interior (symbolic); (b) for two classes and every count
    vector with at least one hole on rings up to L_max, the normalized
    alternative traces equal the standard ones at each given q.
    """
    if L_max > 6:
        raise ValueError("checked range is L <= 6")
    rel = check_fundamental_relations(M, family="alternative")
    rows = []
    for L in range(3, L_max + 1):
        for k1 in range(1, L - 1):
            for k2 in range(1, L - k1):
                counts = (k1, k2)
                for q in qs:
                    std = stationary_distribution_trace(counts, q, L=L)
                    alt = stationary_distribution_trace(
                        counts, q, L=L, family="alternative")
                    n_eq = 0
                    max_diff = None
                    for types, p in std.items():
                        diff = alt[types] - p
                        neg = diff if _nonneg(diff) else -diff
                        if not neg:
                            n_eq += 1
                        if max_diff is None or _less(max_diff, neg):
                            max_diff = neg
                    rows.append(AltComparison(L, counts, q, len(std),
                                              n_eq, max_diff))
    return AltCheckReport(rel, tuple(rows))


def _nonneg(x) -> bool:
    if isinstance(x, QRational):
        return x.evaluate_at(Fraction(1, 3)) >= 0
    if isinstance(x, QPoly):
        return x.evaluate_at(Fraction(1, 3)) >= 0
    return x >= 0


def _less(a, b) -> bool:
    d = b - a
    return _nonneg(d) and bool(d)
