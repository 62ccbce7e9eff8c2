"""Exact stationary sampling via stacked cyclic queue assignments.

A sample is built line by line: line 1 is a uniform subset of particles;
line n serves the particles of line n-1 (as arrivals, in priority order)
with a fresh uniform set of services, assigning each arrival the j-th
free service after it in cyclic order with weight q^(j-1), a free service
at the arrival's own site being taken outright.  The bottom line is then
distributed exactly as the ring stationary state.

The geometric-marks variant drives the same assignment deterministically
from per-service rejection quotas, and yields the minimal compatible
queue process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .ring import HOLE, ParticleCounts, RingConfig
from . import _mlq_fallback

try:
    from . import _mlq_kernel
except ImportError:
    _mlq_kernel = None

HAVE_KERNEL = _mlq_kernel is not None


def kernel_in_use(engine: str = "auto") -> bool:
    if engine in ("python", "fallback"):
        return False
    if engine == "kernel":
        if not HAVE_KERNEL:
            raise RuntimeError("compiled kernel not available")
        return True
    if engine != "auto":
        raise ValueError(f"unknown engine {engine!r}")
    return HAVE_KERNEL


def services_from_sites(sites, L: int) -> tuple:
    """Service process with services exactly at the given sites."""
    out = [HOLE] * L
    for s in sites:
        out[s] = 1
    return tuple(out)


def arrivals_from_sites(typed_sites: dict, L: int) -> tuple:
    """Arrival process from a {site: class} mapping."""
    out = [HOLE] * L
    for s, t in typed_sites.items():
        out[s] = int(t)
    return tuple(out)


def _arrival_order(A: Sequence) -> list[int]:
    """Arrival sites in processing order: by class, then left to right."""
    return [i for _, i in sorted(
        (int(A[i]), i) for i in range(len(A)) if A[i] != HOLE)]


def _service_sites(S: Sequence) -> list[int]:
    return [i for i in range(len(S)) if S[i] != HOLE]


def _departures(A, S, assignment: dict, n_classes: int) -> tuple:
    L = len(A)
    D = [HOLE] * L
    for i in range(L):
        if S[i] != HOLE:
            D[i] = n_classes
    for a, s in assignment.items():
        D[s] = int(A[a])
    return tuple(D)


def _choose_rank_exact(u: float, q: Fraction, R: int) -> int:
    """Smallest j in 1..R with (1 - q^j) >= u (1 - q^R), exactly."""
    if R <= 1 or q == 0:
        return 1
    target = Fraction(u) * (1 - q ** R)
    power = Fraction(1)
    for j in range(1, R):
        power *= q
        if 1 - power >= target:
            return j
    return R


def _assign_exact(arrival_sites, service_sites, L, q: Fraction, uniforms):
    fen = _mlq_fallback.Fenwick(L)
    free = bytearray(L)
    for s in service_sites:
        free[s] = 1
        fen.add(s, 1)
    out = []
    ptr = 0
    for a in arrival_sites:
        if free[a]:
            chosen = a
        else:
            j = _choose_rank_exact(float(uniforms[ptr]), q, fen.total)
            ptr += 1
            after = fen.total - fen.prefix(a)
            rank = fen.prefix(a) + j if j <= after else j - after
            chosen = fen.select(rank)
        free[chosen] = 0
        fen.add(chosen, -1)
        out.append(chosen)
    return out


def assign_departures(A: Sequence, S: Sequence, q, rng,
                      engine: str = "auto") -> tuple[dict, tuple]:
    """Assign services to arrivals; return ({arrival site: service site},
    departure configuration).

    Arrivals are processed by class then left to right.  With Fraction q
    the weighted choice runs in exact arithmetic; float q uses the
    compiled kernel when built (identical algorithm either way).  Used
    services emit the served class, free ones the next class up, and
    non-service sites stay holes.
    """
    L = len(A)
    if len(S) != L:
        raise ValueError("A and S must have equal length")
    order = _arrival_order(A)
    services = _service_sites(S)
    if len(services) < len(order):
        raise ValueError("fewer services than arrivals")
    n_classes = max((int(A[i]) for i in order), default=0) + 1
    uniforms = rng.random(len(order))
    if isinstance(q, Fraction) and engine != "kernel":
        chosen = _assign_exact(order, services, L, q, uniforms)
    else:
        impl = _mlq_kernel if kernel_in_use(engine) else _mlq_fallback
        chosen = impl.assign_line(
            np.asarray(order, dtype=np.int64),
            np.asarray(services, dtype=np.int64),
            L, float(q), uniforms)
    assignment = {a: int(s) for a, s in zip(order, chosen)}
    return assignment, _departures(A, S, assignment, n_classes)


@dataclass(frozen=True)
class MultiLineDiagram:
    """Stacked ring configurations with the assignment maps that link
    consecutive lines; the bottom line is the stationary sample."""

    lines: tuple[RingConfig, ...]
    assignments: tuple[dict, ...]

    @property
    def bottom(self) -> RingConfig:
        return self.lines[-1]

    def dump(self) -> str:
        parts = [line.to_text() for line in self.lines]
        for n, amap in enumerate(self.assignments, start=2):
            for a in sorted(amap):
                parts.append(f"assign {n}: {a}->{amap[a]}")
        return "\n".join(parts)


def sample_multitype(counts, q, rng, L: int | None = None,
                     engine: str = "auto") -> MultiLineDiagram:
    """Draw one exact stationary sample as a full multi-line diagram."""
    pc = counts if isinstance(counts, ParticleCounts) else \
        ParticleCounts(tuple(counts), L)
    if any(k < 1 for k in pc.counts):
        raise ValueError("all class counts must be >= 1")
    L = pc.L
    k1 = pc.counts[0]
    sites = rng.choice(L, size=k1, replace=False)
    line = [HOLE] * L
    for s in sites:
        line[int(s)] = 1
    lines = [RingConfig(tuple(line), N=1)]
    assignments = []
    prev = tuple(line)
    for n in range(2, pc.N + 1):
        Kn = pc.prefix(n)
        ssites = rng.choice(L, size=Kn, replace=False)
        S = services_from_sites((int(s) for s in ssites), L)
        amap, D = assign_departures(prev, S, q, rng, engine=engine)
        lines.append(RingConfig(D, N=n))
        assignments.append(amap)
        prev = D
    return MultiLineDiagram(tuple(lines), tuple(assignments))


def sample_marks(S: Sequence, q, rng) -> dict:
    """Independent geometric rejection quotas on the service set:
    P(b) = q^b (1-q)."""
    qf = float(q)
    if not 0 <= qf < 1:
        raise ValueError("q must be in [0, 1)")
    sites = _service_sites(S)
    if qf == 0:
        return {s: 0 for s in sites}
    draws = rng.geometric(1.0 - qf, size=len(sites))
    return {s: int(b) - 1 for s, b in zip(sites, draws)}


def _marked_assignment(A, S, marks: dict):
    """Run the assignment with services rejecting their first b offers.

    Returns (assignment map, per-customer records (site_in, site_out,
    full tours))."""
    L = len(A)
    order = _arrival_order(A)
    services = _service_sites(S)
    if len(services) <= len(order):
        raise ValueError("need more services than arrivals")
    free = {s: True for s in services}
    quota = dict(marks)
    assignment = {}
    records = []
    for a in order:
        if free.get(a):
            free[a] = False
            assignment[a] = a
            records.append((a, a, 0))
            continue
        rejections_at_winner = 0
        probes = 0
        pos = a
        while True:
            pos = (pos + 1) % L
            if pos == a:
                continue
            if not free.get(pos):
                continue
            probes += 1
            if quota.get(pos, 0) > 0:
                quota[pos] -= 1
                continue
            free[pos] = False
            assignment[a] = pos
            n_free = sum(1 for v in free.values() if v) + 1
            rejections_at_winner = (probes - 1) // n_free
            records.append((a, pos, rejections_at_winner))
            break
    return assignment, records


def qmin_from_marks(A: Sequence, S: Sequence, b: dict) -> tuple:
    """Minimal queue process compatible with the marks, and its departures.

    Builds the per-customer contribution process (occupancy interval plus
    one full ring per rejected tour of the winning match), then lowers
    each class-prefix by its largest compatible constant, which realizes
    the minimal process level by level.
    """
    L = len(A)
    n_classes = max((int(v) for v in A if v != HOLE), default=0) + 1
    width = n_classes - 1
    assignment, records = _marked_assignment(A, S, b)
    hat = [[0] * L for _ in range(width)]
    for (site_in, site_out, tours) in records:
        t = int(A[site_in]) - 1
        if tours:
            for i in range(L):
                hat[t][i] += tours
        pos = site_in
        while pos != site_out:
            pos = (pos + 1) % L
            hat[t][pos] += 1
    D = _departures(A, S, assignment, n_classes)
    # lower each prefix by its largest compatible shift
    prefix = [[sum(hat[t][i] for t in range(n + 1)) for i in range(L)]
              for n in range(width)]
    shifts = []
    for n in range(width):
        m = min(prefix[n])
        for i in _service_sites(S):
            arr_le = A[i] != HOLE and int(A[i]) <= n + 1
            dep_le = D[i] != HOLE and int(D[i]) <= n + 1
            if not arr_le and dep_le:
                m = min(m, prefix[n][i] - b[i] - 1)
        shifts.append(m)
    out = []
    for i in range(L):
        levels = [prefix[n][i] - shifts[n] for n in range(width)]
        per_type = [levels[0]] + [levels[n] - levels[n - 1]
                                  for n in range(1, width)]
        if any(v < 0 for v in per_type):
            raise AssertionError("prefix-minimal process has a negative "
                                 "class count")
        out.append(per_type[0] if width == 1 else tuple(per_type))
    return tuple(out), D


def marks_compatible(A: Sequence, S: Sequence, Q: Sequence,
                     b: dict) -> bool:
    """Whether the valid process Q is compatible with rejection quotas b:
    at every service and class prefix, an uncovered service needs quota at
    least the waiting count, a covering departure needs strictly less."""
    from .weights import departure_process, _lift_queue
    D = departure_process(A, S, Q)
    Ql = _lift_queue(Q)
    width = len(Ql[0])
    for i in _service_sites(S):
        for n in range(1, width + 1):
            if A[i] != HOLE and int(A[i]) <= n:
                continue
            waiting = sum(Ql[i][:n])
            dep = D[i] != HOLE and int(D[i]) <= n
            if dep and not b[i] < waiting:
                return False
            if not dep and not b[i] >= waiting:
                return False
    return True
