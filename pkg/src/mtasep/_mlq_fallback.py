"""Pure-Python queue-assignment engine.

Mirror of the compiled kernel: same inputs, same uniform-consumption
pattern, same arithmetic, so outputs are bit-for-bit interchangeable.
"""

from __future__ import annotations

import math

import numpy as np


class Fenwick:
    """Binary indexed tree over site flags with rank selection."""

    __slots__ = ("n", "tree", "total")

    def __init__(self, n: int):
        self.n = n
        self.tree = [0] * (n + 1)
        self.total = 0

    def add(self, i: int, delta: int):
        self.total += delta
        i += 1
        while i <= self.n:
            self.tree[i] += delta
            i += i & (-i)

    def prefix(self, i: int) -> int:
        """Count of flags in [0, i]."""
        s = 0
        i += 1
        while i > 0:
            s += self.tree[i]
            i -= i & (-i)
        return s

    def select(self, k: int) -> int:
        """Smallest index with prefix count >= k (k is 1-based)."""
        pos = 0
        log = self.n.bit_length()
        rem = k
        for step in range(log, -1, -1):
            nxt = pos + (1 << step)
            if nxt <= self.n and self.tree[nxt] < rem:
                pos = nxt
                rem -= self.tree[nxt]
        return pos  # 0-based site index


def _choose_rank(u: float, q: float, R: int) -> int:
    """Truncated-geometric index: smallest j in 1..R with
    (1 - q^j) >= u (1 - q^R), via one log when q > 0."""
    if R <= 1 or q <= 0.0:
        return 1
    t = 1.0 - u * (1.0 - q ** R)
    j = int(math.ceil(math.log(t) / math.log(q) - 1e-12))
    if j < 1:
        return 1
    if j > R:
        return R
    return j


def assign_line(arrival_sites, service_sites, L: int, q: float, uniforms):
    """Assign each arrival (in the given order) a distinct service site.

    A still-free service at the arrival's own site is taken outright;
    otherwise the j-th free service strictly after it in cyclic order is
    drawn with weight q^(j-1), consuming one uniform.
    """
    arrival_sites = np.asarray(arrival_sites, dtype=np.int64)
    service_sites = np.asarray(service_sites, dtype=np.int64)
    n_arr = len(arrival_sites)
    out = np.empty(n_arr, dtype=np.int64)
    free = bytearray(L)
    fen = Fenwick(L)
    for s in service_sites:
        free[s] = 1
        fen.add(int(s), 1)
    ptr = 0
    for idx in range(n_arr):
        a = int(arrival_sites[idx])
        if free[a]:
            chosen = a
        else:
            R = fen.total
            j = _choose_rank(float(uniforms[ptr]), q, R)
            ptr += 1
            after = fen.total - fen.prefix(a)
            if j <= after:
                rank = fen.prefix(a) + j
            else:
                rank = j - after
            chosen = fen.select(rank)
        free[chosen] = 0
        fen.add(chosen, -1)
        out[idx] = chosen
    return out
