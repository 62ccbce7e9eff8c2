"""Ring and line configurations for the multi-type exclusion process.

A configuration assigns each site of the ring Z_L a value in
{1, ..., N, inf}: smaller numbers are higher-priority particle classes and
``HOLE`` (float infinity) marks an empty site.  Adjacent values sort into
increasing order at rate 1 and back at rate q, so every class count is
conserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

HOLE = math.inf

SiteValue = float  # int class labels plus the HOLE sentinel


def _check_site(v) -> SiteValue:
    if v == HOLE:
        return HOLE
    if isinstance(v, int) and v >= 1:
        return v
    if isinstance(v, float) and v.is_integer() and v >= 1:
        return int(v)
    raise ValueError(f"site value must be a class label >= 1 or HOLE, got {v!r}")


@dataclass(frozen=True)
class ParticleCounts:
    """Class sizes (k_1, ..., k_N) on a ring of L sites."""

    counts: tuple[int, ...]
    L: int

    def __post_init__(self):
        if any(k < 0 for k in self.counts):
            raise ValueError("class counts must be non-negative")
        if self.total > self.L:
            raise ValueError(f"{self.total} particles exceed {self.L} sites")

    @property
    def N(self) -> int:
        return len(self.counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def prefix(self, n: int) -> int:
        """Cumulative count k_1 + ... + k_n."""
        return sum(self.counts[:n])

    @property
    def holes(self) -> int:
        return self.L - self.total


@dataclass(frozen=True)
class RingConfig:
    """Immutable ring configuration.

    Parameters
    ----------
    types : tuple
        Site values, length L, each a class label in 1..N or HOLE.
    N : int, optional
        Number of classes.  Defaults to the largest label present; pass
        explicitly when trailing classes may be empty.
    """

    types: tuple[SiteValue, ...]
    N: int = -1

    def __post_init__(self):
        types = tuple(_check_site(v) for v in self.types)
        object.__setattr__(self, "types", types)
        largest = max((v for v in types if v != HOLE), default=0)
        n = self.N
        if n == -1:
            n = int(largest)
        if largest != 0 and largest > n:
            raise ValueError(f"label {largest} exceeds class count N={n}")
        object.__setattr__(self, "N", n)

    @property
    def L(self) -> int:
        return len(self.types)

    def __iter__(self) -> Iterator[SiteValue]:
        return iter(self.types)

    def __getitem__(self, i: int) -> SiteValue:
        return self.types[i % len(self.types)]

    def particle_counts(self) -> ParticleCounts:
        counts = [0] * self.N
        for v in self.types:
            if v != HOLE:
                counts[int(v) - 1] += 1
        return ParticleCounts(tuple(counts), self.L)

    def project(self, n: int) -> "RingConfig":
        """Collapse classes <= n to a single class and the rest to holes.

        The projected process is a one-type exclusion process whose
        stationary law is uniform over particle placements.
        """
        if n < 1:
            raise ValueError(f"projection threshold must be >= 1, got {n}")
        return RingConfig(tuple(1 if v <= n else HOLE for v in self.types),
                          N=1)

    def rotate(self, s: int) -> "RingConfig":
        """Rotate the viewpoint: site i of the result reads site i + s."""
        L = self.L
        return RingConfig(tuple(self.types[(i + s) % L] for i in range(L)),
                          N=self.N)

    def relabel_last_as_holes(self) -> "RingConfig":
        """Turn the lowest-priority class N into holes.

        Class-N particles interact with every other value exactly as holes
        do (they yield to all higher classes and never swap with each
        other), so the relabeled process has identical dynamics.
        """
        return RingConfig(tuple(HOLE if v == self.N else v
                                for v in self.types), N=self.N - 1)

    def to_text(self) -> str:
        return " ".join("inf" if v == HOLE else str(int(v))
                        for v in self.types)

    @classmethod
    def from_text(cls, text: str, N: int = -1) -> "RingConfig":
        vals = []
        for tok in text.split():
            vals.append(HOLE if tok == "inf" else int(tok))
        return cls(tuple(vals), N=N)

    def __str__(self) -> str:
        return self.to_text()


@dataclass(frozen=True)
class WindowConfig:
    """A window of consecutive sites cut from a line configuration."""

    offset: int
    types: tuple[SiteValue, ...]

    def __post_init__(self):
        object.__setattr__(self, "types",
                           tuple(_check_site(v) for v in self.types))

    def __len__(self) -> int:
        return len(self.types)

    def to_text(self) -> str:
        return " ".join("inf" if v == HOLE else str(int(v))
                        for v in self.types)


def arrangements(counts: Sequence[int], L: int) -> Iterator[tuple]:
    """Yield every ring configuration with the given class sizes.

    Configurations are emitted as plain tuples (labels and HOLE) in
    lexicographic order with HOLE sorting last.
    """
    counts = tuple(counts)
    if sum(counts) > L:
        raise ValueError("more particles than sites")
    symbols: list[SiteValue] = []
    multiplicities: list[int] = []
    for label, k in enumerate(counts, start=1):
        if k > 0:
            symbols.append(label)
            multiplicities.append(k)
    holes = L - sum(counts)
    if holes > 0:
        symbols.append(HOLE)
        multiplicities.append(holes)

    out: list[SiteValue] = [0] * L

    def rec(pos: int, remaining: list[int]) -> Iterator[tuple]:
        if pos == L:
            yield tuple(out)
            return
        for s, m in enumerate(remaining):
            if m == 0:
                continue
            remaining[s] -= 1
            out[pos] = symbols[s]
            yield from rec(pos + 1, remaining)
            remaining[s] += 1

    yield from rec(0, multiplicities)


def count_arrangements(counts: Sequence[int], L: int) -> int:
    """Multinomial count of distinct configurations."""
    total = math.factorial(L)
    used = 0
    for k in counts:
        total //= math.factorial(k)
        used += k
    return total // math.factorial(L - used)
