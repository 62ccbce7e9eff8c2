"""Discrete-time priority queues on the line and their clustering laws.

The two-type stationary measure on the line is the departure process of
a single queue: at each step an arrival occurs with probability lam and
a service is offered with probability mu, and an offered service is
refused by each waiting customer independently with probability q (a
customer that arrived this very step must accept).  Departures, unused
services, and idle steps give the three output symbols.  Chaining N-1
such queues in tandem upgrades an (N-1)-type input to an N-type output;
run from equilibrium, the output restricted to a window is the N-type
stationary law there.

Alongside the samplers this module carries the closed forms attached to
that construction: adjacent-pair probabilities of the two-type measure,
the limiting pair density of the rescaled type process with its
diagonal atom, the q-series identity behind the diagonal mass, and the
critically-tilted random walk whose record times bound convoy returns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matprod import StructuredOperator
from .ring import HOLE, WindowConfig

MAX_QUEUE_TRUNCATION = 100_000


def _check_q(q) -> None:
    if not 0 <= q < 1:
        raise ValueError(f"asymmetry must lie in [0, 1), got {q}")


@dataclass(frozen=True)
class LineQueueParams:
    """Rates of a single stable queue: arrivals lam, services mu."""

    lam: float
    mu: float
    q: float

    def __post_init__(self):
        if not 0 < self.lam < 1 or not 0 < self.mu < 1:
            raise ValueError("rates must lie strictly inside (0, 1)")
        if self.lam >= self.mu:
            raise ValueError("stability needs lam < mu")
        _check_q(self.q)

    @property
    def load(self) -> float:
        """Geometric ratio lam(1-mu) / ((1-lam)mu), strictly below 1."""
        return self.lam * (1 - self.mu) / ((1 - self.lam) * self.mu)


@dataclass(frozen=True)
class TandemParams:
    """Per-type densities for the tandem of queues producing N types.

    Queue r (r = 1..N-1) receives the departures of queue r-1 (queue 1
    receives a Bernoulli stream of density densities[0]) and offers
    services at rate densities[0] + ... + densities[r], so successive
    partial sums must stay strictly increasing and below one.
    """

    densities: tuple[float, ...]
    q: float

    def __post_init__(self):
        object.__setattr__(self, "densities", tuple(self.densities))
        if not self.densities:
            raise ValueError("need at least one density")
        total = 0.0
        for lam in self.densities:
            if lam <= 0:
                raise ValueError("densities must be positive")
            total += lam
        if total >= 1:
            raise ValueError("densities must sum to less than 1")
        _check_q(self.q)

    @property
    def n_types(self) -> int:
        return len(self.densities)

    @property
    def service_rates(self) -> tuple[float, ...]:
        """Service rate of queue r is the density of its output types."""
        sums = np.cumsum(self.densities)
        return tuple(float(s) for s in sums[1:])


@dataclass(frozen=True)
class EquilibriumPi:
    """Truncated queue-length law plus a bound on the discarded tail.

    probs[k] approximates the stationary chance of k customers; tail is
    an upper bound on everything past the truncation, normalized so
    that sum(probs) + tail == 1.
    """

    probs: tuple[float, ...]
    tail: float

    def __len__(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs)

    def sample(self, rng) -> int:
        """Draw a queue length; tail mass collapses onto the cut point."""
        cum = np.cumsum(self.probs)
        return int(min(np.searchsorted(cum, rng.random(), side="right"),
                       len(self.probs) - 1))


def queue_transition_matrix(p: LineQueueParams, T: int) -> np.ndarray:
    """Row-stochastic one-step matrix of the queue length on 0..T.

    Departures move one step down with the service accepted against
    k waiting refusals, arrivals without service move up, everything
    else holds.  The last row leaks its up-step mass past the cut, so
    only rows 0..T-1 sum to one.
    """
    if T < 2:
        raise ValueError("truncation must cover at least 0..2")
    M = T + 1
    q = p.q
    ident = np.eye(M)
    alpha = StructuredOperator("alpha", M).dense(q)
    delta = StructuredOperator("delta", M).dense(q)
    epsilon = StructuredOperator("epsilon", M).dense(q)
    hold = (1 - p.lam) * (1 - p.mu) + p.lam * p.mu
    return (hold * ident + p.lam * (1 - p.mu) * epsilon
            + (1 - p.lam) * p.mu * (delta + alpha))


def _truncated_law(ratio_at, tail_tol: float) -> EquilibriumPi:
    """Grow weights by ratio_at(k) until a geometric bound is negligible."""
    weights = [1.0]
    total = 1.0
    for k in range(1, MAX_QUEUE_TRUNCATION):
        ratio = ratio_at(k)
        w = weights[-1] * ratio
        if w == 0.0:
            break
        weights.append(w)
        total += w
        # the ratio only decreases with k, so it bounds the whole tail
        if ratio < 1 and w * ratio / (1 - ratio) < tail_tol * total:
            break
    else:
        raise RuntimeError("queue-length law did not converge; "
                           "rates too close to critical")
    ratio = ratio_at(len(weights))
    bound = weights[-1] * ratio / (1 - ratio) if ratio < 1 else 0.0
    Z = total + bound
    return EquilibriumPi(tuple(w / Z for w in weights), bound / Z)


def equilibrium_pi(p: LineQueueParams, tail_tol: float = 1e-12
                   ) -> EquilibriumPi:
    """Stationary queue-length law, truncated below tail_tol.

    Successive weights shrink by load / (1 - q^k), which drops toward
    the subcritical load, so the tail past the truncation is controlled
    by a geometric series.
    """
    rho = p.load
    return _truncated_law(lambda k: rho / (1 - p.q ** k), tail_tol)


def tilted_pi(lam: float, mu: float, q: float,
              tail_tol: float = 1e-12) -> EquilibriumPi:
    """Queue-length law seen just after an unused service.

    Conditioning on a refused service tilts the stationary law by q^k.
    Unlike the plain equilibrium this stays normalizable at lam == mu
    (the ratio tends to q), which is the regime the convoy walk uses.
    """
    if not 0 <= lam <= mu <= 1 or mu == 0:
        raise ValueError("need 0 <= lam <= mu <= 1 with mu > 0")
    _check_q(q)
    if q == 0 or lam == 0 or mu == 1:
        return EquilibriumPi((1.0,), 0.0)
    rho = lam * (1 - mu) / ((1 - lam) * mu)
    return _truncated_law(lambda k: q * rho / (1 - q ** k), tail_tol)


def default_burn_in(p: TandemParams) -> int:
    """Left buffer before emission: max(10/gap, 1000) over the queues.

    Queue r's service rate exceeds its arrival density by densities[r],
    and that gap sets its relaxation scale.
    """
    gap = min(p.densities[1:], default=1.0)
    return int(max(10.0 / gap, 1000))


def sample_line_config(p: TandemParams, window: tuple[int, int], rng,
                       burn_in: int | None = None,
                       tail_tol: float = 1e-9) -> WindowConfig:
    """Sample the N-type stationary law on window = [a, b].

    Each queue starts from its marginal equilibrium occupancy (split
    over classes in proportion to the arrival densities) and the tandem
    is then run jointly through a burn-in buffer left of the window, so
    only the emitted sites are returned.  The default buffer comes from
    default_burn_in; pass burn_in to override it.
    """
    a, b = window
    if b < a:
        raise ValueError("empty window")
    width = b - a + 1
    N = p.n_types
    lam1 = p.densities[0]
    if N == 1:
        draws = rng.random(width)
        return WindowConfig(a, tuple(1 if u < lam1 else HOLE
                                     for u in draws))
    if burn_in is None:
        burn_in = default_burn_in(p)

    queues: list[list[int]] = []
    for r in range(1, N):
        lam_in = float(sum(p.densities[:r]))
        marginal = equilibrium_pi(
            LineQueueParams(lam_in, p.service_rates[r - 1], p.q), tail_tol)
        split = np.asarray(p.densities[:r]) / lam_in
        queues.append(list(rng.multinomial(marginal.sample(rng), split)))

    q = p.q
    rates = p.service_rates
    uniform = rng.random
    out: list = []
    for step in range(burn_in + width):
        arrival = 1 if uniform() < lam1 else 0
        for idx, counts in enumerate(queues):
            if uniform() >= rates[idx]:
                if arrival:
                    counts[arrival - 1] += 1
                arrival = 0
                continue
            if arrival:
                counts[arrival - 1] += 1
            # offer the service class by class; an empty class never
            # takes it, the arriving customer always does
            u = uniform()
            carry = 1.0
            depart = 0
            for n in range(1, idx + 2):
                if n == arrival:
                    passed = 0.0
                else:
                    m = counts[n - 1]
                    passed = carry * q ** m if m else carry
                if u >= passed:
                    depart = n
                    break
                carry = passed
            if depart:
                counts[depart - 1] -= 1
                arrival = depart
            else:
                arrival = idx + 2  # unused service: lowest priority out
        if step >= burn_in:
            out.append(arrival if arrival else HOLE)
    return WindowConfig(a, tuple(out))


def pair_correlations(lam, mu, q):
    """Adjacent-pair probabilities (2 then hole, 2 then 2, 2 then 1).

    Closed forms for the two-type line measure with first-class density
    lam and second-class density mu - lam; the three numbers sum to the
    second-class density.
    """
    if not 0 <= lam < mu <= 1:
        raise ValueError("need 0 <= lam < mu <= 1")
    _check_q(q)
    gap = mu - lam
    nu_2_hole = gap * (1 - mu)
    nu_2_2 = gap * ((1 - lam) * mu - q * lam * (1 - mu))
    nu_2_1 = gap * (lam * mu + q * lam * (1 - mu))
    return nu_2_hole, nu_2_2, nu_2_1


def clustering_densities(x: float, y: float, q: float):
    """Pair density of the rescaled-type limit at (x, y).

    Returns (f(x, y), f*(x), masses) where f is the off-diagonal
    density (1 below the diagonal, 2(1-q)(x-y)+q above it, taken
    one-sidedly at x == y), f* the density of the diagonal atom, and
    masses the triple (below, diagonal, above) = (1/2, (1-q)/6,
    (2+q)/6).
    """
    if not 0 <= x <= 1 or not 0 <= y <= 1:
        raise ValueError("coordinates must lie in [0, 1]")
    _check_q(q)
    f = 1.0 if x < y else 2 * (1 - q) * (x - y) + q
    fstar = (1 - q) * x * (1 - x)
    return f, fstar, (0.5, (1 - q) / 6, (2 + q) / 6)


def clustering_quadrature(q: float, nodes: int = 64):
    """Integrate the pair density numerically over its three regions.

    Gauss-Legendre over each triangle (mapped to the unit square) and
    the diagonal; returns (below, diagonal, above) masses for checking
    against the closed forms in clustering_densities.
    """
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    xg = 0.5 * (xg + 1)
    wg = 0.5 * wg
    below = above = diag = 0.0
    for xi, wi in zip(xg, wg):
        diag += wi * clustering_densities(xi, xi, q)[1]
        for tj, wj in zip(xg, wg):
            scale = wi * wj * (1 - xi)
            below += scale * clustering_densities(xi, xi + tj * (1 - xi),
                                                  q)[0]
            above += scale * clustering_densities(xi + tj * (1 - xi), xi,
                                                  q)[0]
    return below, diag, above


def q_series_identity_check(alpha: float, q: float, terms: int) -> float:
    """Residual of the tilting identity between two q-series.

    Compares sum_k alpha^k q^{2k} / ((1-q)...(1-q^k)) against
    (1 - alpha q) sum_k alpha^k q^k / ((1-q)...(1-q^k)), both truncated
    to `terms` summands (k = 0..terms-1), and returns |LHS - RHS|.
    """
    if not abs(alpha) < 1:
        raise ValueError("need |alpha| < 1")
    _check_q(q)
    if terms < 1:
        raise ValueError("need at least one term")
    lhs = plain = 0.0
    poch = 1.0
    for k in range(terms):
        if k:
            poch *= 1 - q ** k
        lhs += alpha ** k * q ** (2 * k) / poch
        plain += alpha ** k * q ** k / poch
    return abs(lhs - (1 - alpha * q) * plain)


def q_series_truncation_gap(alpha: float, q: float, terms: int) -> float:
    """Exact gap between the two truncated sides of the identity.

    The difference telescopes: after `terms` summands the sides differ
    by precisely alpha^terms q^terms / ((1-q)...(1-q^{terms-1})), which
    is what q_series_identity_check converges to.  The identity itself
    holds in the limit, but at fixed truncation this gap is the floor
    the residual cannot beat.
    """
    poch = 1.0
    for k in range(1, terms):
        poch *= 1 - q ** k
    return alpha ** terms * q ** terms / poch


def convoy_walk(x: float, q: float, steps: int, rng) -> set[int]:
    """Record times of the critically-tilted queue walk.

    Starting from the tilted law at lam == mu == x, each step goes up
    with chance x(1-x), holds with chance x^2 + (1-x)^2, and splits the
    remaining x(1-x) between a recorded hold (q^k of it) and a step
    down.  Returns the set of recorded steps in 1..steps; its growth
    mirrors how often a tagged particle meets its convoy again.
    """
    if not 0 < x < 1:
        raise ValueError("need 0 < x < 1")
    _check_q(q)
    k = tilted_pi(x, x, q, tail_tol=1e-15).sample(rng)
    p_up = x * (1 - x)
    p_hold = x * x + (1 - x) * (1 - x)
    recorded: set[int] = set()
    draws = rng.random(steps)
    for i in range(1, steps + 1):
        u = draws[i - 1]
        if u < p_up:
            k += 1
        elif u < p_up + p_hold:
            continue
        elif u < p_up + p_hold + p_up * q ** k:
            recorded.add(i)
        else:
            k -= 1
    return recorded
