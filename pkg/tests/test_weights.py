"""Queue-process validity, site weights, and closed-form weight sums."""

from fractions import Fraction
from itertools import combinations

import pytest

from mtasep.oracle import stationary_distribution, total_variation
from mtasep.qpoly import ONE, Q, QPoly, QRational
from mtasep.ring import HOLE, arrangements
from mtasep.weights import (
    InvalidProcess,
    departure_process,
    exact_departure_distribution,
    site_weight,
    total_weight,
    weight_sum_exact,
    weight_sum_truncated,
)

A4 = (1, HOLE, HOLE, HOLE)
S4 = (HOLE, 1, HOLE, 1)


def test_departure_reconstruction():
    assert departure_process(A4, S4, (0, 1, 1, 1)) == (HOLE, 2, HOLE, 1)
    assert departure_process(A4, S4, (0, 1, 0, 0)) == (HOLE, 1, HOLE, 2)


def test_unmatchable_balance_is_invalid():
    with pytest.raises(InvalidProcess) as exc:
        departure_process((1, HOLE, HOLE), (HOLE, 1, HOLE), (0, 0, 0))
    assert exc.value.site == 0
    assert "without a service" in exc.value.reason


def test_negative_queue_is_invalid():
    with pytest.raises(InvalidProcess):
        departure_process(A4, S4, (0, -1, 0, 0))


def test_arrival_outranked_is_invalid():
    # a class-2 departure cannot happen while a class-1 arrival is waiting
    A = (1, HOLE, HOLE)
    S = (1, HOLE, 1)
    Q = ((0, 1), (1, 0), (1, 0))
    with pytest.raises(InvalidProcess) as exc:
        departure_process(A, S, Q)
    assert exc.value.site == 0
    assert "outranked" in exc.value.reason


def test_site_weights_two_type():
    Q_ = (0, 1, 1, 1)
    assert site_weight(A4, S4, Q_, 0, Q) == 1
    assert site_weight(A4, S4, Q_, 1, Q) == Q
    assert site_weight(A4, S4, Q_, 3, Q) == ONE - Q


def test_total_weight_examples():
    assert total_weight(A4, S4, (0, 1, 1, 1), Q) == Q * (ONE - Q)
    assert total_weight(A4, S4, (1, 2, 2, 2), Q) == Q ** 2 * (ONE - Q ** 2)
    # at q = 0 the minimal process is the only one with nonzero weight
    assert total_weight(A4, S4, (0, 1, 1, 1), Fraction(0)) == 0
    assert total_weight(A4, S4, (0, 1, 0, 0), Fraction(0)) == 1


def test_window_mode_takes_boundary():
    D = departure_process((1, HOLE), (HOLE, 1), (0, 1, 0))
    assert D == (HOLE, 1)


def test_weight_sum_two_type_closed_form():
    assert weight_sum_exact(A4, S4, Q) == QRational(ONE, ONE - Q)


def test_weight_sum_truncated_is_exact_with_tail():
    for M in (0, 1, 5):
        trunc, tail = weight_sum_truncated(A4, S4, Fraction(1, 2), M)
        assert trunc + tail == 2
        assert tail >= 0
    trunc, tail = weight_sum_truncated(A4, S4, Fraction(0), 0)
    assert trunc == 1 and tail == 0


def test_weight_sum_rejects_divergent_q():
    with pytest.raises(ValueError):
        weight_sum_exact(A4, S4, 1)
    with pytest.raises(ValueError):
        weight_sum_truncated(A4, S4, Fraction(3, 2), 4)


def _service_vectors(L, K):
    for sites in combinations(range(L), K):
        yield tuple(1 if i in sites else HOLE for i in range(L))


def _arrival_vectors(counts, L):
    if not counts:
        yield (HOLE,) * L
        return
    yield from arrangements(counts, L)


@pytest.mark.parametrize("counts, L", [((1, 1), 4), ((2, 1), 4), ((1, 1, 1), 5)])
def test_weight_sum_constant_across_inputs(counts, L):
    # the full weight sum depends only on the class sizes: the geometric
    # series over shift class n carries exponent k_{n+1} + ... + k_N
    K = sum(counts)
    expected = Fraction(1)
    suffix = 0
    for k in reversed(counts[1:]):
        suffix += k
        expected /= 1 - Fraction(1, 2) ** suffix
    for A in _arrival_vectors(counts[:-1], L):
        for S in _service_vectors(L, K):
            assert weight_sum_exact(A, S, Fraction(1, 2)) == expected


def test_weight_sum_constant_symbolically():
    expected = QRational(ONE, ONE - Q)
    for A in _arrival_vectors((1,), 4):
        for S in _service_vectors(4, 2):
            assert weight_sum_exact(A, S, Q) == expected


def test_distribution_three_sites_symbolic():
    dist = exact_departure_distribution((1, 1), Q, L=3)
    assert dist[(1, 2, HOLE)] == QRational(QPoly((2, 1)), QPoly((9, 9)))
    assert sum(dist.values(), QRational(0)) == QRational(1)


def test_distribution_three_sites_tasep():
    dist = exact_departure_distribution((1, 1), 0, L=3)
    assert dist[(1, 2, HOLE)] == Fraction(2, 9)
    assert dist[(2, 1, HOLE)] == Fraction(1, 9)


@pytest.mark.parametrize("counts, L, q", [
    ((1, 1), 3, Fraction(1, 2)),
    ((1, 1), 4, Fraction(9, 10)),
    ((2, 1), 4, Fraction(1, 3)),
    ((1, 1, 1), 5, Fraction(1, 2)),
])
def test_distribution_matches_oracle(counts, L, q):
    dist = exact_departure_distribution(counts, q, L=L)
    oracle = stationary_distribution(counts, q, L=L, mode="exact")
    assert total_variation(dist, oracle) == 0


def test_distribution_rejects_oversized_ring():
    with pytest.raises(ValueError):
        exact_departure_distribution((1, 1), 0.5, L=7)
    with pytest.raises(ValueError):
        exact_departure_distribution((1, 0), 0.5, L=4)
    with pytest.raises(ValueError):
        exact_departure_distribution((4, 3), 0.5, L=6)
