"""Exact polynomial and rational-function arithmetic in q."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtasep.qpoly import (
    ONE,
    Q,
    QPoly,
    QRational,
    common_denominator,
    qfact,
    qint,
)

coeff_lists = st.lists(st.integers(min_value=-9, max_value=9), max_size=6)
polys = coeff_lists.map(QPoly)
nonzero_polys = polys.filter(bool)


def test_qint_small_values():
    assert qint(0) == QPoly(())
    assert qint(1) == ONE
    assert qint(3) == QPoly((1, 1, 1))
    assert qint(4).evaluate_at(2) == 15


def test_qfact_small_values():
    assert qfact(0) == ONE
    assert qfact(2) == QPoly((1, 1))
    assert qfact(3) == QPoly((1, 2, 2, 1))


@pytest.mark.parametrize("n", range(2, 13))
def test_qfact_recursion(n):
    assert qfact(n) == qfact(n - 1) * qint(n)


def test_qint_qfact_reject_negative():
    with pytest.raises(ValueError):
        qint(-1)
    with pytest.raises(ValueError):
        qfact(-2)


def test_common_denominator_four_singletons():
    expected = QPoly((96,)) * qint(2) ** 2 * qint(3)
    assert common_denominator((1, 1, 1, 1), 4) == expected


def test_common_denominator_two_on_four():
    assert common_denominator((1, 1), 4) == QPoly((24,)) * qint(2)


def test_common_denominator_full_ring_pair():
    # when the final prefix fills the ring the remaining slots are forced,
    # so only the counting factor 2 = binom(2, 1) survives
    assert common_denominator((1, 1), 2) == QPoly((2,))


@pytest.mark.parametrize("L", range(1, 9))
def test_common_denominator_all_singletons(L):
    got = common_denominator((1,) * L, L)
    count = math.prod(math.comb(L, j) for j in range(1, L + 1))
    by_facts = QPoly((count,))
    for n in range(2, L):
        by_facts = by_facts * qfact(n)
    by_powers = QPoly((count,))
    for i in range(2, L):
        by_powers = by_powers * qint(i) ** (L - i)
    assert got == by_facts == by_powers


def test_common_denominator_rejects_bad_counts():
    with pytest.raises(ValueError):
        common_denominator((), 3)
    with pytest.raises(ValueError):
        common_denominator((1, 0), 3)
    with pytest.raises(ValueError):
        common_denominator((2, 2), 3)
    with pytest.raises(ValueError):
        common_denominator((1, 1))


def test_exact_divide():
    num = ONE - Q ** 2
    assert num.exact_divide(ONE - Q) == ONE + Q
    with pytest.raises(ValueError):
        (ONE + Q).exact_divide(ONE - Q)


def test_evaluate_at_fraction():
    assert qint(3).evaluate_at(Fraction(1, 2)) == Fraction(7, 4)
    assert qint(3).evaluate_at(0.5) == pytest.approx(1.75)


@given(polys, polys, polys)
def test_ring_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * b == b * a
    assert a * (b + c) == a * b + a * c
    assert (a - b) + b == a


@given(polys, nonzero_polys)
@settings(max_examples=200)
def test_divmod_reconstructs(a, b):
    quo, rem = divmod(a, b)
    assert quo * b + rem == a
    assert rem.is_zero or rem.degree < b.degree


@given(polys, nonzero_polys)
def test_exact_divide_inverts_product(a, b):
    assert (a * b).exact_divide(b) == a


@given(polys)
def test_poly_str_parse_roundtrip(p):
    assert QPoly.parse(str(p)) == p


def test_qrational_reduces():
    r = QRational(ONE - Q ** 2, ONE - Q)
    assert r.is_polynomial
    assert r.as_poly() == ONE + Q
    assert QRational(Q * 2, Q * 4) == QRational(1, 2)


def test_qrational_rejects_zero_denominator():
    with pytest.raises(ZeroDivisionError):
        QRational(ONE, QPoly(()))


def test_qrational_arithmetic():
    half = QRational(1, 2)
    r = QRational(ONE, ONE - Q)
    assert r - r == QRational(0)
    assert r * (ONE - Q) == QRational(1)
    assert half + half == QRational(1)
    assert 1 / r == QRational(ONE - Q)


def test_qrational_evaluate_and_pole():
    r = QRational(ONE, ONE - Q)
    assert r.evaluate_at(Fraction(1, 3)) == Fraction(3, 2)
    with pytest.raises(ZeroDivisionError):
        r.evaluate_at(1)


@given(coeff_lists, st.lists(st.integers(min_value=-9, max_value=9),
                             min_size=1, max_size=6).filter(any))
def test_substitute_inverse_is_involution(num, den):
    r = QRational(QPoly(num), QPoly(den))
    assert r.substitute_inverse().substitute_inverse() == r


@pytest.mark.parametrize("x", [Fraction(1, 3), Fraction(5, 2), Fraction(-2)])
def test_substitute_inverse_evaluates_at_reciprocal(x):
    r = QRational(ONE + Q * 3, ONE + Q ** 2)
    assert r.substitute_inverse().evaluate_at(x) == r.evaluate_at(1 / x)


@given(coeff_lists, st.lists(st.integers(min_value=-9, max_value=9),
                             min_size=1, max_size=6).filter(any))
def test_qrational_str_parse_roundtrip(num, den):
    r = QRational(QPoly(num), QPoly(den))
    assert QRational.parse(str(r)) == r
