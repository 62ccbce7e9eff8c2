"""Banded operators, tensor recursion, and stationary traces."""

from fractions import Fraction

import numpy as np
import pytest

from mtasep.matprod import (
    StructuredOperator,
    alt_matrices_check,
    build_X,
    check_fundamental_relations,
    stationary_distribution_trace,
    stationary_weight_trace,
    trace_report,
)
from mtasep.oracle import stationary_distribution, total_variation
from mtasep.qpoly import Q, QPoly, QRational
from mtasep.ring import HOLE, RingConfig
from mtasep.weights import exact_departure_distribution


def test_operator_entries():
    a = StructuredOperator("alpha", 5)
    d = StructuredOperator("delta", 5)
    e = StructuredOperator("epsilon", 5)
    assert a.entry(2, 2, Q) == Q ** 2
    assert a.entry(2, 3, Q) == 0
    assert d.entry(3, 2, Q) == 1 - Q ** 3
    assert e.entry(1, 2, Q) == 1
    with pytest.raises(ValueError):
        StructuredOperator("gamma", 5)
    with pytest.raises(ValueError):
        StructuredOperator("alpha", 0)


@pytest.mark.parametrize("q", [0.0, 0.3, 0.9])
def test_row_stochastic_below_boundary(q):
    M = 7
    eps = StructuredOperator("epsilon", M).dense(q)
    da = (StructuredOperator("delta", M).dense(q)
          + StructuredOperator("alpha", M).dense(q))
    assert np.allclose(eps[: M - 1].sum(axis=1), 1.0)
    assert np.allclose(da[: M - 1].sum(axis=1), 1.0)


def test_build_X_two_classes():
    X = build_X(2, 8)
    assert {(w.kinds, m) for w, m in X[1].terms} == {
        (("identity",), 1), (("delta",), HOLE)}
    assert {(w.kinds, m) for w, m in X[2].terms} == {(("alpha",), HOLE)}
    assert {(w.kinds, m) for w, m in X[HOLE].terms} == {
        (("epsilon",), 1), (("identity",), HOLE)}


def test_build_X_three_classes_drops_outranked_words():
    X = build_X(3, 6)
    # no word may turn a higher-priority input symbol into a lower class
    assert sorted(str(m) for _, m in X[2].terms) == ["2", "inf"]
    assert [m for _, m in X[3].terms] == [HOLE]
    hole_words = {m: w.kinds for w, m in X[HOLE].terms}
    assert hole_words[HOLE] == ("identity", "identity")


def test_fundamental_relations_symbolic():
    report = check_fundamental_relations(10)
    assert report.ok
    assert report.checked_window == 9


def test_fundamental_relations_tasep():
    assert check_fundamental_relations(3, q=Fraction(0)).ok


def test_fundamental_relations_negative_control():
    report = check_fundamental_relations(
        6, perturbation=("delta", 2, 1, Fraction(1, 7)))
    assert not report.ok
    name, i, j, resid = report.first_failure
    assert "delta" in name
    assert (i, j) == (1, 1)
    assert resid


def test_relations_need_interior():
    with pytest.raises(ValueError):
        check_fundamental_relations(2)


def test_trace_three_sites_symbolic():
    r = stationary_weight_trace((1, 2, HOLE), Q)
    assert r.unnormalized == QRational(QPoly((2, 1)), QPoly((1, 0, -1)))
    assert r.normalized == QRational(QPoly((2, 1)), QPoly((9, 9)))
    assert r.tail_bound == 0
    r2 = stationary_weight_trace((2, 1, HOLE), Q)
    assert r2.unnormalized == QRational(QPoly((1, 2)), QPoly((1, 0, -1)))


def test_trace_three_sites_tasep():
    dist = stationary_distribution_trace((1, 1), Fraction(0), L=3)
    assert dist[(1, 2, HOLE)] == Fraction(2, 9)
    assert dist[(2, 1, HOLE)] == Fraction(1, 9)


def test_trace_normalization_sums_to_one():
    dist = stationary_distribution_trace((1, 1), Q, L=3)
    assert len(dist) == 6
    assert sum(dist.values(), QRational(0)) == QRational(1)


def test_trace_uniform_at_symmetric_point():
    dist = stationary_distribution_trace((1, 1), Q, L=4)
    for v in dist.values():
        assert v.evaluate_at(1) == Fraction(1, 12)


def test_trace_rotation_invariance():
    c = RingConfig((1, HOLE, 2, 1, HOLE))
    base = stationary_weight_trace(c, Q).normalized
    for s in range(1, 5):
        assert stationary_weight_trace(c.rotate(s), Q).normalized == base


@pytest.mark.parametrize("counts, L, q", [
    ((1, 1), 4, Fraction(1, 2)),
    ((2, 1), 5, Fraction(1, 3)),
    ((1, 1, 1), 5, Fraction(1, 2)),
    ((1, 2, 1), 5, Fraction(9, 10)),
])
def test_trace_matches_oracle_exactly(counts, L, q):
    dist = stationary_distribution_trace(counts, q, L=L)
    oracle = stationary_distribution(counts, q, L=L, mode="exact")
    assert total_variation(dist, oracle) == 0


def test_trace_matches_weight_enumeration_symbolically():
    dist = stationary_distribution_trace((1, 1), Q, L=4)
    byweights = exact_departure_distribution((1, 1), Q, L=4)
    for types, v in dist.items():
        assert v == byweights[types]


def test_full_ring_relabels_lowest_class():
    dist = stationary_distribution_trace((1, 1, 1), Fraction(1, 2), L=3)
    oracle = stationary_distribution((1, 1, 1), Fraction(1, 2), L=3,
                                     mode="exact")
    assert total_variation(dist, oracle) == 0


def test_dense_doubling_agrees_with_exact():
    q = 0.7
    exact = stationary_distribution_trace((1, 1), q, L=4)
    dense = stationary_distribution_trace((1, 1), q, L=4, method="dense",
                                          tol=1e-13)
    assert total_variation(exact, dense) < 1e-10


def test_dense_doubling_three_classes():
    q = 0.2
    exact = stationary_distribution_trace((1, 1, 1), q, L=5)
    dense = stationary_distribution_trace((1, 1, 1), q, L=5, method="dense",
                                          tol=1e-9)
    assert total_variation(exact, dense) < 1e-8


def test_alternative_family_matches_standard():
    report = alt_matrices_check(L_max=4, qs=(Fraction(0), Fraction(1, 2)))
    assert report.relations.ok
    assert report.all_equal
    assert any(c.L == 3 and c.q == Fraction(1, 2) for c in report.comparisons)


def test_alternative_family_tasep_values():
    dist = stationary_distribution_trace((1, 1), Fraction(0), L=3,
                                         family="alternative")
    assert dist[(1, 2, HOLE)] == Fraction(2, 9)


def test_alternative_family_two_classes_only():
    with pytest.raises(ValueError):
        stationary_distribution_trace((1, 1, 1), Fraction(1, 2), L=5,
                                      family="alternative")
    with pytest.raises(ValueError):
        alt_matrices_check(L_max=7)


def test_trace_requires_positive_counts_and_a_hole():
    with pytest.raises(ValueError):
        stationary_weight_trace((1, 2, 2), Fraction(1, 2))
    with pytest.raises(ValueError):
        stationary_distribution_trace((1, 0, 1), Fraction(1, 2), L=5)
    with pytest.raises(ValueError):
        stationary_distribution_trace((1, 1), Fraction(1, 2), L=4,
                                      method="magic")


def test_trace_report_format():
    text = trace_report((1, 1), Fraction(1, 2), L=3)
    lines = text.splitlines()
    assert lines[0] == "config\tunnormalized\tnormalized\ttail_bound"
    assert len(lines) == 7
    assert all(len(line.split("\t")) == 4 for line in lines[1:])
