from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from polyfactory.bernstein import (
    BMonomial,
    BPolynomial,
    canonical,
    coeff_sum,
    divide_by_monomial,
    evaluate,
    from_json,
    max_degree,
    multiply,
    poly_equal,
    to_json,
)

N = 3
exps = st.lists(st.integers(0, 3), min_size=N, max_size=N)
coeffs = st.fractions(min_value=Fraction(1, 9), max_value=7, max_denominator=9)
monos = st.builds(lambda a, b, c: BMonomial(tuple(a), tuple(b), c), exps, exps, coeffs)
polys = st.lists(monos, min_size=1, max_size=4).map(lambda ms: BPolynomial(N, tuple(ms)))
interior = st.lists(st.fractions(min_value=0, max_value=1, max_denominator=50), min_size=N, max_size=N).filter(
    lambda x: all(0 < v < 1 for v in x)
)
cube = st.lists(st.fractions(min_value=0, max_value=1, max_denominator=50), min_size=N, max_size=N)


def sympy_value(p: BPolynomial, x) -> sympy.Rational:
    xs = sympy.symbols(f"x0:{p.n}")
    expr = sum(
        sympy.Rational(m.coeff.numerator, m.coeff.denominator)
        * sympy.Mul(*[xs[i] ** m.a[i] * (1 - xs[i]) ** m.b[i] for i in range(p.n)])
        for m in p.monomials
    )
    return sympy.expand(expr).subs({xs[i]: sympy.Rational(v.numerator, v.denominator) for i, v in enumerate(x)})


def test_from_sets_and_evaluate_small_case():
    m = BMonomial.from_sets(3, ones=[0, 1], zeros=[0, 2], coeff=2)
    assert m.a == (1, 1, 0) and m.b == (1, 0, 1)
    x = [Fraction(1, 2), Fraction(1, 3), Fraction(1, 4)]
    assert m.evaluate(x) == 2 * Fraction(1, 2) * Fraction(1, 2) * Fraction(1, 3) * Fraction(3, 4)


def test_rejects_bad_monomials():
    with pytest.raises(ValueError):
        BMonomial((1,), (0,), 0)
    with pytest.raises(ValueError):
        BMonomial((1,), (-1,), 1)
    with pytest.raises(ValueError):
        BMonomial((1, 0), (0,), 1)
    with pytest.raises(ValueError):
        evaluate(BPolynomial(2, (BMonomial((1, 0), (0, 0)),)), [Fraction(1, 2)])


@given(polys, cube)
@settings(max_examples=40, deadline=None)
def test_evaluate_matches_power_basis_expansion(p, x):
    assert evaluate(p, x) == sympy_value(p, x)


@given(polys, interior)
@settings(max_examples=80, deadline=None)
def test_positive_on_open_cube(p, x):
    assert evaluate(p, x) > 0


@given(polys, polys, cube)
@settings(max_examples=60, deadline=None)
def test_multiply_is_pointwise_product(p, q, x):
    assert evaluate(multiply(p, q), x) == evaluate(p, x) * evaluate(q, x)


@given(polys, monos)
@settings(max_examples=60, deadline=None)
def test_divide_undoes_multiply(p, m):
    m = BMonomial(m.a, m.b, 1)
    prod = multiply(p, BPolynomial(N, (m,)))
    assert poly_equal(divide_by_monomial(prod, m), p)


def test_divide_reports_non_divisible():
    p = BPolynomial(2, (BMonomial((1, 0), (0, 0)), BMonomial((0, 0), (0, 1))))
    assert divide_by_monomial(p, BMonomial((1, 0), (0, 0))) is None


@given(polys)
@settings(max_examples=40, deadline=None)
def test_json_round_trip_and_canonical(p):
    assert from_json(to_json(p)) == p
    c = canonical(p)
    assert poly_equal(c, p)
    assert coeff_sum(c) == coeff_sum(p)
    assert canonical(c) == c


def test_canonical_merges_duplicates():
    m = BMonomial((1, 0), (0, 1), Fraction(1, 3))
    p = BPolynomial(2, (m, m))
    assert canonical(p).monomials == (BMonomial((1, 0), (0, 1), Fraction(2, 3)),)
    assert max_degree(p) == (1, 1)


def test_equal_values_different_forms():
    # x(1-x) + x^2 and x are equal functions but different forms
    p = BPolynomial(1, (BMonomial((1,), (1,)), BMonomial((2,), (0,))))
    q = BPolynomial(1, (BMonomial((1,), (0,)),))
    assert not poly_equal(p, q)
    assert all(evaluate(p, [Fraction(t, 7)]) == evaluate(q, [Fraction(t, 7)]) for t in range(8))
