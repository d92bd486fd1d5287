from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from instances import laplace_det, small_rational
from polyfactory import linalg
from polyfactory.randomness import ExternalRandomness

fractions = st.fractions(min_value=-5, max_value=5, max_denominator=9)


def square(n):
    return st.lists(st.lists(fractions, min_size=n, max_size=n), min_size=n, max_size=n)


def test_parse_and_format_round_trip():
    for s in ("3/4", "-7/2", "5", "0"):
        assert linalg.format_rational(linalg.parse_rational(s)) == s
    assert linalg.parse_rational(" 6/8 ") == Fraction(3, 4)
    with pytest.raises(TypeError):
        linalg.parse_rational(0.5)
    with pytest.raises(TypeError):
        linalg.parse_rational(True)


def test_ragged_matrix_rejected():
    with pytest.raises(linalg.DimensionError):
        linalg.as_matrix([[1, 2], [3]])


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_det_matches_cofactor_expansion(n):
    ext = ExternalRandomness(100 + n)
    for _ in range(10):
        m = linalg.as_matrix([[small_rational(ext) for _ in range(n)] for _ in range(n)])
        assert linalg.det(m) == laplace_det(m)


def test_det_matches_sympy_on_integer_heavy_matrix():
    ext = ExternalRandomness(9)
    m = linalg.as_matrix([[ext.uniform_int(2001) - 1000 for _ in range(7)] for _ in range(7)])
    assert linalg.det(m) == sympy.Matrix(m).det()


def test_det_of_singular_matrix_is_zero():
    m = linalg.as_matrix([[1, 2, 3], [2, 4, 6], ["1/2", 0, 1]])
    assert linalg.det(m) == 0
    with pytest.raises(linalg.SingularMatrixError):
        linalg.solve(m, [1, 1, 1])


def test_det_needs_square():
    with pytest.raises(linalg.DimensionError):
        linalg.det(linalg.as_matrix([[1, 2, 3]]))


@given(square(3), square(3))
@settings(max_examples=60, deadline=None)
def test_det_is_multiplicative(a, b):
    a, b = linalg.as_matrix(a), linalg.as_matrix(b)
    assert linalg.det(linalg.matmul(a, b)) == linalg.det(a) * linalg.det(b)


@given(square(4))
@settings(max_examples=60, deadline=None)
def test_det_of_transpose(a):
    a = linalg.as_matrix(a)
    assert linalg.det(a) == linalg.det(linalg.transpose(a))


@given(square(3), st.lists(fractions, min_size=3, max_size=3))
@settings(max_examples=60, deadline=None)
def test_solve_residual_is_exactly_zero(a, rhs):
    a = linalg.as_matrix(a)
    rhs = linalg.as_vector(rhs)
    if linalg.det(a) == 0:
        return
    x = linalg.solve(a, rhs)
    assert linalg.matvec(a, x) == rhs
    assert linalg.matmul(a, linalg.inverse(a)) == linalg.identity(3)


def test_sub_replaced_keeps_column_position():
    # row entries name their own column index
    w = linalg.as_matrix([list(range(12))])
    assert linalg.sub_replaced(w, [2, 3, 5, 7], 5, 11) == linalg.as_matrix([[2, 3, 11, 7]])
    with pytest.raises(ValueError):
        linalg.sub_replaced(w, [2, 3], 5, 11)


def test_sigma_sign_against_two_determinants():
    ext = ExternalRandomness(5)
    checked = 0
    while checked < 30:
        w = linalg.as_matrix([[small_rational(ext) for _ in range(5)] for _ in range(2)])
        s = (0, 2)
        base = laplace_det(linalg.submatrix_cols(w, s))
        if base == 0:
            continue
        for i in s:
            swapped = [[w[r][4] if c == i else w[r][c] for c in s] for r in range(2)]
            ratio = laplace_det(swapped) / base
            assert linalg.sigma_sign(w, s, i, 4) == (ratio > 0) - (ratio < 0)
        checked += 1


def test_rank_and_independent_rows():
    m = linalg.as_matrix([[1, 0, 1], [0, 1, 1], [1, 1, 2], [2, 0, 2]])
    assert linalg.rank(m) == 2
    assert linalg.independent_rows(m) == (0, 1)
    assert linalg.rank(m) == sympy.Matrix(m).rank()
