"""Exact rational linear algebra.

Matrices are tuples of row tuples of :class:`fractions.Fraction`; vectors are
tuples of fractions.  Everything is immutable and every function is pure.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

Rational = Fraction
RVector = tuple[Fraction, ...]
RMatrix = tuple[RVector, ...]


class DimensionError(ValueError):
    """Shapes of the operands do not fit together."""


class SingularMatrixError(ArithmeticError):
    """A nonsingular matrix was required."""


def parse_rational(value) -> Fraction:
    """Accept ints, Fractions and ``"p/q"`` / ``"p"`` strings."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


def format_rational(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def as_vector(entries: Iterable) -> RVector:
    return tuple(parse_rational(e) for e in entries)


def as_matrix(rows: Iterable[Iterable]) -> RMatrix:
    m = tuple(as_vector(r) for r in rows)
    if m and any(len(r) != len(m[0]) for r in m):
        raise DimensionError("ragged matrix")
    return m


def shape(m: RMatrix) -> tuple[int, int]:
    return len(m), (len(m[0]) if m else 0)


def identity(n: int) -> RMatrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def transpose(m: RMatrix) -> RMatrix:
    return tuple(zip(*m)) if m else ()


def matmul(a: RMatrix, b: RMatrix) -> RMatrix:
    if shape(a)[1] != shape(b)[0]:
        raise DimensionError(f"cannot multiply {shape(a)} by {shape(b)}")
    bt = transpose(b)
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt) for row in a)


def matvec(m: RMatrix, v: Sequence[Fraction]) -> RVector:
    if shape(m)[1] != len(v):
        raise DimensionError(f"cannot apply {shape(m)} matrix to length-{len(v)} vector")
    return tuple(sum((x * y for x, y in zip(row, v)), Fraction(0)) for row in m)


def column(m: RMatrix, j: int) -> RVector:
    return tuple(row[j] for row in m)


def _det_small(m: RMatrix) -> Fraction:
    n = len(m)
    if n == 0:
        return Fraction(1)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    (a, b, c), (d, e, f), (g, h, i) = m
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def _bareiss(rows: list[list[int]]) -> int:
    """Fraction-free elimination on an integer matrix (mutates ``rows``)."""
    n = len(rows)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if rows[k][k] == 0:
            for p in range(k + 1, n):
                if rows[p][k] != 0:
                    rows[k], rows[p] = rows[p], rows[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = rows[k][k]
        rk = rows[k]
        for i in range(k + 1, n):
            ri = rows[i]
            rik = ri[k]
            for j in range(k + 1, n):
                ri[j] = (ri[j] * pivot - rik * rk[j]) // prev
        prev = pivot
    return sign * rows[n - 1][n - 1]


def det(m: RMatrix) -> Fraction:
    """Exact determinant; closed form up to 3x3, Bareiss beyond."""
    r, c = shape(m)
    if r != c:
        raise DimensionError(f"determinant of non-square {r}x{c} matrix")
    if r <= 3:
        return _det_small(m)
    scale = 1
    rows = []
    for row in m:
        l = lcm(*(q.denominator for q in row))
        scale *= l
        rows.append([q.numerator * (l // q.denominator) for q in row])
    return Fraction(_bareiss(rows), scale)


def solve(m: RMatrix, rhs: Sequence[Fraction]) -> RVector:
    """Solve ``m @ x = rhs`` exactly by Gauss-Jordan elimination."""
    n, c = shape(m)
    if n != c:
        raise DimensionError(f"solve needs a square matrix, got {n}x{c}")
    if len(rhs) != n:
        raise DimensionError("right-hand side length does not match matrix")
    aug = [list(row) + [parse_rational(v)] for row, v in zip(m, rhs)]
    for col in range(n):
        piv = next((p for p in range(col, n) if aug[p][col] != 0), None)
        if piv is None:
            raise SingularMatrixError("matrix is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        pr = aug[col]
        inv = 1 / pr[col]
        for j in range(col, n + 1):
            pr[j] *= inv
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                ri = aug[i]
                for j in range(col, n + 1):
                    ri[j] -= f * pr[j]
    return tuple(row[n] for row in aug)


def inverse(m: RMatrix) -> RMatrix:
    n = len(m)
    cols = [solve(m, column(identity(n), j)) for j in range(n)]
    return transpose(tuple(cols))


def _check_indices(n: int, idx: Iterable[int]) -> tuple[int, ...]:
    idx = tuple(idx)
    for i in idx:
        if not 0 <= i < n:
            raise IndexError(f"column index {i} out of range for {n} columns")
    return idx


def submatrix_cols(w: RMatrix, s: Iterable[int]) -> RMatrix:
    """Columns of ``w`` indexed by ``s``, in increasing index order."""
    idx = sorted(_check_indices(shape(w)[1], s))
    return tuple(tuple(row[j] for j in idx) for row in w)


def replace_column(w_s: RMatrix, position: int, new_column: Sequence[Fraction]) -> RMatrix:
    """Replace the column at ``position`` keeping every other column in place."""
    rows, cols = shape(w_s)
    if not 0 <= position < cols:
        raise IndexError(f"column position {position} out of range")
    if len(new_column) != rows:
        raise DimensionError("replacement column has the wrong length")
    return tuple(row[:position] + (parse_rational(v),) + row[position + 1:] for row, v in zip(w_s, new_column))


def sub_replaced(w: RMatrix, s: Iterable[int], old: int, new: int) -> RMatrix:
    """``W_{S[old -> new]}``: columns of ``s`` in order with ``old`` swapped for ``new``."""
    idx = sorted(_check_indices(shape(w)[1], s))
    if old not in idx:
        raise ValueError(f"{old} is not in the index set")
    pos = idx.index(old)
    return replace_column(submatrix_cols(w, idx), pos, column(w, new))


def _sign(q: Fraction) -> int:
    return (q > 0) - (q < 0)


def sigma_sign(w: RMatrix, s: Iterable[int], i: int, j: int) -> int:
    """Sign of ``det W_{S[i -> j]} / det W_S`` for ``i`` in ``s`` and ``j`` outside it."""
    s = tuple(sorted(s))
    if j in s:
        raise ValueError(f"{j} must lie outside the index set")
    base = det(submatrix_cols(w, s))
    if base == 0:
        raise SingularMatrixError("W_S is singular")
    return _sign(det(sub_replaced(w, s, i, j))) * _sign(base)


def rank(m: RMatrix) -> int:
    rows = [list(r) for r in m]
    if not rows:
        return 0
    ncols = len(rows[0])
    r = 0
    for col in range(ncols):
        piv = next((p for p in range(r, len(rows)) if rows[p][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(r + 1, len(rows)):
            if rows[i][col] != 0:
                f = rows[i][col] / rows[r][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        r += 1
        if r == len(rows):
            break
    return r


def independent_rows(m: RMatrix) -> tuple[int, ...]:
    """Greedy maximal set of linearly independent rows, lowest indices first."""
    basis: list[list[Fraction]] = []
    pivots: list[int] = []
    keep = []
    for idx, row in enumerate(m):
        v = list(row)
        for b, p in zip(basis, pivots):
            if v[p] != 0:
                f = v[p] / b[p]
                v = [a - f * c for a, c in zip(v, b)]
        nz = next((c for c, a in enumerate(v) if a != 0), None)
        if nz is not None:
            basis.append(v)
            pivots.append(nz)
            keep.append(idx)
    return tuple(keep)
