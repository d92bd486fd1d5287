"""Polytopes ``[0,1]^n ∩ {x : Wx = b}``: partitions, vertices, genericity.

Enumeration is exhaustive over every basis ``S`` (``C(n, k)`` of them) and
every pinning ``B`` of the remaining coordinates (``2^(n-k)``), so it is only
meant for desk-scale inputs, roughly ``n <= 14``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterator, Sequence

from . import linalg
from .linalg import RMatrix, RVector

VertexP = RVector

_ZERO = Fraction(0)
_ONE = Fraction(1)


class RankError(ValueError):
    """``W`` does not have full row rank."""


@dataclass(frozen=True)
class Partition:
    """Coordinates pinned to 0 (``a``), basic (``s``) and pinned to 1 (``b_set``)."""

    a: tuple[int, ...]
    s: tuple[int, ...]
    b_set: tuple[int, ...]

    def __post_init__(self):
        for name in ("a", "s", "b_set"):
            object.__setattr__(self, name, tuple(sorted(getattr(self, name))))
        seen = self.a + self.s + self.b_set
        if len(set(seen)) != len(seen):
            raise ValueError("partition blocks overlap")

    @property
    def n(self) -> int:
        return len(self.a) + len(self.s) + len(self.b_set)

    def sort_key(self):
        return (self.s, self.b_set, self.a)


@dataclass(frozen=True)
class AffineSubspace:
    """``H = {x : Wx = b}`` with ``W`` of full row rank ``k``."""

    w: RMatrix
    b: RVector

    def __post_init__(self):
        w = linalg.as_matrix(self.w)
        b = linalg.as_vector(self.b)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", b)
        k, n = linalg.shape(w)
        if len(b) != k:
            raise linalg.DimensionError(f"b has length {len(b)}, W has {k} rows")
        if k > n:
            raise RankError(f"{k} constraints on {n} variables cannot have full row rank")
        if linalg.rank(w) != k:
            raise RankError("W is rank deficient; pass an independent row basis (see row_reduce)")

    @property
    def n(self) -> int:
        return linalg.shape(self.w)[1]

    @property
    def k(self) -> int:
        return len(self.w)

    def column(self, i: int) -> RVector:
        return linalg.column(self.w, i)

    def with_rhs(self, b: Sequence) -> "AffineSubspace":
        return AffineSubspace(self.w, tuple(b))

    def contains(self, x: Sequence[Fraction]) -> bool:
        """Exact membership of ``x`` in the polytope ``[0,1]^n ∩ H``."""
        return (
            len(x) == self.n
            and all(_ZERO <= v <= _ONE for v in x)
            and linalg.matvec(self.w, x) == self.b
        )


def row_reduce(w, b) -> AffineSubspace:
    """Keep an independent subset of the rows of ``(W | b)``.

    Original rows are kept (rather than an echelon form) so structure such as
    total unimodularity survives.  Inconsistent systems are rejected.
    """
    w = linalg.as_matrix(w)
    b = linalg.as_vector(b)
    keep = linalg.independent_rows(w)
    aug = tuple(row + (v,) for row, v in zip(w, b))
    if linalg.rank(aug) != len(keep):
        raise ValueError("the system Wx = b is inconsistent")
    return AffineSubspace(tuple(w[i] for i in keep), tuple(b[i] for i in keep))


def _basic_solutions(h: AffineSubspace, closed: bool) -> Iterator[tuple[Partition, RVector]]:
    """Yield ``(partition, x_S)`` for every nonsingular ``S`` and every pinning ``B``.

    With ``closed=False`` only solutions in the open cube are produced, with
    ``closed=True`` those in the closed cube.
    """
    n, k = h.n, h.k
    cols = [h.column(i) for i in range(n)]
    for s in combinations(range(n), k):
        w_s = linalg.submatrix_cols(h.w, s)
        if linalg.det(w_s) == 0:
            continue
        inv = linalg.inverse(w_s)
        base = linalg.matvec(inv, h.b)
        rest = [i for i in range(n) if i not in s]
        shifts = {i: linalg.matvec(inv, cols[i]) for i in rest}
        for r in range(len(rest) + 1):
            for bset in combinations(rest, r):
                y = list(base)
                for i in bset:
                    z = shifts[i]
                    for t in range(k):
                        y[t] -= z[t]
                if closed:
                    ok = all(_ZERO <= v <= _ONE for v in y)
                else:
                    ok = all(_ZERO < v < _ONE for v in y)
                if ok:
                    a = tuple(i for i in rest if i not in bset)
                    yield Partition(a, s, bset), tuple(y)


def _assemble(n: int, p: Partition, x_s: Sequence[Fraction]) -> VertexP:
    v = [_ZERO] * n
    for i in p.b_set:
        v[i] = _ONE
    for i, val in zip(p.s, x_s):
        v[i] = val
    return tuple(v)


def valid_partitions(h: AffineSubspace) -> list[Partition]:
    """Partitions whose basic solution lies strictly inside the unit cube."""
    return sorted((p for p, _ in _basic_solutions(h, closed=False)), key=Partition.sort_key)


def is_generic(h: AffineSubspace) -> bool:
    """True iff no basic solution, for any basis and pinning, touches 0 or 1."""
    n, k = h.n, h.k
    cols = [h.column(i) for i in range(n)]
    for s in combinations(range(n), k):
        w_s = linalg.submatrix_cols(h.w, s)
        if linalg.det(w_s) == 0:
            continue
        inv = linalg.inverse(w_s)
        base = linalg.matvec(inv, h.b)
        rest = [i for i in range(n) if i not in s]
        shifts = [linalg.matvec(inv, cols[i]) for i in rest]
        for r in range(len(rest) + 1):
            for combo in combinations(range(len(rest)), r):
                for t in range(k):
                    val = base[t] - sum((shifts[c][t] for c in combo), _ZERO)
                    if val == _ZERO or val == _ONE:
                        return False
    return True


def solve_partition(h: AffineSubspace, p: Partition, rhs: Sequence[Fraction] | None = None) -> RVector:
    """``W_S^{-1}(b - sum_{i in B} w^i)``, optionally for a different right-hand side."""
    rhs = h.b if rhs is None else tuple(rhs)
    w_s = linalg.submatrix_cols(h.w, p.s)
    q = list(rhs)
    for i in p.b_set:
        col = h.column(i)
        for t in range(h.k):
            q[t] -= col[t]
    return linalg.solve(w_s, q)


def vertex_of_partition(h: AffineSubspace, p: Partition) -> VertexP:
    if p.n != h.n or len(p.s) != h.k:
        raise ValueError("partition does not match the subspace dimensions")
    x_s = solve_partition(h, p)
    if not all(_ZERO <= v <= _ONE for v in x_s):
        raise ValueError(f"basic solution {x_s} leaves the unit cube")
    return _assemble(h.n, p, x_s)


def enumerate_vertices(h: AffineSubspace) -> list[VertexP]:
    """All vertices of ``[0,1]^n ∩ H``, sorted and deduplicated."""
    verts = {_assemble(h.n, p, y) for p, y in _basic_solutions(h, closed=True)}
    return sorted(verts)


def fractional_count(v: Sequence[Fraction]) -> int:
    return sum(1 for c in v if _ZERO < c < _ONE)
