from fractions import Fraction
from itertools import combinations
from math import comb

import numpy as np
import pytest
import sympy
from scipy.optimize import linprog

from instances import random_generic_instance
from polyfactory import linalg
from polyfactory.matching import birkhoff_subspace, permutation_vertex, all_permutations
from polyfactory.polytope import (
    AffineSubspace,
    Partition,
    RankError,
    enumerate_vertices,
    fractional_count,
    is_generic,
    row_reduce,
    solve_partition,
    valid_partitions,
    vertex_of_partition,
)
from polyfactory.randomness import ExternalRandomness

F = Fraction


def is_extreme(h, x) -> bool:
    """Active constraints (equalities plus tight bounds) have full column rank."""
    rows = [list(r) for r in h.w]
    for i, v in enumerate(x):
        if v in (0, 1):
            rows.append([int(j == i) for j in range(h.n)])
    return sympy.Matrix(rows).rank() == h.n


def lp_vertices(h, ext, verts, tries=150) -> set:
    """Optimal vertices of random linear objectives, each matched to the enumerated vertex within 1e-7."""
    exact = list(verts)
    approx = np.array(exact, dtype=float)
    a_eq = np.array(h.w, dtype=float)
    b_eq = np.array(h.b, dtype=float)
    found = set()
    for _ in range(tries):
        c = np.array([ext.uniform_int(2001) - 1000 for _ in range(h.n)], dtype=float)
        res = linprog(c, A_eq=a_eq, b_eq=b_eq, bounds=[(0, 1)] * h.n, method="highs-ds")
        assert res.status == 0
        dist = np.abs(approx - res.x).max(axis=1)
        assert dist.min() < 1e-7, f"LP optimum {res.x} is not an enumerated vertex"
        found.add(exact[int(dist.argmin())])
    return found


def test_two_variable_example():
    h = AffineSubspace([[2, 1]], ["3/2"])
    parts = valid_partitions(h)
    assert {(p.a, p.s, p.b_set) for p in parts} == {((1,), (0,), ()), ((), (0,), (1,))}
    assert set(enumerate_vertices(h)) == {(F(3, 4), F(0)), (F(1, 4), F(1))}
    assert vertex_of_partition(h, Partition((1,), (0,), ())) == (F(3, 4), F(0))
    assert is_generic(h)


def test_half_integer_slice_has_six_partitions():
    h = AffineSubspace([[1, 1, 1]], ["3/2"])
    parts = valid_partitions(h)
    assert len(parts) == 6
    assert all(len(p.b_set) == 1 for p in parts)
    assert all(sorted(v) == [0, F(1, 2), 1] for v in enumerate_vertices(h))
    assert is_generic(h)


def test_integral_slice_is_not_generic():
    h = AffineSubspace([[1, 1, 1]], [2])
    assert not is_generic(h)
    assert len(enumerate_vertices(h)) == 3


@pytest.mark.parametrize("k,n", [(1, 4), (2, 4), (2, 5), (3, 6), (4, 8)])
def test_integral_slices_have_binomial_vertex_counts(k, n):
    h = AffineSubspace([[1] * n], [k])
    verts = enumerate_vertices(h)
    assert len(verts) == comb(n, k)
    assert all(fractional_count(v) == 0 for v in verts)


@pytest.mark.parametrize("n", [2, 3])
def test_birkhoff_vertices_are_permutation_matrices(n):
    h = birkhoff_subspace(n)
    assert h.k == 2 * n - 1
    assert set(enumerate_vertices(h)) == {permutation_vertex(p) for p in all_permutations(n)}
    assert not is_generic(h)


@pytest.mark.parametrize("seed", range(6))
def test_vertices_against_lp_oracle(seed):
    ext = ExternalRandomness(seed)
    k, n = 1 + seed % 3, 4 + seed % 3
    h = random_generic_instance(k, n, ext)
    verts = set(enumerate_vertices(h))
    for v in verts:
        assert h.contains(v)
        assert fractional_count(v) == k
        assert is_extreme(h, v)
    lp_vertices(h, ext, verts)


def test_non_generic_vertices_against_lp_oracle():
    ext = ExternalRandomness(77)
    h = AffineSubspace([[1, 1, 1, 1, 1], [1, 2, 0, 1, 0]], [2, 2])
    verts = set(enumerate_vertices(h))
    assert not is_generic(h)
    assert all(is_extreme(h, v) for v in verts)
    assert lp_vertices(h, ext, verts, 300) == verts


def test_solve_partition_with_other_rhs():
    h = AffineSubspace([[1, 1, 1]], [2])
    p = Partition((2,), (0,), (1,))
    assert solve_partition(h, p) == (F(1),)
    assert solve_partition(h, p, rhs=[F(5, 2)]) == (F(3, 2),)


def test_rank_deficient_rejected_and_row_reduce():
    rows = [[1, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0], [0, 1, 0, 1]]
    with pytest.raises(RankError):
        AffineSubspace(rows, [1, 1, 1, 1])
    h = row_reduce(rows, [1, 1, 1, 1])
    assert h.k == 3
    assert all(r in [tuple(map(F, q)) for q in rows] for r in h.w)
    with pytest.raises(ValueError):
        row_reduce(rows, [1, 1, 1, 2])


def test_partition_blocks_must_be_disjoint():
    with pytest.raises(ValueError):
        Partition((0, 1), (1,), ())


def test_empty_polytope():
    h = AffineSubspace([[1, 1]], [3])
    assert enumerate_vertices(h) == []
    assert valid_partitions(h) == []
