"""Perfect-matching sampler on the Birkhoff polytope and its combinatorial checks.

Coin ``i*n + j`` is the entry ``x[i][j]`` of the hidden doubly stochastic
matrix (row-major, 0-based).  Vertex 0 is the fixed root of every
arborescence the sampler draws.
"""

from __future__ import annotations

from collections import deque
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations, product
from typing import Sequence

import numpy as np

from . import _kernels, linalg
from .batch import OutcomeBatch, kernel_ready, run_batch
from .bernstein import BMonomial, BPolynomial
from .engine import SampleOutcome
from .generic import FactorySpec
from .polytope import AffineSubspace, row_reduce
from .randomness import CoinSource, ExternalRandomness

Perm = tuple[int, ...]
ParentMap = tuple[int, ...]  # parent[root] == root

MAX_ENUM_N = 8


def birkhoff_subspace(n: int) -> AffineSubspace:
    """Row and column sums equal to one, reduced to independent rows."""
    rows, rhs = [], []
    for i in range(n):
        rows.append([int(c // n == i) for c in range(n * n)])
        rhs.append(1)
    for j in range(n):
        rows.append([int(c % n == j) for c in range(n * n)])
        rhs.append(1)
    return row_reduce(rows, rhs)


def root_direction(h: AffineSubspace, n: int, root: int = 0) -> tuple[Fraction, ...]:
    """Offset of the right-hand side that selects the tree supports rooted at ``root``.

    Row ``root`` drops by ``n`` units and every column by one unit (the rest
    stay); near this side every feasible basis is a matching plus an
    arborescence toward ``root``, with no coordinate pinned at 1.
    """
    full_rows = [tuple(Fraction(int(c // n == i)) for c in range(n * n)) for i in range(n)]
    full_rows += [tuple(Fraction(int(c % n == j)) for c in range(n * n)) for j in range(n)]
    shift = [Fraction(-n if i == root else 0) for i in range(n)] + [Fraction(-1)] * n
    return tuple(shift[full_rows.index(row)] for row in h.w)


def permutation_vertex(pi: Sequence[int]) -> tuple[Fraction, ...]:
    n = len(pi)
    v = [Fraction(0)] * (n * n)
    for i, j in enumerate(pi):
        v[i * n + j] = Fraction(1)
    return tuple(v)


def all_permutations(n: int) -> list[Perm]:
    return list(permutations(range(n)))


def prufer_decode(seq: Sequence[int], n: int) -> list[tuple[int, int]]:
    """Edges of the labelled tree with the given Pruefer code (quadratic, fine for small n)."""
    if n == 1:
        return []
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = degree.index(1)
        edges.append((leaf, x))
        degree[leaf] -= 1
        degree[x] -= 1
    u, w = [i for i in range(n) if degree[i] == 1]
    edges.append((u, w))
    return edges


def uniform_spanning_tree(n: int, ext: ExternalRandomness) -> list[tuple[int, int]]:
    if n < 1:
        raise ValueError("need at least one vertex")
    seq = [ext.uniform_int(n) for _ in range(max(n - 2, 0))]
    return prufer_decode(seq, n)


def orient_toward(edges: Sequence[tuple[int, int]], n: int, root: int = 0) -> ParentMap:
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    parent = [-1] * n
    parent[root] = root
    todo = deque([root])
    while todo:
        a = todo.popleft()
        for c in adj[a]:
            if parent[c] < 0:
                parent[c] = a
                todo.append(c)
    if min(parent) < 0:
        raise ValueError("edges do not span a tree")
    return tuple(parent)


@lru_cache(maxsize=None)
def arborescences(n: int, root: int = 0) -> tuple[ParentMap, ...]:
    """Every arborescence toward ``root``, via all Pruefer codes."""
    if n > MAX_ENUM_N:
        raise ValueError(f"n={n} has {n ** (n - 2)} arborescences; enumeration is capped at n={MAX_ENUM_N}")
    if n == 1:
        return ((0,),)
    out = {orient_toward(prufer_decode(seq, n), n, root) for seq in product(range(n), repeat=n - 2)}
    return tuple(sorted(out))


def _reaches_root(parent: Sequence[int], root: int) -> bool:
    n = len(parent)
    for u in range(n):
        seen = 0
        while u != root and seen <= n:
            u = parent[u]
            seen += 1
        if u != root:
            return False
    return True


def arborescences_brute(n: int, root: int = 0) -> list[ParentMap]:
    """Independent enumeration: every parent map without self-loops whose walks reach the root."""
    others = [u for u in range(n) if u != root]
    found = []
    for choice in product(range(n), repeat=len(others)):
        parent = [root] * n
        for u, p in zip(others, choice):
            parent[u] = p
        if any(parent[u] == u for u in others):
            continue
        if _reaches_root(parent, root):
            found.append(tuple(parent))
    return sorted(found)


def arborescence_polynomial(pi: Sequence[int], root: int = 0) -> BPolynomial:
    """Matching monomial times the sum over arborescences ``T`` of ``prod_{u->v in T} x[u][pi(v)]``."""
    n = len(pi)
    base = [i * n + pi[i] for i in range(n)]
    monos = []
    for parent in arborescences(n, root):
        ones = base + [u * n + pi[parent[u]] for u in range(n) if u != root]
        monos.append(BMonomial.from_sets(n * n, ones=ones))
    return BPolynomial(n * n, tuple(monos))


def matching_factory(n: int, root: int = 0) -> FactorySpec:
    weights = [(permutation_vertex(pi), arborescence_polynomial(pi, root)) for pi in all_permutations(n)]
    return FactorySpec(birkhoff_subspace(n), tuple(weights), {"kind": "matching", "root": root})


# -- sampler ------------------------------------------------------------------------


def sample_matching(
    n: int, coins: CoinSource, ext: ExternalRandomness, round_budget: int | None = None
) -> SampleOutcome:
    """Uniform permutation, uniform tree toward vertex 0; every chosen entry's coin must read 1."""
    if coins.n != n * n:
        raise ValueError(f"expected {n * n} coins, got {coins.n}")
    start = coins.flips_used()[1]
    rounds = 0
    while round_budget is None or rounds < round_budget:
        rounds += 1
        pi = ext.permutation(n)
        if not all(coins.flip(i * n + pi[i]) == 1 for i in range(n)):
            continue
        if n > 1:
            parent = orient_toward(uniform_spanning_tree(n, ext), n, 0)
            if not all(coins.flip(u * n + pi[parent[u]]) == 1 for u in range(1, n)):
                continue
        return SampleOutcome(permutation_vertex(pi), rounds, coins.flips_used()[1] - start)
    return SampleOutcome(None, rounds, coins.flips_used()[1] - start)


def matching_batch(
    n: int, coins: CoinSource, ext: ExternalRandomness, count: int, round_budget: int | None = None
) -> OutcomeBatch:
    if coins.n != n * n:
        raise ValueError(f"expected {n * n} coins, got {coins.n}")
    if not kernel_ready(coins):
        return OutcomeBatch.from_outcomes([sample_matching(n, coins, ext, round_budget) for _ in range(count)])
    scratch = (
        np.zeros(n, dtype=np.int64),
        np.zeros(n, dtype=np.int64),
        np.zeros(max(n - 2, 1), dtype=np.int64),
        np.zeros(n, dtype=np.int64),
        np.zeros((n, n + 1), dtype=np.int64),
        np.zeros(n, dtype=np.int64),
    )
    cache: dict[int, tuple] = {}

    def decode(code: int):
        if code not in cache:
            pi, c = [], code
            for _ in range(n):
                c, d = divmod(c, n)
                pi.append(d)
            cache[code] = permutation_vertex(pi)
        return cache[code]

    return run_batch(_kernels.matching_round, scratch, coins, ext, count, round_budget, decode)


def vertex_to_permutation(v: Sequence, n: int) -> Perm:
    return tuple(next(j for j in range(n) if v[i * n + j] == 1) for i in range(n))


# -- matrix-tree checks ---------------------------------------------------------------


def laplacian(x) -> linalg.RMatrix:
    """Out-degree Laplacian: ``L[i][i] = sum_{k != i} x[i][k]``, ``L[i][j] = -x[i][j]``; rows sum to zero."""
    x = linalg.as_matrix(x)
    n = len(x)
    return tuple(
        tuple(sum((x[i][k] for k in range(n) if k != i), Fraction(0)) if i == j else -x[i][j] for j in range(n))
        for i in range(n)
    )


def _drop(m: linalg.RMatrix, r: int, c: int) -> linalg.RMatrix:
    return tuple(tuple(v for j, v in enumerate(row) if j != c) for i, row in enumerate(m) if i != r)


def laplacian_minor_det(x, r: int) -> Fraction:
    lap = laplacian(x)
    if len(lap) == 1:
        return Fraction(1)
    return linalg.det(_drop(lap, r, r))


def brute_arborescence_sum(x, r: int) -> Fraction:
    """``sum_T prod_{u->v in T} x[u][v]`` over every arborescence toward ``r``."""
    x = linalg.as_matrix(x)
    n = len(x)
    total = Fraction(0)
    for parent in arborescences_brute(n, r):
        term = Fraction(1)
        for u in range(n):
            if u != r:
                term *= x[u][parent[u]]
        total += term
    return total


def cofactors(a) -> list[Fraction]:
    a = linalg.as_matrix(a)
    n = len(a)
    if n == 1:
        return [Fraction(1)]
    return [(-1) ** (i + j) * linalg.det(_drop(a, i, j)) for i in range(n) for j in range(n)]


def zls_equal_cofactors(a) -> bool:
    """All signed cofactors of a zero-line-sum matrix coincide."""
    a = linalg.as_matrix(a)
    n = len(a)
    if any(sum(row) != 0 for row in a) or any(sum(a[i][j] for i in range(n)) != 0 for j in range(n)):
        raise ValueError("matrix is not zero-line-sum")
    cs = cofactors(a)
    return all(c == cs[0] for c in cs)


def random_doubly_stochastic(n: int, ext: ExternalRandomness, terms: int | None = None, interior: bool = False):
    """Rational convex combination of random permutation matrices.

    With ``interior=True`` the all-``1/n`` matrix is mixed in so every entry is positive.
    """
    terms = terms if terms is not None else n + 1
    acc = [[Fraction(0)] * n for _ in range(n)]
    ws = [1 + ext.uniform_int(1 << 16) for _ in range(terms)]
    flat = Fraction(1 + ext.uniform_int(1 << 16)) if interior else Fraction(0)
    total = sum(ws) + flat
    for w in ws:
        pi = ext.permutation(n)
        for i in range(n):
            acc[i][pi[i]] += Fraction(w) / total
    if interior:
        for i in range(n):
            for j in range(n):
                acc[i][j] += flat / (n * total)
    return tuple(tuple(row) for row in acc)


def flatten(x) -> tuple[Fraction, ...]:
    return tuple(v for row in linalg.as_matrix(x) for v in row)


# -- bipartite bi-trees -------------------------------------------------------------------

Edge = tuple[int, int]  # (left vertex, right vertex)


def bitree_of(pi: Perm, parent: ParentMap, r: int) -> frozenset[Edge]:
    """Every non-root ``u`` joins ``u_L`` to ``pi(u)_R`` and to ``pi(parent(u))_R``."""
    n = len(pi)
    edges = set()
    for u in range(n):
        if u != r:
            edges.add((u, pi[u]))
            edges.add((u, pi[parent[u]]))
    return frozenset(edges)


def is_bitree(edges: frozenset[Edge], n: int, r: int) -> bool:
    deg = [0] * n
    for u, _ in edges:
        deg[u] += 1
    if deg[r] != 0 or any(deg[u] != 2 for u in range(n) if u != r):
        return False
    # nodes: left u -> u, right v -> n + v
    adj: dict[int, list[int]] = {k: [] for k in range(2 * n) if k != r}
    for u, v in edges:
        adj[u].append(n + v)
        adj[n + v].append(u)
    start = n
    seen = {start}
    todo = [start]
    while todo:
        a = todo.pop()
        for b in adj[a]:
            if b not in seen:
                seen.add(b)
                todo.append(b)
    return len(seen) == 2 * n - 1


def split_bitree(edges: frozenset[Edge], n: int, r: int, c: int) -> tuple[Perm, ParentMap]:
    """Recover ``(pi, T)`` with ``pi(r) = c`` from distances to ``c_R``.

    Each non-root left vertex has two neighbours; the farther one from
    ``c_R`` is its match, the nearer one names its parent.
    """
    adj: dict[int, list[int]] = {}
    for u, v in edges:
        adj.setdefault(u, []).append(n + v)
        adj.setdefault(n + v, []).append(u)
    dist = {n + c: 0}
    todo = deque([n + c])
    while todo:
        a = todo.popleft()
        for b in adj.get(a, []):
            if b not in dist:
                dist[b] = dist[a] + 1
                todo.append(b)
    pi = [-1] * n
    pi[r] = c
    near = {}
    for u in range(n):
        if u == r:
            continue
        a, b = sorted(adj[u], key=lambda k: dist[k])
        pi[u] = b - n
        near[u] = a - n
    inv = {v: u for u, v in enumerate(pi)}
    parent = [r] * n
    for u, w in near.items():
        parent[u] = inv[w]
    return tuple(pi), tuple(parent)


def all_bitrees(n: int, r: int) -> list[frozenset[Edge]]:
    """Independent enumeration: each non-root left vertex picks two right neighbours."""
    pairs = list(combinations(range(n), 2))
    others = [u for u in range(n) if u != r]
    found = []
    for choice in product(pairs, repeat=len(others)):
        edges = frozenset((u, v) for u, pr in zip(others, choice) for v in pr)
        if is_bitree(edges, n, r):
            found.append(edges)
    return found


def bitree_bijection_check(n: int, r: int, c: int) -> tuple[int, int, int]:
    """``(pairs with pi(r) = c, r-bi-trees, round-trip failures)``."""
    if n > 6:
        raise ValueError("bi-tree enumeration is limited to n <= 6")
    pairs = [(pi, t) for pi in all_permutations(n) if pi[r] == c for t in arborescences(n, r)]
    trees = all_bitrees(n, r)
    failures = 0
    images = set()
    for pi, t in pairs:
        g = bitree_of(pi, t, r)
        images.add(g)
        if not is_bitree(g, n, r) or split_bitree(g, n, r, c) != (pi, t):
            failures += 1
    failures += len(pairs) - len(images)
    for g in trees:
        pi, t = split_bitree(g, n, r, c)
        if bitree_of(pi, t, r) != g:
            failures += 1
    return len(pairs), len(trees), failures
