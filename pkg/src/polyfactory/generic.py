"""Per-vertex weight polynomials for ``[0,1]^n ∩ {Wx = b}``.

Generic subspaces get one single-monomial weight per valid partition.
Non-generic ones are handled by solving a nearby generic problem, mapping its
partitions back to the vertices they converge to, and certifying the result
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import linalg
from .batch import OutcomeBatch, kernel_ready, run_batch
from . import _kernels
from .bernstein import BMonomial, BPolynomial
from .engine import PreconditionError, SampleOutcome
from .polytope import (
    AffineSubspace,
    Partition,
    VertexP,
    is_generic,
    solve_partition,
    valid_partitions,
    vertex_of_partition,
)
from .randomness import CoinSource, ExternalRandomness, chunk_params


class NonGenericError(ValueError):
    pass


class PerturbationError(RuntimeError):
    """Every perturbation attempt failed; ``attempts`` lists ``(b_t, reason)``."""

    def __init__(self, msg: str, attempts: list):
        super().__init__(msg)
        self.attempts = attempts


@dataclass(frozen=True)
class FactorySpec:
    subspace: AffineSubspace
    weights: tuple[tuple[VertexP, BPolynomial], ...]
    provenance: dict = field(default_factory=lambda: {"kind": "generic"}, compare=False)

    def __post_init__(self):
        items = tuple(sorted(((tuple(v), p) for v, p in self.weights), key=lambda t: t[0]))
        object.__setattr__(self, "weights", items)
        keys = [v for v, _ in items]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate vertex keys")
        for v, p in items:
            if not p.monomials:
                raise ValueError(f"empty weight polynomial for vertex {v}")
            if p.n != self.subspace.n or len(v) != self.subspace.n:
                raise ValueError("weights do not match the subspace dimension")

    @property
    def vertices(self) -> list[VertexP]:
        return [v for v, _ in self.weights]

    def weight_map(self) -> dict[VertexP, BPolynomial]:
        return dict(self.weights)

    def with_weights(self, weights) -> "FactorySpec":
        return FactorySpec(self.subspace, tuple(weights), dict(self.provenance))


def partition_weight(h: AffineSubspace, p: Partition) -> BPolynomial:
    """``|det W_S|`` times ``x(1-x)`` on ``S``, ``x`` on the ones and ``1-x`` on the zeros."""
    d = abs(linalg.det(linalg.submatrix_cols(h.w, p.s)))
    mono = BMonomial.from_sets(h.n, ones=p.b_set + p.s, zeros=p.a + p.s, coeff=d)
    return BPolynomial(h.n, (mono,))


def build_generic(h: AffineSubspace) -> FactorySpec:
    if not is_generic(h):
        raise NonGenericError("subspace is not generic; use build_perturbed")
    weights = [(vertex_of_partition(h, p), partition_weight(h, p)) for p in valid_partitions(h)]
    if not weights:
        raise ValueError("the polytope is empty")
    return FactorySpec(h, tuple(weights), {"kind": "generic"})


def _ball_offset(k: int, radius: Fraction, ext: ExternalRandomness) -> tuple[Fraction, ...]:
    """Uniform point of the grid ``(Z/q)^k`` inside the ball of the given radius."""
    q = (1 << 20) * math.ceil(1 / radius)
    r = math.floor(q * radius)
    while True:
        j = [ext.uniform_int(2 * r + 1) - r for _ in range(k)]
        if sum(t * t for t in j) <= r * r:
            return tuple(Fraction(t, q) for t in j)


def _aggregate_limits(h: AffineSubspace, h_t: AffineSubspace) -> dict[VertexP, list[BMonomial]] | str:
    """Group the perturbed problem's partitions by the vertex they solve to under the original ``b``."""
    agg: dict[VertexP, list[BMonomial]] = {}
    for p in valid_partitions(h_t):
        x_s = solve_partition(h, p)
        if not all(0 <= c <= 1 for c in x_s):
            return f"partition {p} has limit solution {x_s} outside the cube"
        v = [Fraction(0)] * h.n
        for i in p.b_set:
            v[i] = Fraction(1)
        for i, c in zip(p.s, x_s):
            v[i] = c
        agg.setdefault(tuple(v), []).extend(partition_weight(h, p).monomials)
    if not agg:
        return "perturbed polytope is empty"
    return agg


def build_perturbed(
    h: AffineSubspace,
    radius=Fraction(1, 1 << 20),
    ext: ExternalRandomness | None = None,
    max_attempts: int = 8,
    check_points: int = 20,
    direction: Sequence | None = None,
) -> FactorySpec:
    """Weights for a possibly non-generic subspace via a certified nearby generic one.

    Each attempt draws ``b_t`` near ``b``, requires ``(W, b_t)`` to be
    generic, sums the partition weights by limit vertex and checks the
    vector identity exactly at ``check_points`` points of the polytope.  A
    failed attempt halves the radius.

    Different draws can land in different cones around ``b`` and give
    different (equally valid) weights.  ``direction`` fixes the offset to
    ``radius * d / |d|_1`` plus a random jitter of size ``radius^2``, which
    selects one cone while keeping the draw generic.
    """
    from .verifier import verify_identity

    radius = linalg.parse_rational(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    ext = ext if ext is not None else ExternalRandomness(0)
    if direction is not None:
        d = linalg.as_vector(direction)
        if len(d) != h.k or not any(d):
            raise ValueError(f"direction must be a nonzero vector of length {h.k}")
        d = tuple(c / sum(abs(t) for t in d) for c in d)
    attempts = []
    for _ in range(max_attempts):
        if direction is None:
            offset = _ball_offset(h.k, radius, ext)
        else:
            jitter = _ball_offset(h.k, radius * radius, ext)
            offset = tuple(radius * c + e for c, e in zip(d, jitter))
        b_t = tuple(bi + oi for bi, oi in zip(h.b, offset))
        h_t = h.with_rhs(b_t)
        if not is_generic(h_t):
            attempts.append((b_t, "perturbed subspace not generic"))
            radius /= 2
            continue
        agg = _aggregate_limits(h, h_t)
        if isinstance(agg, str):
            attempts.append((b_t, agg))
            radius /= 2
            continue
        spec = FactorySpec(
            h,
            tuple((v, BPolynomial(h.n, tuple(ms))) for v, ms in agg.items()),
            {"kind": "perturbed", "b_t": list(b_t), "radius": radius, "directed": direction is not None},
        )
        report = verify_identity(spec, check_points, ext)
        if report.passed:
            return spec
        attempts.append((b_t, "identity check failed"))
        radius /= 2
    raise PerturbationError(f"no certified perturbation after {max_attempts} attempts", attempts)


def build_factory(h: AffineSubspace, radius=Fraction(1, 1 << 20), ext=None, max_attempts: int = 8) -> FactorySpec:
    """Generic weights when possible, otherwise the certified perturbation."""
    if is_generic(h):
        return build_generic(h)
    return build_perturbed(h, radius, ext, max_attempts)


def strong_factory_extremes(n: int, which: str) -> FactorySpec:
    """Single-monomial weights on the simplex (``which="k=1"``) or its complement (``"k=n-1"``).

    These terminate even when the hidden point is a vertex.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    ones = (Fraction(1),) * n
    weights = []
    if which in ("k=1", "1"):
        h = AffineSubspace((ones,), (Fraction(1),))
        for i in range(n):
            v = tuple(Fraction(int(t == i)) for t in range(n))
            weights.append((v, BPolynomial(n, (BMonomial.from_sets(n, ones=[i]),))))
    elif which in ("k=n-1", "n-1"):
        h = AffineSubspace((ones,), (Fraction(n - 1),))
        for i in range(n):
            v = tuple(Fraction(int(t != i)) for t in range(n))
            weights.append((v, BPolynomial(n, (BMonomial.from_sets(n, zeros=[i]),))))
    else:
        raise ValueError(f"unknown extreme {which!r}; expected 'k=1' or 'k=n-1'")
    return FactorySpec(h, tuple(weights), {"kind": "strong", "which": which})


# -- uniform-vertex sampler for generic subspaces --------------------------------


@dataclass(frozen=True)
class GenericPlan:
    """Vertices with their coin pattern (0, 1, or 2 for basic) and acceptance ``|det W_S| / D``."""

    vertices: tuple[VertexP, ...]
    pattern: np.ndarray
    accept: tuple[Fraction, ...]
    basic: tuple[tuple[int, ...], ...]


def plan_generic(h: AffineSubspace) -> GenericPlan:
    if not is_generic(h):
        raise NonGenericError("the uniform-vertex sampler needs a generic subspace")
    parts = valid_partitions(h)
    if not parts:
        raise ValueError("the polytope is empty")
    dets = [abs(linalg.det(linalg.submatrix_cols(h.w, p.s))) for p in parts]
    top = max(dets)
    pattern = np.zeros((len(parts), h.n), dtype=np.int64)
    for r, p in enumerate(parts):
        pattern[r, list(p.b_set)] = 1
        pattern[r, list(p.s)] = 2
    return GenericPlan(
        tuple(vertex_of_partition(h, p) for p in parts),
        pattern,
        tuple(d / top for d in dets),
        tuple(p.s for p in parts),
    )


def uniform_vertex_sample(
    h: AffineSubspace | GenericPlan,
    coins: CoinSource,
    ext: ExternalRandomness,
    round_budget: int | None = None,
) -> SampleOutcome:
    """Pick a vertex uniformly, match its pinned coins, read 1 then 0 on each basic coin, then a known-probability coin."""
    plan = h if isinstance(h, GenericPlan) else plan_generic(h)
    start = coins.flips_used()[1]
    n = plan.pattern.shape[1]
    rounds = 0
    while round_budget is None or rounds < round_budget:
        rounds += 1
        v = ext.uniform_int(len(plan.vertices))
        row = plan.pattern[v]
        if not all(coins.flip(i) == row[i] for i in range(n) if row[i] != 2):
            continue
        if not all(coins.flip(i) == 1 and coins.flip(i) == 0 for i in plan.basic[v]):
            continue
        if ext.bernoulli(plan.accept[v]):
            return SampleOutcome(plan.vertices[v], rounds, coins.flips_used()[1] - start)
    return SampleOutcome(None, rounds, coins.flips_used()[1] - start)


def uniform_vertex_batch(
    h: AffineSubspace | GenericPlan,
    coins: CoinSource,
    ext: ExternalRandomness,
    count: int,
    round_budget: int | None = None,
) -> OutcomeBatch:
    plan = h if isinstance(h, GenericPlan) else plan_generic(h)
    accept = np.array([chunk_params(a) for a in plan.accept], dtype=np.uint64).reshape(-1, 4)
    if not kernel_ready(coins, accept):
        return OutcomeBatch.from_outcomes([uniform_vertex_sample(plan, coins, ext, round_budget) for _ in range(count)])
    return run_batch(
        _kernels.generic_round, (plan.pattern, accept), coins, ext, count, round_budget, lambda c: plan.vertices[c]
    )


def check_point(spec: FactorySpec, x: Sequence) -> tuple[Fraction, ...]:
    """Parse ``x`` and confirm it lies in the spec's polytope."""
    x = linalg.as_vector(x)
    if not spec.subspace.contains(x):
        raise PreconditionError("hidden point is not in the polytope")
    return x
