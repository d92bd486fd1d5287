"""Samplers for ``{x in [0,1]^n : sum x = alpha}``.

For fractional ``alpha`` every vertex has ``floor(alpha)`` ones and one
coordinate equal to the fractional part.  For integral ``alpha = k`` the
vertices are the k-subsets and the two Sampford-style samplers apply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from . import _kernels
from .batch import OutcomeBatch, kernel_ready, run_batch
from .bernstein import BMonomial, BPolynomial, evaluate
from .engine import SampleOutcome
from .generic import FactorySpec
from .linalg import parse_rational
from .polytope import AffineSubspace
from .randomness import CoinSource, ExternalRandomness

VARIANTS = ("v1", "v2", "minus", "plus")


@dataclass(frozen=True)
class KSubsetSpec:
    n: int
    alpha: Fraction

    def __post_init__(self):
        object.__setattr__(self, "alpha", parse_rational(self.alpha))
        if self.n < 1 or not 0 < self.alpha < self.n:
            raise ValueError(f"need 0 < alpha < n, got alpha={self.alpha}, n={self.n}")

    @property
    def k(self) -> int:
        return math.floor(self.alpha)

    @property
    def integral(self) -> bool:
        return self.alpha.denominator == 1

    @property
    def frac(self) -> Fraction:
        return self.alpha - self.k

    def subspace(self) -> AffineSubspace:
        return AffineSubspace(((1,) * self.n,), (self.alpha,))

    def vertex(self, ones: Sequence[int], frac_at: int | None = None) -> tuple[Fraction, ...]:
        v = [Fraction(0)] * self.n
        for i in ones:
            v[i] = Fraction(1)
        if frac_at is not None:
            v[frac_at] = self.frac
        return tuple(v)

    def vertices(self) -> list[tuple[Fraction, ...]]:
        """Sorted vertex list (the uniform-vertex sampler indexes into it)."""
        if self.integral:
            return sorted(self.vertex(s) for s in combinations(range(self.n), self.k))
        out = []
        for i in range(self.n):
            rest = [j for j in range(self.n) if j != i]
            out.extend(self.vertex(s, i) for s in combinations(rest, self.k))
        return sorted(out)


def _indicator(v: Sequence[Fraction]) -> tuple[list[int], list[int]]:
    return [i for i, c in enumerate(v) if c == 1], [i for i, c in enumerate(v) if c == 0]


def sampford_weight(n: int, ones: Sequence[int], family: str) -> BPolynomial:
    """Weight of the k-subset ``ones``.

    ``minus``: sum over ``i`` in the subset of ``prod_ones x * prod_zeros (1-x) * (1-x_i)``.
    ``plus``:  sum over ``i`` outside it of ``prod_ones x * prod_zeros (1-x) * x_i``.
    """
    ones = sorted(ones)
    zeros = [i for i in range(n) if i not in ones]
    if family == "minus":
        monos = [BMonomial.from_sets(n, ones=ones, zeros=zeros + [i]) for i in ones]
    elif family == "plus":
        monos = [BMonomial.from_sets(n, ones=ones + [i], zeros=zeros) for i in zeros]
    else:
        raise ValueError(f"unknown family {family!r}")
    return BPolynomial(n, tuple(monos))


def sampford_factory(ks: KSubsetSpec, family: str = "minus") -> FactorySpec:
    if not ks.integral:
        raise ValueError("Sampford weights need an integral alpha")
    weights = [(v, sampford_weight(ks.n, _indicator(v)[0], family)) for v in ks.vertices()]
    return FactorySpec(ks.subspace(), tuple(weights), {"kind": "sampford", "family": family})


def normalized_weights(spec: FactorySpec, x: Sequence) -> list[Fraction]:
    vals = [evaluate(p, x) for _, p in spec.weights]
    total = sum(vals)
    if total == 0:
        raise ZeroDivisionError("all weights vanish at this point")
    return [v / total for v in vals]


def boundary_probe(spec: FactorySpec, point: Sequence) -> Fraction:
    """Exact per-round acceptance mass ``sum_v P_v(point)``; zero means the race never stops there."""
    return sum((evaluate(p, point) for _, p in spec.weights), Fraction(0))


# -- samplers -------------------------------------------------------------------------


def _pattern(ks: KSubsetSpec, verts) -> np.ndarray:
    pat = np.zeros((len(verts), ks.n), dtype=np.int64)
    for r, v in enumerate(verts):
        for i, c in enumerate(v):
            pat[r, i] = 1 if c == 1 else (0 if c == 0 else 2)
    return pat


def _round_v1(ks, verts, pat, coins, ext) -> tuple | None:
    v = ext.uniform_int(len(verts))
    row = pat[v]
    for want in (1, 0):
        for i in range(ks.n):
            if row[i] == want and coins.flip(i) != want:
                return None
    for i in range(ks.n):
        if row[i] == 2 and not (coins.flip(i) == 0 and coins.flip(i) == 1):
            return None
    return verts[v]


def _round_coins_first(ks, coins, ext, need: int) -> tuple[list[int], int] | None:
    """Flip every coin; on ``need`` ones, re-flip a uniform one of them, which must read 0."""
    ones = [i for i in range(ks.n) if coins.flip(i) == 1]
    if len(ones) != need:
        return None
    pick = ones[ext.uniform_int(len(ones))]
    if coins.flip(pick) != 0:
        return None
    return ones, pick


def _round(ks: KSubsetSpec, variant: str, coins, ext, verts, pat):
    if variant == "v1":
        return _round_v1(ks, verts, pat, coins, ext)
    need = ks.k if variant == "minus" else ks.k + 1
    got = _round_coins_first(ks, coins, ext, need)
    if got is None:
        return None
    ones, pick = got
    if variant == "minus":
        return ks.vertex(ones)
    rest = [i for i in ones if i != pick]
    return ks.vertex(rest) if variant == "plus" else ks.vertex(rest, pick)


def _check_variant(ks: KSubsetSpec, variant: str) -> None:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if variant in ("v1", "v2") and ks.integral:
        raise ValueError("v1/v2 need a fractional alpha; use minus or plus")
    if variant in ("minus", "plus") and not ks.integral:
        raise ValueError("minus/plus need an integral alpha; use v1 or v2")


def sample_ksubset(
    ks: KSubsetSpec, coins: CoinSource, ext: ExternalRandomness, variant: str, round_budget: int | None = None
) -> SampleOutcome:
    _check_variant(ks, variant)
    if coins.n != ks.n:
        raise ValueError(f"expected {ks.n} coins, got {coins.n}")
    verts = ks.vertices() if variant == "v1" else None
    pat = _pattern(ks, verts) if variant == "v1" else None
    start = coins.flips_used()[1]
    rounds = 0
    while round_budget is None or rounds < round_budget:
        rounds += 1
        v = _round(ks, variant, coins, ext, verts, pat)
        if v is not None:
            return SampleOutcome(v, rounds, coins.flips_used()[1] - start)
    return SampleOutcome(None, rounds, coins.flips_used()[1] - start)


def sample_noninteger(ks, coins, ext, variant: str = "v2", round_budget=None) -> SampleOutcome:
    return sample_ksubset(ks, coins, ext, variant, round_budget)


def sampford_minus(ks, coins, ext, round_budget=None) -> SampleOutcome:
    return sample_ksubset(ks, coins, ext, "minus", round_budget)


def sampford_plus(ks, coins, ext, round_budget=None) -> SampleOutcome:
    return sample_ksubset(ks, coins, ext, "plus", round_budget)


def ksubset_batch(
    ks: KSubsetSpec,
    coins: CoinSource,
    ext: ExternalRandomness,
    count: int,
    variant: str,
    round_budget: int | None = None,
) -> OutcomeBatch:
    _check_variant(ks, variant)
    if coins.n != ks.n:
        raise ValueError(f"expected {ks.n} coins, got {coins.n}")
    if not kernel_ready(coins) or ks.n > 60:
        return OutcomeBatch.from_outcomes([sample_ksubset(ks, coins, ext, variant, round_budget) for _ in range(count)])
    if variant == "v1":
        verts = ks.vertices()
        return run_batch(
            _kernels.pattern_round, (_pattern(ks, verts),), coins, ext, count, round_budget, lambda c: verts[c]
        )
    n = ks.n
    code_of = {"minus": 0, "plus": 1, "v2": 2}[variant]
    params = (np.array([n, ks.k, code_of], dtype=np.int64), np.zeros(n, dtype=np.int64))
    cache: dict[int, tuple] = {}

    def decode(code: int):
        if code not in cache:
            mask = code & ((1 << n) - 1)
            ones = [i for i in range(n) if mask >> i & 1]
            frac_at = (code >> n) - 1 if code >> n else None
            cache[code] = ks.vertex(ones, frac_at)
        return cache[code]

    return run_batch(_kernels.subset_round, params, coins, ext, count, round_budget, decode)
