"""The one-bit Bernstein factory, the Bernoulli race, and flip-count tail fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

import numpy as np

from .bernstein import BPolynomial, coeff_sum
from .randomness import CoinSource, ExternalRandomness


@dataclass(frozen=True)
class SampleOutcome:
    """One factory run: the vertex (``None`` if the round budget ran out), rounds and flips."""

    vertex: Hashable | None
    rounds: int
    flips: int

    @property
    def exhausted(self) -> bool:
        return self.vertex is None


class PreconditionError(ValueError):
    pass


def one_bit_bernstein(p: BPolynomial, c_norm: Fraction, coins: CoinSource, ext: ExternalRandomness) -> int:
    """Return 1 with probability ``p(x) / c_norm``.

    A monomial is chosen with probability ``c_j / c_norm`` (nothing is chosen
    with the leftover mass), then for every variable in index order the coin
    must show ``a_i`` ones followed by ``b_i`` zeros.  Stops at the first
    mismatch.
    """
    c_norm = Fraction(c_norm)
    if c_norm < coeff_sum(p):
        raise PreconditionError(f"normaliser {c_norm} is below the coefficient sum {coeff_sum(p)}")
    j = ext.choose_weighted([m.coeff for m in p.monomials], c_norm)
    if j is None:
        return 0
    m = p.monomials[j]
    for i in range(p.n):
        for _ in range(m.a[i]):
            if coins.flip(i) != 1:
                return 0
        for _ in range(m.b[i]):
            if coins.flip(i) != 0:
                return 0
    return 1


def race_normaliser(polys: Sequence[BPolynomial]) -> Fraction:
    return max(coeff_sum(p) for p in polys)


def bernoulli_race(
    weights: Mapping[Hashable, BPolynomial] | Sequence[tuple[Hashable, BPolynomial]],
    coins: CoinSource,
    ext: ExternalRandomness,
    round_budget: int | None = None,
) -> SampleOutcome:
    """Pick a candidate uniformly, accept it via its one-bit factory, repeat.

    Outputs ``v`` with probability ``P_v(x) / sum_w P_w(x)``.  Without a
    budget this loops until acceptance, which never happens when every
    polynomial vanishes at ``x``.
    """
    items = list(weights.items()) if isinstance(weights, Mapping) else list(weights)
    if not items:
        raise PreconditionError("the race needs at least one candidate")
    n = items[0][1].n
    if any(p.n != n for _, p in items):
        raise PreconditionError("all weight polynomials must share one variable count")
    c_norm = race_normaliser([p for _, p in items])
    start = coins.flips_used()[1]
    rounds = 0
    while round_budget is None or rounds < round_budget:
        rounds += 1
        v, p = items[ext.uniform_int(len(items))]
        if one_bit_bernstein(p, c_norm, coins, ext):
            return SampleOutcome(v, rounds, coins.flips_used()[1] - start)
    return SampleOutcome(None, rounds, coins.flips_used()[1] - start)


@dataclass
class TailFit:
    """Empirical ``Pr[T > d]`` per threshold and the fitted geometric rate."""

    table: list[tuple[int, int, float]] = field(default_factory=list)
    rate: float | None = None
    fitted_on: list[int] = field(default_factory=list)
    degenerate: bool = False

    def monotone_decreasing(self) -> bool:
        probs = [p for d, _, p in self.table if d in self.fitted_on]
        return all(a > b for a, b in zip(probs, probs[1:]))


def tail_fit(flips: Sequence[int] | np.ndarray, thresholds: Sequence[int], min_exceed: int = 30) -> TailFit:
    """Fit ``Pr[T > d] ~ c^d`` by least squares on ``log Pr`` against ``d``.

    Runs that never terminated count as ``T = inf``.  Only thresholds with at
    least ``min_exceed`` exceedances enter the fit; fewer than two such
    thresholds leaves the fit empty and flags it degenerate.
    """
    t = np.asarray(flips, dtype=float)
    if t.size == 0:
        raise ValueError("no samples")
    out = TailFit()
    for d in sorted(thresholds):
        count = int(np.count_nonzero(t > d))
        out.table.append((int(d), count, count / t.size))
        if count >= min_exceed:
            out.fitted_on.append(int(d))
    if len(out.fitted_on) < 2:
        out.degenerate = True
        return out
    ds = np.array(out.fitted_on, dtype=float)
    logs = np.log([p for d, _, p in out.table if d in out.fitted_on])
    slope = np.polyfit(ds, logs, 1)[0]
    out.rate = float(math.exp(slope))
    return out
