"""Many samples at once through the compiled round functions.

The batch path and the one-at-a-time samplers read the same word streams in
the same order, so for one seed they return identical outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

import numpy as np

from . import _kernels
from .engine import SampleOutcome
from .randomness import ExternalRandomness, SimulatedCoins

_CHUNK = 1 << 20


@dataclass
class OutcomeBatch:
    """Parallel arrays of sample results; ``vertices[s] is None`` marks an exhausted budget."""

    vertices: list
    rounds: np.ndarray
    flips: np.ndarray

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def exhausted(self) -> int:
        return sum(v is None for v in self.vertices)

    def outcomes(self) -> list[SampleOutcome]:
        return [SampleOutcome(v, int(r), int(f)) for v, r, f in zip(self.vertices, self.rounds, self.flips)]

    @classmethod
    def from_outcomes(cls, outs: Sequence[SampleOutcome]) -> "OutcomeBatch":
        return cls(
            [o.vertex for o in outs],
            np.array([o.rounds for o in outs], dtype=np.int64),
            np.array([o.flips for o in outs], dtype=np.int64),
        )


def kernel_ready(coins, *param_tables: np.ndarray) -> bool:
    """True when the compiled path can stand in for the Python sampler."""
    if not isinstance(coins, SimulatedCoins):
        return False
    tables = (coins.kernel_params(),) + param_tables
    return all(t.size == 0 or not np.any(t[:, 0] == 3) for t in tables)


def run_batch(
    round_fn,
    params: tuple,
    coins: SimulatedCoins,
    ext: ExternalRandomness,
    count: int,
    round_budget: int | None,
    decode: Callable[[int], Hashable],
) -> OutcomeBatch:
    cp = coins.kernel_params()
    cs, es = coins.stream, ext.stream
    st = np.zeros(3, dtype=np.int64)
    prog = np.zeros(3, dtype=np.int64)
    counts = np.zeros(coins.n, dtype=np.int64)
    tally = np.zeros(coins.n, dtype=np.int64)
    codes = np.empty(count, dtype=np.int64)
    rounds = np.empty(count, dtype=np.int64)
    flips = np.empty(count, dtype=np.int64)
    budget = 0 if round_budget is None else int(round_budget)
    if budget < 0:
        raise ValueError("round budget must be positive")
    while True:
        st[0], st[1], st[2] = cs.pos, es.pos, 0
        status = _kernels.drive(
            round_fn, params, cp, cs.buf, es.buf, st, prog, counts, tally, codes, rounds, flips, budget
        )
        cs.pos, es.pos = int(st[0]), int(st[1])
        if status == 0:
            break
        # a buffer ran dry mid-round and the round was rewound
        stream = cs if status == 1 else es
        stream.extend(max(2 * (len(stream.buf) - stream.pos), _CHUNK))
    for i, c in enumerate(counts):
        coins.counts[i] += int(c)
    verts = [None if c < 0 else decode(int(c)) for c in codes]
    return OutcomeBatch(verts, rounds, flips)


def race_tables(weights: Sequence[tuple[Hashable, "BPolynomial"]]):
    """Monomial tables for the compiled race: offsets, monomial-choice coins, exponents."""
    from .engine import race_normaliser
    from .randomness import chunk_params

    polys = [p for _, p in weights]
    c_norm = race_normaliser(polys)
    n = polys[0].n
    starts = [0]
    chain, ea, eb = [], [], []
    for p in polys:
        remaining = c_norm
        for m in p.monomials:
            chain.append(chunk_params(m.coeff / remaining))
            remaining -= m.coeff
            ea.append(m.a)
            eb.append(m.b)
        starts.append(len(chain))
    return (
        np.array(starts, dtype=np.int64),
        np.array(chain, dtype=np.uint64).reshape(-1, 4),
        np.array(ea, dtype=np.int64).reshape(-1, n),
        np.array(eb, dtype=np.int64).reshape(-1, n),
    )


def race_batch(weights, coins, ext: ExternalRandomness, count: int, round_budget: int | None = None) -> OutcomeBatch:
    """``count`` independent Bernoulli races over the same weights."""
    from .engine import bernoulli_race

    items = list(weights.items()) if hasattr(weights, "items") else list(weights)
    tables = race_tables(items)
    if not kernel_ready(coins, tables[1]):
        return OutcomeBatch.from_outcomes([bernoulli_race(items, coins, ext, round_budget) for _ in range(count)])
    keys = [v for v, _ in items]
    return run_batch(_kernels.race_round, tables, coins, ext, count, round_budget, lambda c: keys[c])
