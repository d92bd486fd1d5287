"""Coin sources and external randomness.

Both draw from :class:`U64Stream`, a buffered view of the raw 64-bit output
of numpy's PCG64.  The compiled batch samplers read the very same buffers, so
for a given seed the pure-Python samplers and the batch samplers consume the
streams identically and produce identical outcomes.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Protocol, Sequence

import numpy as np

from .linalg import parse_rational

_BLOCK = 4096
_TWO64 = 1 << 64
_MASK64 = _TWO64 - 1


class U64Stream:
    """Raw 64-bit words from a seeded PCG64, independent of block size."""

    def __init__(self, seed: int, stream_id: int):
        self._bitgen = np.random.PCG64(np.random.SeedSequence([int(seed) & _MASK64, stream_id]))
        self.buf = np.empty(0, dtype=np.uint64)
        self.pos = 0

    def next(self) -> int:
        if self.pos >= len(self.buf):
            self.extend()
        v = int(self.buf[self.pos])
        self.pos += 1
        return v

    def extend(self, at_least: int = _BLOCK) -> None:
        """Keep the unread tail and append fresh words to it."""
        fresh = self._bitgen.random_raw(max(at_least, _BLOCK))
        self.buf = np.concatenate([self.buf[self.pos:], fresh.astype(np.uint64)])
        self.pos = 0


def bernoulli_from_stream(stream: U64Stream, p: Fraction) -> int:
    """Exact Bernoulli(p) by comparing a uniform binary expansion with ``p``'s.

    Each 64-bit word refines the uniform point's interval; a tie with the
    current 64-bit chunk of ``p`` carries the remainder to the next word.
    """
    if p <= 0:
        return 0
    if p >= 1:
        return 1
    num, den = p.numerator, p.denominator
    while True:
        t, num = divmod(num << 64, den)
        u = stream.next()
        if u < t:
            return 1
        if u > t or num == 0:
            return 0


def chunk_params(p: Fraction) -> tuple[int, int, int, int]:
    """``(kind, first_chunk, remainder, den)`` describing Bernoulli(p) for the kernels.

    kind 0 and 1 are the deterministic coins; kind 2 is random, and kind 3
    flags a denominator too large for 64-bit kernel arithmetic.
    """
    if p <= 0:
        return 0, 0, 0, 1
    if p >= 1:
        return 1, 0, 0, 1
    if p.denominator >= 1 << 62:
        return 3, 0, 0, 1
    t, r = divmod(p.numerator << 64, p.denominator)
    return 2, t, r, p.denominator


class CoinSource(Protocol):
    """The only access a sampler has to the hidden point."""

    n: int

    def flip(self, i: int) -> int: ...

    def flips_used(self) -> tuple[tuple[int, ...], int]: ...


class SimulatedCoins:
    """Independent Bernoulli(x_i) coins for a hidden rational point ``x``."""

    def __init__(self, x: Sequence, seed: int):
        self._x = tuple(parse_rational(v) for v in x)
        for v in self._x:
            if not 0 <= v <= 1:
                raise ValueError(f"coin parameter {v} outside [0, 1]")
        self.n = len(self._x)
        self.seed = seed
        self.stream = U64Stream(seed, 0)
        self.counts = [0] * self.n

    def flip(self, i: int) -> int:
        self.counts[i] += 1
        return bernoulli_from_stream(self.stream, self._x[i])

    def flips_used(self) -> tuple[tuple[int, ...], int]:
        return tuple(self.counts), sum(self.counts)

    def kernel_params(self) -> np.ndarray:
        """Per-coordinate ``(kind, chunk, remainder, den)`` rows for the batch samplers."""
        return np.array([chunk_params(v) for v in self._x], dtype=np.uint64).reshape(self.n, 4)


class ExternalRandomness:
    """Seeded uniform randomness independent of every coin."""

    def __init__(self, seed: int):
        self.seed = seed
        self.stream = U64Stream(seed, 1)

    def uniform_int(self, m: int) -> int:
        """Exactly uniform on ``range(m)`` by rejection from a power-of-two range."""
        if m <= 0:
            raise ValueError("empty range")
        if m == 1:
            return 0
        shift = 64 - (m - 1).bit_length()
        while True:
            u = self.stream.next() >> shift
            if u < m:
                return u

    def bernoulli(self, p) -> int:
        return bernoulli_from_stream(self.stream, parse_rational(p))

    def permutation(self, n: int) -> list[int]:
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.uniform_int(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def choose_weighted(self, weights: Sequence[Fraction], total: Fraction) -> int | None:
        """Index ``j`` with probability ``weights[j] / total``; ``None`` for the leftover mass.

        Realised as a chain of conditional known-probability coins.
        """
        remaining = total
        for j, w in enumerate(weights):
            if self.bernoulli(w / remaining):
                return j
            remaining -= w
            if remaining <= 0:
                return None
        return None


def make_sources(x: Sequence, seed: int) -> tuple[SimulatedCoins, ExternalRandomness]:
    return SimulatedCoins(x, seed), ExternalRandomness(seed)
