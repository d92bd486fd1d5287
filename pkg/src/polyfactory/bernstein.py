"""Bernstein monomials ``c * prod x_i^a_i (1 - x_i)^b_i`` and positive sums of them.

Polynomials stay in this form throughout; they are never expanded into the
power basis, which would lose coefficient positivity.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .linalg import format_rational, parse_rational

_ONE = Fraction(1)


@dataclass(frozen=True, order=True)
class BMonomial:
    a: tuple[int, ...]
    b: tuple[int, ...]
    coeff: Fraction = _ONE

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(int(e) for e in self.a))
        object.__setattr__(self, "b", tuple(int(e) for e in self.b))
        object.__setattr__(self, "coeff", parse_rational(self.coeff))
        if len(self.a) != len(self.b):
            raise ValueError("exponent vectors differ in length")
        if self.coeff <= 0:
            raise ValueError("Bernstein coefficients must be positive")
        if any(e < 0 for e in self.a + self.b):
            raise ValueError("exponents must be non-negative")

    @property
    def n(self) -> int:
        return len(self.a)

    def degree(self, i: int) -> int:
        return self.a[i] + self.b[i]

    def evaluate(self, x: Sequence[Fraction]) -> Fraction:
        val = self.coeff
        for xi, ai, bi in zip(x, self.a, self.b):
            if ai:
                val *= xi**ai
            if bi:
                val *= (1 - xi) ** bi
            if not val:
                break
        return val

    def times(self, other: "BMonomial") -> "BMonomial":
        return BMonomial(
            tuple(p + q for p, q in zip(self.a, other.a)),
            tuple(p + q for p, q in zip(self.b, other.b)),
            self.coeff * other.coeff,
        )

    @classmethod
    def from_sets(cls, n: int, ones: Iterable[int] = (), zeros: Iterable[int] = (), coeff=1) -> "BMonomial":
        """Monomial with a factor ``x_i`` per index in ``ones`` and ``(1-x_i)`` per index in ``zeros``."""
        a = [0] * n
        b = [0] * n
        for i in ones:
            a[i] += 1
        for i in zeros:
            b[i] += 1
        return cls(tuple(a), tuple(b), coeff)


@dataclass(frozen=True)
class BPolynomial:
    n: int
    monomials: tuple[BMonomial, ...]

    def __post_init__(self):
        object.__setattr__(self, "monomials", tuple(self.monomials))
        for m in self.monomials:
            if m.n != self.n:
                raise ValueError(f"monomial over {m.n} variables in a polynomial over {self.n}")

    def __add__(self, other: "BPolynomial") -> "BPolynomial":
        if other.n != self.n:
            raise ValueError("variable counts differ")
        return BPolynomial(self.n, self.monomials + other.monomials)

    def __len__(self) -> int:
        return len(self.monomials)


def evaluate(p: BPolynomial, x: Sequence) -> Fraction:
    if len(x) != p.n:
        raise ValueError(f"point has {len(x)} coordinates, polynomial has {p.n} variables")
    x = [parse_rational(v) for v in x]
    return sum((m.evaluate(x) for m in p.monomials), Fraction(0))


def coeff_sum(p: BPolynomial) -> Fraction:
    return sum((m.coeff for m in p.monomials), Fraction(0))


def max_degree(p: BPolynomial) -> tuple[int, ...]:
    return tuple(max((m.degree(i) for m in p.monomials), default=0) for i in range(p.n))


def canonical(p: BPolynomial) -> BPolynomial:
    """Merge monomials with identical exponents and sort by ``(a, b)``."""
    merged: dict[tuple, Fraction] = {}
    for m in p.monomials:
        key = (m.a, m.b)
        merged[key] = merged.get(key, Fraction(0)) + m.coeff
    return BPolynomial(p.n, tuple(BMonomial(a, b, c) for (a, b), c in sorted(merged.items())))


def poly_equal(p: BPolynomial, q: BPolynomial) -> bool:
    """Equality of canonical forms (stricter than equality as functions)."""
    if p.n != q.n:
        raise ValueError("variable counts differ")
    return canonical(p).monomials == canonical(q).monomials


def multiply(p: BPolynomial, q: BPolynomial) -> BPolynomial:
    if p.n != q.n:
        raise ValueError("variable counts differ")
    return BPolynomial(p.n, tuple(m1.times(m2) for m1 in p.monomials for m2 in q.monomials))


def divide_by_monomial(p: BPolynomial, m: BMonomial) -> BPolynomial | None:
    """Exact quotient ``p / m`` as a form, or ``None`` if some monomial is not divisible."""
    if m.coeff != 1:
        raise ValueError("divisor must have coefficient 1")
    if m.n != p.n:
        raise ValueError("variable counts differ")
    out = []
    for t in p.monomials:
        a = tuple(x - y for x, y in zip(t.a, m.a))
        b = tuple(x - y for x, y in zip(t.b, m.b))
        if min(a + b, default=0) < 0:
            return None
        out.append(BMonomial(a, b, t.coeff))
    return BPolynomial(p.n, tuple(out))


def to_json(p: BPolynomial) -> dict:
    return {
        "n": p.n,
        "monomials": [{"c": format_rational(m.coeff), "a": list(m.a), "b": list(m.b)} for m in p.monomials],
    }


def from_json(data: dict) -> BPolynomial:
    n = int(data["n"])
    return BPolynomial(n, tuple(BMonomial(tuple(d["a"]), tuple(d["b"]), parse_rational(d["c"])) for d in data["monomials"]))
