"""Exact certificates and statistical checks for factory weights."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Hashable, Mapping, Sequence

import numpy as np
from scipy import stats

from . import linalg
from .bernstein import evaluate
from .engine import TailFit, tail_fit
from .linalg import format_rational
from .randomness import ExternalRandomness

_WEIGHT_RANGE = 1 << 16


def random_convex_point(vertices: Sequence[Sequence[Fraction]], ext: ExternalRandomness) -> tuple[Fraction, ...]:
    """Convex combination with integer weights drawn from ``[1, 2^16]``."""
    ws = [1 + ext.uniform_int(_WEIGHT_RANGE) for _ in vertices]
    total = sum(ws)
    n = len(vertices[0])
    return tuple(sum((Fraction(w * v[i], total) for w, v in zip(ws, vertices)), Fraction(0)) for i in range(n))


# -- the vector identity ---------------------------------------------------------------


@dataclass
class IdentityReport:
    points: list[tuple[Fraction, ...]] = field(default_factory=list)
    residuals: list[tuple[Fraction, ...]] = field(default_factory=list)
    totals: list[Fraction] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.points) and all(not any(r) for r in self.residuals) and all(t > 0 for t in self.totals)

    @property
    def failures(self) -> list[int]:
        return [i for i, (r, t) in enumerate(zip(self.residuals, self.totals)) if any(r) or t <= 0]

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "points": len(self.points),
            "failures": [
                {
                    "point": [format_rational(c) for c in self.points[i]],
                    "residual": [format_rational(c) for c in self.residuals[i]],
                    "total": format_rational(self.totals[i]),
                }
                for i in self.failures
            ],
            "min_total": format_rational(min(self.totals)) if self.totals else None,
        }

    def to_tsv(self) -> str:
        lines = ["point\ttotal\tresidual_zero"]
        for i, (t, r) in enumerate(zip(self.totals, self.residuals)):
            lines.append(f"{i}\t{format_rational(t)}\t{int(not any(r))}")
        return "\n".join(lines)


def identity_at(weights, x: Sequence[Fraction]) -> tuple[tuple[Fraction, ...], Fraction]:
    """``(sum_v P_v(x) (v - x), sum_v P_v(x))`` computed exactly."""
    n = len(x)
    res = [Fraction(0)] * n
    total = Fraction(0)
    for v, p in weights:
        pv = evaluate(p, x)
        if not pv:
            continue
        total += pv
        for i in range(n):
            if v[i] != x[i]:
                res[i] += pv * (v[i] - x[i])
    return tuple(res), total


def verify_identity(spec, num_points: int = 100, ext: ExternalRandomness | None = None) -> IdentityReport:
    """Check the vector identity and positivity at random interior points of the polytope.

    Test points are strictly positive combinations of the spec's vertex keys,
    so they lie in the relative interior of the polytope those keys span.
    """
    ext = ext if ext is not None else ExternalRandomness(0)
    verts = spec.vertices
    if not verts:
        raise ValueError("spec has no vertices")
    report = IdentityReport()
    for _ in range(num_points):
        x = random_convex_point(verts, ext)
        r, t = identity_at(spec.weights, x)
        report.points.append(x)
        report.residuals.append(r)
        report.totals.append(t)
    return report


# -- parallelotope tilings -------------------------------------------------------------


@dataclass(frozen=True)
class Parallelotope:
    """Open set ``offset + {G lam : lam in (0,1)^k}``; empty when ``G`` is singular."""

    name: str
    sign: int
    generators: linalg.RMatrix  # k x k, columns are generators
    offset: tuple[Fraction, ...]

    @property
    def volume(self) -> Fraction:
        return abs(linalg.det(self.generators))

    @property
    def empty(self) -> bool:
        return self.volume == 0

    def coords(self, q: Sequence[Fraction]) -> tuple[Fraction, ...]:
        return linalg.solve(self.generators, [a - b for a, b in zip(q, self.offset)])

    def locate(self, q: Sequence[Fraction]) -> str:
        """``inside``, ``boundary`` or ``outside`` (empty regions are always outside)."""
        if self.empty:
            return "outside"
        lam = self.coords(q)
        if all(0 < c < 1 for c in lam):
            return "inside"
        if all(0 <= c <= 1 for c in lam):
            return "boundary"
        return "outside"


def tiling_regions(w, s_prime: Sequence[int], j: int) -> list[Parallelotope]:
    """The two complementary tilings of the zonotope spanned by columns ``s_prime + [j]``.

    For each ``i`` in ``s_prime`` the sign of ``det W_{S'[i->j]} / det W_{S'}``
    decides which of the two replacement regions joins the positive tiling.
    """
    w = linalg.as_matrix(w)
    s_prime = tuple(sorted(s_prime))
    if j in s_prime:
        raise ValueError("j must lie outside s_prime")
    w_s = linalg.submatrix_cols(w, s_prime)
    if linalg.det(w_s) == 0:
        raise linalg.SingularMatrixError("W restricted to s_prime is singular")
    k = len(w)
    zero = (Fraction(0),) * k
    wj = linalg.column(w, j)
    regions = [Parallelotope("A_j", -1, w_s, zero), Parallelotope("B_j", +1, w_s, wj)]
    for pos, i in enumerate(s_prime):
        gens = linalg.replace_column(w_s, pos, wj)
        sigma = linalg.sigma_sign(w, s_prime, i, j)
        wi = linalg.column(w, i)
        regions.append(Parallelotope(f"A_{i}", sigma, gens, zero))
        regions.append(Parallelotope(f"B_{i}", -sigma, gens, wi))
    return regions


@dataclass
class ZonotopeReport:
    regions: list[Parallelotope]
    points: int = 0
    boundary: int = 0
    violations: list[tuple[tuple[Fraction, ...], int, int]] = field(default_factory=list)
    zonotope_volume: Fraction = Fraction(0)
    positive_volume: Fraction = Fraction(0)
    negative_volume: Fraction = Fraction(0)

    @property
    def volumes_agree(self) -> bool:
        return self.zonotope_volume == self.positive_volume == self.negative_volume

    @property
    def passed(self) -> bool:
        return not self.violations and self.volumes_agree

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "points": self.points,
            "boundary_excluded": self.boundary,
            "violations": [
                {"q": [format_rational(c) for c in q], "positive": a, "negative": b} for q, a, b in self.violations
            ],
            "regions": [
                {"name": r.name, "sign": r.sign, "volume": format_rational(r.volume)} for r in self.regions
            ],
            "zonotope_volume": format_rational(self.zonotope_volume),
            "positive_volume": format_rational(self.positive_volume),
            "negative_volume": format_rational(self.negative_volume),
        }


def zonotope_identity_check(
    w, s_prime: Sequence[int], j: int, num_points: int = 200, ext: ExternalRandomness | None = None
) -> ZonotopeReport:
    """Signed membership counts of random zonotope points must balance, and volumes must match."""
    ext = ext if ext is not None else ExternalRandomness(0)
    w = linalg.as_matrix(w)
    regions = tiling_regions(w, s_prime, j)
    cols = sorted(tuple(s_prime) + (j,))
    k = len(w)
    report = ZonotopeReport(regions)
    report.zonotope_volume = sum(
        (abs(linalg.det(linalg.submatrix_cols(w, t))) for t in combinations(cols, k)), Fraction(0)
    )
    report.positive_volume = sum((r.volume for r in regions if r.sign > 0), Fraction(0))
    report.negative_volume = sum((r.volume for r in regions if r.sign < 0), Fraction(0))
    live = [r for r in regions if not r.empty and r.sign != 0]
    for _ in range(num_points):
        lam = [Fraction(1 + ext.uniform_int(_WEIGHT_RANGE - 1), _WEIGHT_RANGE) for _ in cols]
        q = tuple(sum((l * w[row][c] for l, c in zip(lam, cols)), Fraction(0)) for row in range(k))
        report.points += 1
        where = [(r, r.locate(q)) for r in live]
        if any(loc == "boundary" for _, loc in where):
            report.boundary += 1
            continue
        pos = sum(1 for r, loc in where if loc == "inside" and r.sign > 0)
        neg = sum(1 for r, loc in where if loc == "inside" and r.sign < 0)
        if pos != neg or pos > 1:
            report.violations.append((q, pos, neg))
    return report


# -- statistics -----------------------------------------------------------------------------


@dataclass
class StatReport:
    n_samples: int
    exhausted: int
    means: list[float]
    z: list[float]
    chi2: float | None
    df: int | None
    p_value: float | None
    outside_support: int
    tail: TailFit | None

    def passed(self, z_limit: float = 4.0, p_floor: float = 1e-4) -> bool:
        ok = self.n_samples > 0 and self.exhausted == 0 and all(abs(v) < z_limit for v in self.z)
        if self.p_value is not None:
            ok = ok and self.p_value > p_floor
        return ok

    def to_json(self) -> dict:
        out = {
            "n_samples": self.n_samples,
            "exhausted": self.exhausted,
            "means": self.means,
            "z": self.z,
            "chi2": self.chi2,
            "df": self.df,
            "p_value": self.p_value,
            "outside_support": self.outside_support,
            "passed": self.passed(),
        }
        if self.tail is not None:
            out["tail"] = {
                "rate": self.tail.rate,
                "degenerate": self.tail.degenerate,
                "table": [{"d": d, "exceed": c, "prob": p} for d, c, p in self.tail.table],
            }
        return out

    def to_tsv(self) -> str:
        lines = ["coord\tmean\tz"]
        lines += [f"{i}\t{m:.6f}\t{z:.3f}" for i, (m, z) in enumerate(zip(self.means, self.z))]
        if self.p_value is not None:
            lines.append(f"# chi2={self.chi2:.3f} df={self.df} p={self.p_value:.3g}")
        if self.tail is not None:
            lines.append("d\texceed\tprob")
            lines += [f"{d}\t{c}\t{p:.6g}" for d, c, p in self.tail.table]
            lines.append(f"# tail rate={self.tail.rate}")
        return "\n".join(lines)

    def __str__(self) -> str:
        return self.to_tsv()


def exact_distribution(weights, x: Sequence[Fraction]) -> dict[Hashable, Fraction]:
    """``P_v(x) / sum_w P_w(x)`` for every vertex."""
    vals = {v: evaluate(p, x) for v, p in weights}
    total = sum(vals.values())
    if total == 0:
        raise ZeroDivisionError("every weight vanishes at x; the race never stops here")
    return {v: val / total for v, val in vals.items()}


def default_thresholds(flips: np.ndarray, count: int = 12) -> list[int]:
    flips = np.asarray(flips, dtype=float)
    flips = flips[np.isfinite(flips)]
    if flips.size == 0:
        return [0]
    hi = int(np.percentile(flips, 99))
    return sorted({int(round(t)) for t in np.linspace(0, max(hi, 1), count)})


def stat_check(
    vertices: Sequence[Hashable | None],
    flips: Sequence[int] | np.ndarray,
    x: Sequence,
    exact: Mapping[Hashable, Fraction] | None = None,
    thresholds: Sequence[int] | None = None,
) -> StatReport:
    """Marginal z-scores, chi-square against ``exact`` and the flip-count tail.

    ``None`` entries in ``vertices`` are budget-exhausted runs; they are
    counted and left out of the frequencies.
    """
    x = [float(v) for v in linalg.as_vector(x)]
    done = [v for v in vertices if v is not None]
    exhausted = len(vertices) - len(done)
    n = len(x)
    N = len(done)
    arr = np.array([[float(c) for c in v] for v in done], dtype=float).reshape(N, n)
    means = arr.mean(axis=0).tolist() if N else [math.nan] * n

    if exact is not None:
        keys = list(exact)
        probs = np.array([float(exact[v]) for v in keys])
        varr = np.array([[float(c) for c in v] for v in keys], dtype=float)
        mu = probs @ varr
        sd = np.sqrt(np.maximum(probs @ (varr**2) - mu**2, 0.0))
    else:
        sd = arr.std(axis=0) if N else np.zeros(n)
    z = []
    for i in range(n):
        diff = (means[i] - x[i]) if N else math.nan
        if N == 0:
            z.append(math.nan)
        elif sd[i] > 0:
            z.append(float(diff * math.sqrt(N) / sd[i]))
        else:
            z.append(0.0 if abs(diff) < 1e-12 else math.inf)

    chi2 = df = p = None
    outside = 0
    if exact is not None and N:
        counts: dict[Hashable, int] = {}
        for v in done:
            counts[v] = counts.get(v, 0) + 1
        support = [v for v in keys if exact[v] > 0]
        outside = sum(c for v, c in counts.items() if v not in exact or exact[v] == 0)
        obs = np.array([counts.get(v, 0) for v in support], dtype=float)
        expct = np.array([float(exact[v]) * N for v in support])
        df = len(support) - 1
        if df > 0:
            chi2 = float(((obs - expct) ** 2 / expct).sum())
            p = float(stats.chi2.sf(chi2, df))
        else:
            chi2, p = 0.0, 1.0
        if outside:
            p = 0.0

    flips = np.asarray(flips, dtype=float).copy()
    flips[[v is None for v in vertices]] = np.inf
    tail = tail_fit(flips, thresholds if thresholds is not None else default_thresholds(flips)) if flips.size else None
    return StatReport(N, exhausted, means, z, chi2, df, p, outside, tail)


def report_json(report) -> str:
    return json.dumps(report.to_json(), indent=2)
