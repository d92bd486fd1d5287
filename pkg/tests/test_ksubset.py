from fractions import Fraction
from math import comb

import numpy as np
import pytest
from scipy import stats

from polyfactory.bernstein import BMonomial, evaluate, poly_equal
from polyfactory.generic import build_generic, strong_factory_extremes
from polyfactory.ksubset import (
    KSubsetSpec,
    boundary_probe,
    ksubset_batch,
    normalized_weights,
    sample_ksubset,
    sampford_factory,
    sampford_weight,
)
from polyfactory.polytope import enumerate_vertices
from polyfactory.randomness import ExternalRandomness, make_sources
from polyfactory.verifier import exact_distribution, random_convex_point, stat_check, verify_identity

F = Fraction


def frequencies(vertices):
    out = {}
    for v in vertices:
        out[v] = out.get(v, 0) + 1
    return out


def test_spec_basics():
    ks = KSubsetSpec(5, F(5, 2))
    assert (ks.k, ks.frac, ks.integral) == (2, F(1, 2), False)
    assert len(ks.vertices()) == 5 * comb(4, 2)
    assert set(ks.vertices()) == set(enumerate_vertices(ks.subspace()))
    assert len(KSubsetSpec(5, 2).vertices()) == 10
    with pytest.raises(ValueError):
        KSubsetSpec(3, 3)


def test_minus_weight_for_k_one():
    w = sampford_weight(3, [0], "minus")
    assert w.monomials == (BMonomial((1, 0, 0), (1, 1, 1)),)
    with pytest.raises(ValueError):
        sampford_weight(3, [0], "other")


@pytest.mark.parametrize("k,n", [(2, 4), (2, 5), (3, 5)])
def test_two_families_differ_as_forms_agree_on_the_polytope(k, n):
    ks = KSubsetSpec(n, k)
    minus, plus = sampford_factory(ks, "minus"), sampford_factory(ks, "plus")
    assert not any(poly_equal(p, q) for (_, p), (_, q) in zip(minus.weights, plus.weights))
    ext = ExternalRandomness(k * 10 + n)
    for _ in range(20):
        x = random_convex_point(ks.vertices(), ext)
        assert normalized_weights(minus, x) == normalized_weights(plus, x)
    assert verify_identity(minus, 30).passed and verify_identity(plus, 30).passed


@pytest.mark.parametrize("n", [4, 5])
def test_boundary_probe_vanishes_at_integral_vertices(n):
    for fam in ("minus", "plus"):
        spec = sampford_factory(KSubsetSpec(n, 2), fam)
        assert all(boundary_probe(spec, v) == 0 for v in spec.vertices)


def test_boundary_probe_positive_for_extremes():
    for which in ("k=1", "k=n-1"):
        spec = strong_factory_extremes(4, which)
        assert all(boundary_probe(spec, v) > 0 for v in spec.vertices)


def test_budgeted_run_at_a_vertex_exhausts():
    ks = KSubsetSpec(4, 2)
    v = (F(1), F(1), F(0), F(0))
    coins, ext = make_sources(v, 0)
    assert sample_ksubset(ks, coins, ext, "minus", 300).exhausted
    assert ksubset_batch(ks, coins, ext, 10, "plus", 300).exhausted == 10


@pytest.mark.parametrize(
    "alpha,variant",
    [(F(2), "minus"), (F(2), "plus"), (F(3, 2), "v1"), (F(3, 2), "v2"), (F(5, 2), "v1"), (F(5, 2), "v2")],
)
def test_batch_is_bit_identical_to_python(alpha, variant):
    ks = KSubsetSpec(5, alpha)
    x = [alpha / 5] * 5
    coins, ext = make_sources(x, 13)
    py = [sample_ksubset(ks, coins, ext, variant, 20_000) for _ in range(300)]
    coins, ext = make_sources(x, 13)
    assert ksubset_batch(ks, coins, ext, 300, variant, 20_000).outcomes() == py


def test_fractional_outputs_carry_the_fractional_part():
    ks = KSubsetSpec(3, F(3, 2))
    x = [F(1, 2)] * 3
    for variant in ("v1", "v2"):
        coins, ext = make_sources(x, 2)
        batch = ksubset_batch(ks, coins, ext, 2000, variant, 10_000)
        assert all(sorted(v) == [0, F(1, 2), 1] for v in batch.vertices)


def test_v1_and_v2_agree():
    ks = KSubsetSpec(4, F(3, 2))
    x = [F(1, 5), F(2, 5), F(3, 5), F(3, 10)]
    c1, e1 = make_sources(x, 3)
    c2, e2 = make_sources(x, 4)
    f1 = frequencies(ksubset_batch(ks, c1, e1, 50_000, "v1", 10_000).vertices)
    f2 = frequencies(ksubset_batch(ks, c2, e2, 50_000, "v2", 10_000).vertices)
    keys = sorted(set(f1) | set(f2))
    table = np.array([[f1.get(k, 0) for k in keys], [f2.get(k, 0) for k in keys]])
    assert stats.chi2_contingency(table)[1] > 1e-4


@pytest.mark.parametrize("variant", ["minus", "plus"])
def test_sampford_frequencies_match_exact_weights(variant):
    ks = KSubsetSpec(4, 2)
    x = [F(3, 5), F(3, 5), F(2, 5), F(2, 5)]
    coins, ext = make_sources(x, 6)
    batch = ksubset_batch(ks, coins, ext, 100_000, variant, 10_000)
    exact = exact_distribution(sampford_factory(ks, "minus").weights, x)
    report = stat_check(batch.vertices, batch.flips, x, exact)
    assert report.passed(), report.to_json()
    assert report.tail.rate < 1


def test_fractional_frequencies_match_generic_weights():
    ks = KSubsetSpec(4, F(5, 2))
    x = [F(1, 2), F(3, 4), F(3, 4), F(1, 2)]
    coins, ext = make_sources(x, 7)
    batch = ksubset_batch(ks, coins, ext, 60_000, "v2", 10_000)
    exact = exact_distribution(build_generic(ks.subspace()).weights, x)
    assert stat_check(batch.vertices, batch.flips, x, exact).passed()


def test_variant_checks():
    coins, ext = make_sources([F(1, 2)] * 4, 0)
    with pytest.raises(ValueError):
        sample_ksubset(KSubsetSpec(4, 2), coins, ext, "v1")
    with pytest.raises(ValueError):
        sample_ksubset(KSubsetSpec(4, F(3, 2)), coins, ext, "minus")
    with pytest.raises(ValueError):
        ksubset_batch(KSubsetSpec(4, 2), coins, ext, 1, "best")
    with pytest.raises(ValueError):
        ksubset_batch(KSubsetSpec(5, 2), coins, ext, 1, "minus")
