import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from instances import random_generic_instance
from polyfactory.batch import race_batch
from polyfactory.bernstein import BMonomial, BPolynomial, evaluate, poly_equal
from polyfactory.engine import PreconditionError
from polyfactory.generic import (
    NonGenericError,
    PerturbationError,
    uniform_vertex_batch,
    uniform_vertex_sample,
    build_factory,
    build_generic,
    build_perturbed,
    check_point,
    partition_weight,
    plan_generic,
    strong_factory_extremes,
)
from polyfactory.ksubset import KSubsetSpec, sampford_weight
from polyfactory.polytope import AffineSubspace, Partition, enumerate_vertices
from polyfactory.randomness import ExternalRandomness, make_sources
from polyfactory.verifier import random_convex_point, verify_identity

F = Fraction
HALF_SLICE = AffineSubspace([[1, 1, 1]], ["3/2"])


def test_partition_weight_examples():
    # vertex (1/2, 1, 0): basic x0, x1 pinned at one, x2 at zero
    w = partition_weight(HALF_SLICE, Partition((2,), (0,), (1,)))
    assert w.monomials == (BMonomial((1, 1, 0), (1, 0, 1), 1),)
    w = partition_weight(AffineSubspace([[2, 1]], ["3/2"]), Partition((1,), (0,), ()))
    assert w.monomials == (BMonomial((1, 0), (1, 1), 2),)


@pytest.mark.parametrize("seed", range(4))
def test_generic_factory_identity(seed):
    h = random_generic_instance(2, 5, ExternalRandomness(seed))
    spec = build_generic(h)
    assert spec.provenance["kind"] == "generic"
    assert verify_identity(spec, 100, ExternalRandomness(seed + 50)).passed


def test_generic_builder_refuses_degenerate_input():
    with pytest.raises(NonGenericError):
        build_generic(AffineSubspace([[1, 1, 1]], [2]))
    with pytest.raises(ValueError):
        build_generic(AffineSubspace([[1, 1]], ["5/2"]))


def test_broken_weights_fail_the_identity():
    spec = build_generic(HALF_SLICE)
    v0, p0 = spec.weights[0]
    doubled = BPolynomial(p0.n, tuple(BMonomial(m.a, m.b, 2 * m.coeff) for m in p0.monomials))
    bad = spec.with_weights([(v0, doubled)] + list(spec.weights[1:]))
    assert not verify_identity(bad, 10).passed


def test_perturbed_integral_slice_gives_a_sampford_family():
    h = AffineSubspace([[1, 1, 1]], [2])
    for seed in range(4):
        spec = build_perturbed(h, ext=ExternalRandomness(seed))
        assert spec.provenance["kind"] == "perturbed"
        assert len(spec.vertices) == 3
        w = spec.weight_map()[(F(1), F(1), F(0))]
        assert any(poly_equal(w, sampford_weight(3, [0, 1], fam)) for fam in ("minus", "plus"))
        assert verify_identity(spec, 50, ExternalRandomness(seed)).passed


def test_perturbed_minus_branch_matches_closed_form():
    # lowering the sum selects x0 x1 (1 - x2) (2 - x0 - x1); raising it the other family
    h = AffineSubspace([[1, 1, 1]], [2])
    up = build_perturbed(h, direction=[1]).weight_map()[(F(1), F(1), F(0))]
    assert poly_equal(up, sampford_weight(3, [0, 1], "plus"))
    spec = build_perturbed(h, direction=[-1])
    w = spec.weight_map()[(F(1), F(1), F(0))]
    ext = ExternalRandomness(2)
    for _ in range(20):
        x = [F(ext.uniform_int(30), 29) for _ in range(3)]
        assert evaluate(w, x) == x[0] * x[1] * (1 - x[2]) * (2 - x[0] - x[1])


def test_perturbation_error_lists_attempts():
    with pytest.raises(PerturbationError) as err:
        build_perturbed(AffineSubspace([[1, 1, 1]], [2]), max_attempts=0)
    assert err.value.attempts == []
    with pytest.raises(ValueError):
        build_perturbed(AffineSubspace([[1, 1, 1]], [2]), radius=0)
    with pytest.raises(ValueError):
        build_perturbed(AffineSubspace([[1, 1, 1]], [2]), direction=[0])


def test_build_factory_dispatches():
    assert build_factory(HALF_SLICE).provenance["kind"] == "generic"
    assert build_factory(AffineSubspace([[1, 1, 1]], [1])).provenance["kind"] == "perturbed"


@pytest.mark.parametrize("which,n", [("k=1", 3), ("k=n-1", 4)])
def test_strong_extremes(which, n):
    spec = strong_factory_extremes(n, which)
    assert verify_identity(spec, 30).passed
    for v in spec.vertices:
        assert sum(evaluate(p, v) for _, p in spec.weights) > 0
    with pytest.raises(ValueError):
        strong_factory_extremes(n, "k=2")


def test_uniform_vertex_marginals():
    x = [F(1, 2)] * 3
    coins, ext = make_sources(x, 5)
    batch = uniform_vertex_batch(HALF_SLICE, coins, ext, 100_000, 10_000)
    assert batch.exhausted == 0
    means = [sum(v[i] for v in batch.vertices) / len(batch) for i in range(3)]
    # each coordinate takes values 0, 1/2, 1 with probability 1/3: sd^2 = 1/6
    for m in means:
        assert abs(float(m) - 0.5) < 4 * math.sqrt(1 / 6 / len(batch))


def test_uniform_vertex_batch_is_bit_identical_to_python():
    h = random_generic_instance(2, 5, ExternalRandomness(3))
    plan = plan_generic(h)
    x = plan.vertices[0]
    x = tuple((a + b) / 2 for a, b in zip(plan.vertices[0], plan.vertices[-1]))
    coins, ext = make_sources(x, 17)
    py = [uniform_vertex_sample(plan, coins, ext, 10_000) for _ in range(200)]
    coins, ext = make_sources(x, 17)
    assert uniform_vertex_batch(plan, coins, ext, 200, 10_000).outcomes() == py


def test_uniform_vertex_at_a_vertex_returns_that_vertex():
    plan = plan_generic(HALF_SLICE)
    for v in plan.vertices:
        coins, ext = make_sources(v, 1)
        batch = uniform_vertex_batch(plan, coins, ext, 200, 100_000)
        assert batch.exhausted == 0
        assert set(batch.vertices) == {v}


def test_check_point():
    spec = build_generic(HALF_SLICE)
    assert check_point(spec, ["1/2", "1/2", "1/2"]) == (F(1, 2),) * 3
    with pytest.raises(PreconditionError):
        check_point(spec, [1, 1, 1])


def test_uniform_vertex_and_race_agree_across_seeds():
    h = random_generic_instance(1, 4, ExternalRandomness(11))
    spec = build_generic(h)
    plan = plan_generic(h)
    x = random_convex_point(spec.vertices, ExternalRandomness(12))
    worst = 1.0
    for seed in range(1, 21):
        c1, e1 = make_sources(x, seed)
        c2, e2 = make_sources(x, 1000 + seed)
        a = uniform_vertex_batch(plan, c1, e1, 100_000, 100_000).vertices
        b = race_batch(spec.weights, c2, e2, 100_000, 100_000).vertices
        keys = spec.vertices
        ca, cb = Counter(a), Counter(b)
        table = np.array([[ca[k] for k in keys], [cb[k] for k in keys]])
        worst = min(worst, stats.chi2_contingency(table)[1])
    assert worst > 1e-4


def test_perturbing_a_generic_subspace_changes_nothing():
    h = random_generic_instance(2, 5, ExternalRandomness(4))
    assert build_perturbed(h, radius=F(1, 1 << 30)).weights == build_generic(h).weights


@pytest.mark.parametrize(
    "h",
    [AffineSubspace([[1, 1, 1, 1]], [2]), AffineSubspace([[1, 1, 1, 1, 1], [1, 2, 0, 1, 0]], [2, 2])],
    ids=["P24", "two-rows"],
)
def test_perturbed_vertex_keys_are_the_vertices(h):
    specs = [build_perturbed(h, ext=ExternalRandomness(s)) for s in range(3)]
    for spec in specs:
        assert spec.vertices == sorted(enumerate_vertices(h))
        assert verify_identity(spec, 30, ExternalRandomness(9)).passed
