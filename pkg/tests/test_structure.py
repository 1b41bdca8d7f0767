import itertools

import numpy as np
import pytest
from helpers import brute_distance, planted_instance
from hypothesis import given, settings
from hypothesis import strategies as st

from anticonc._rng import make_rng
from anticonc.errors import InstanceTooLargeError, InvalidInputError, TooManyGeneratorsError
from anticonc.idiv import CompoundPoissonModel
from anticonc.measures import FiniteDiscreteMeasure
from anticonc.structure import (
    GeneratorSet,
    covered_mask,
    default_pool,
    deficit,
    enumerate_K1,
    factor_product_report,
    search_generators,
    theorem_scaling_report,
)


def k1_set(u):
    return sorted(float(x) for x in enumerate_K1(u)[:, 0])


def test_k1_examples():
    assert enumerate_K1(GeneratorSet([], dim=1)).tolist() == [[0.0]]
    assert k1_set([1.0, 3.0]) == [-4, -3, -2, -1, 0, 1, 2, 3, 4]
    assert k1_set([1.0, 1.0]) == [-2, -1, 0, 1, 2]
    K = enumerate_K1(GeneratorSet([[1.0, 0.0], [0.0, 2.0]]))
    assert K.shape == (9, 2)


def test_k1_cap():
    with pytest.raises(TooManyGeneratorsError):
        enumerate_K1(np.arange(1, 14, dtype=float))
    with pytest.raises(InvalidInputError):
        GeneratorSet([np.nan])


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-6, 6), max_size=5), st.integers(-6, 6))
def test_k1_invariants(u, v):
    K = set(k1_set(np.array(u, dtype=float)))
    assert 0.0 in K
    assert all(-x in K for x in K)
    assert len(K) <= 3 ** len(u)
    assert K <= set(k1_set(np.array(u + [v], dtype=float)))


def test_deficit_examples():
    E5 = FiniteDiscreteMeasure.point_mass(5.0)
    assert deficit(E5, 2.0, [1.0, 3.0], 0.5) == 2.0
    assert deficit(E5, 3.5, [1.0, 3.0], 0.5) == 3.5
    assert deficit(E5, 2.0, [1.0, 3.0], 1.0) == 0.0  # closed neighbourhood
    M = FiniteDiscreteMeasure([-4.0, 0.2, 2.9], [0.2, 0.3, 0.5])
    assert deficit(M, 1.0, [1.0, 3.0], 0.2) == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_covered_mask_matches_brute_force(seed):
    rng = make_rng(seed, 0x51)
    d = int(rng.integers(1, 3))
    r = int(rng.integers(0, 5))
    u = rng.uniform(-3, 3, (r, d))
    pts = rng.uniform(-8, 8, (60, d))
    tau = float(rng.uniform(0, 1))
    K = enumerate_K1(GeneratorSet(u, d))
    assert len(pts) * len(K) <= 10**4
    np.testing.assert_array_equal(covered_mask(pts, GeneratorSet(u, d), tau), brute_distance(pts, K) <= tau)


def test_streaming_matches_materialised():
    rng = make_rng(1, 0x52)
    u = rng.integers(1, 50, size=14).astype(float) / 7
    pts = rng.uniform(-60, 60, (300, 1))
    streamed = covered_mask(pts, u, 0.05)
    # oracle: materialise all 3^14 sums directly
    sums = np.array(list(itertools.product((-1, 0, 1), repeat=14)), dtype=float) @ u
    sums = np.unique(sums)
    idx = np.clip(np.searchsorted(sums, pts[:, 0]), 1, len(sums) - 1)
    dist = np.minimum(np.abs(sums[idx] - pts[:, 0]), np.abs(sums[idx - 1] - pts[:, 0]))
    np.testing.assert_array_equal(streamed, dist <= 0.05 + 1e-12)
    with pytest.raises(TooManyGeneratorsError):
        covered_mask(pts, np.ones(19), 0.1)


def test_deficit_monotone():
    rng = make_rng(2, 0x53)
    for _ in range(20):
        M = FiniteDiscreteMeasure(rng.uniform(-5, 5, (12, 2)), rng.dirichlet(np.ones(12)))
        u = rng.uniform(-3, 3, (2, 2))
        v = rng.uniform(-3, 3, 2)
        base = deficit(M, 1.0, u, 0.3)
        assert deficit(M, 1.0, np.vstack([u, v]), 0.3) <= base
        assert deficit(M, 1.0, u, 0.6) <= base


# -- search ---------------------------------------------------------------------


def test_rmax_zero():
    M = FiniteDiscreteMeasure([-2.0, 0.1, 3.0], [0.2, 0.3, 0.5])
    rep = search_generators(M, 2.0, 0.5, 0)
    assert rep.r == 0 and rep.deficit == pytest.approx(2.0 * 0.7)


def test_default_pool_contents():
    M = FiniteDiscreteMeasure([1.0, 4.0], [0.5, 0.5])
    pool = sorted(default_pool(M)[:, 0])
    assert pool == [0.5, 1.0, 2.0, 3.0, 4.0]


@pytest.mark.parametrize("seed", range(10))
def test_planted_recovery(seed):
    rng = make_rng(seed, 0x54)
    M, u = planted_instance(rng, int(rng.integers(1, 3)), 2)
    rep = search_generators(M, 1.0, 0.05, 4)
    assert rep.deficit == 0.0 and rep.r <= 4


@pytest.mark.parametrize("seed", range(8))
def test_exact_never_beaten_and_monotone(seed):
    rng = make_rng(seed, 0x55)
    M = FiniteDiscreteMeasure(rng.integers(-8, 9, 10) + rng.uniform(-0.05, 0.05, 10), np.full(10, 0.1))
    pool = rng.integers(1, 7, size=12).astype(float) + rng.uniform(0, 0.5, 12).round(1)
    prev = np.inf
    for r_max in range(4):
        g = search_generators(M, 1.0, 0.1, r_max, "greedy", candidate_pool=pool)
        e = search_generators(M, 1.0, 0.1, r_max, "exact", candidate_pool=pool)
        assert e.deficit <= g.deficit + 1e-12
        assert g.deficit <= prev + 1e-12
        assert all(x >= y - 1e-15 for x, y in zip(g.history, g.history[1:]))
        prev = g.deficit


def test_exact_pool_explosion():
    M = FiniteDiscreteMeasure.uniform(np.arange(10.0))
    with pytest.raises(InstanceTooLargeError):
        search_generators(M, 1.0, 0.1, 5, "exact", candidate_pool=np.arange(1.0, 200.0))
    with pytest.raises(InvalidInputError):
        search_generators(M, 1.0, 0.1, 2, "nope")


def test_search_deterministic():
    M, _ = planted_instance(make_rng(3, 0), 2, 3)
    assert search_generators(M, 1.0, 0.05, 5).to_json() == search_generators(M, 1.0, 0.05, 5, seed=9).to_json()


# -- scaling reports -------------------------------------------------------------


def test_scaling_near_degenerate():
    model = CompoundPoissonModel(1e-4, FiniteDiscreteMeasure([-0.01, 0.01], [0.5, 0.5]))
    rep = theorem_scaling_report(model, 0.5, 3, mc_samples=2000)
    assert rep.r == 0 and rep.deficit == 0.0
    assert rep.gamma > 0.99


def test_scaling_sweep():
    ratios = []
    gammas = []
    for alpha in (4, 16, 64):
        model = CompoundPoissonModel(float(alpha), FiniteDiscreteMeasure.rademacher())
        rep = theorem_scaling_report(model, 0.5, 3, mc_samples=20000, seed=1)
        ratios.append(rep.ratio_r)
        gammas.append(rep.gamma)
        assert rep.deficit == 0.0
    assert gammas[0] > gammas[1] > gammas[2]
    assert max(ratios) / min(ratios) < 10
    again = theorem_scaling_report(CompoundPoissonModel(4.0, FiniteDiscreteMeasure.rademacher()), 0.5, 3, 20000, 1)
    assert again.to_json() == theorem_scaling_report(
        CompoundPoissonModel(4.0, FiniteDiscreteMeasure.rademacher()), 0.5, 3, 20000, 1
    ).to_json()


def test_factor_product():
    factors = [FiniteDiscreteMeasure([3.0, 4.0], [0.6, 0.4]), FiniteDiscreteMeasure([-1.0, 1.0], [0.7, 0.3])]
    rep = factor_product_report(factors, 0.1, 2)
    assert rep.deficit == 0.0
    assert rep.gamma == pytest.approx(0.42)
    assert rep.notes
