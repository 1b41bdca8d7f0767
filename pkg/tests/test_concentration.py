import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anticonc._rng import make_rng
from anticonc.concentration import (
    concentration_exact,
    concentration_exact_1d,
    concentration_exact_2d,
    concentration_mc,
    rademacher_sum_concentration,
    rademacher_sum_distribution,
    sampler_from_measure,
)
from anticonc.errors import DimensionError, InstanceTooLargeError, InsufficientSamplesError
from anticonc.measures import FiniteDiscreteMeasure, paper_floor


def brute_window(F, lam):
    """Oracle: every closed interval [x_i, x_i + lam], summed atom by atom."""
    x, m = F.points[:, 0], F.masses
    return max(sum(mj for xj, mj in zip(x, m) if xi - 1e-12 <= xj <= xi + lam + 1e-12) for xi in x)


def brute_disk(F, lam, rng, n_centers=20000):
    """Lower oracle for the disk maximum: atoms and random centres."""
    P, m = F.points, F.masses
    lo, hi = P.min(0) - lam, P.max(0) + lam
    centers = np.vstack([P, rng.uniform(lo, hi, (n_centers, 2))])
    d = np.linalg.norm(centers[:, None, :] - P[None], axis=-1)
    return float(((d <= lam / 2 + 1e-12) * m).sum(1).max())


def test_examples_1d():
    assert concentration_exact_1d(FiniteDiscreteMeasure.point_mass(0.0), 3.0).value == 1.0
    U = FiniteDiscreteMeasure.uniform([0, 1, 2, 3])
    assert concentration_exact_1d(U, 1.0).value == 0.5
    assert concentration_exact_1d(U, 0.0).value == 0.25
    r = concentration_exact_1d(U, 1.0)
    assert r.method == "exact-1d" and r.half_width == 0


def test_examples_2d():
    sq = FiniteDiscreteMeasure([[0, 0], [1, 0], [0, 1], [1, 1]], np.full(4, 0.25))
    assert concentration_exact_2d(sq, math.sqrt(2)).value == 1.0
    assert concentration_exact_2d(sq, 1.0).value == 0.5
    assert concentration_exact_2d(FiniteDiscreteMeasure.point_mass([3.0, 4.0]), 0.5).value == 1.0
    with pytest.raises(DimensionError):
        concentration_exact_2d(FiniteDiscreteMeasure.uniform([0, 1]), 1.0)
    with pytest.raises(DimensionError):
        concentration_exact(FiniteDiscreteMeasure.point_mass([0.0, 0.0, 0.0]), 1.0)


@settings(max_examples=80, deadline=None)
@given(
    st.lists(st.integers(-20, 20), min_size=1, max_size=12, unique=True),
    st.integers(0, 10**6),
    st.floats(0.0, 15.0),
)
def test_window_matches_brute_force(xs, wseed, lam):
    w = np.random.default_rng(wseed).uniform(0.1, 1, len(xs))
    F = FiniteDiscreteMeasure(np.array(xs) / 2.0, w / w.sum())
    assert concentration_exact_1d(F, lam).value == pytest.approx(brute_window(F, lam), abs=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_disk_dominates_random_centres(seed):
    rng = make_rng(seed, 1)
    k = int(rng.integers(2, 15))
    F = FiniteDiscreteMeasure(rng.uniform(-2, 2, (k, 2)), rng.dirichlet(np.ones(k)))
    lam = float(rng.uniform(0.3, 3))
    exact = concentration_exact_2d(F, lam).value
    lower = brute_disk(F, lam, rng)
    assert exact >= lower - 1e-12
    # the random-centre search should get close on small instances
    assert exact <= lower + 0.35


def test_monotone_in_radius():
    rng = make_rng(3, 2)
    for _ in range(20):
        F = FiniteDiscreteMeasure(rng.normal(size=(8, 2)), rng.dirichlet(np.ones(8)))
        vals = [concentration_exact_2d(F, l).value for l in np.linspace(0.1, 4, 12)]
        assert all(x <= y + 1e-15 for x, y in zip(vals, vals[1:]))
        assert vals[0] >= F.masses.max()


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.01, 6), st.floats(0.01, 6))
def test_regularity_with_covering_count(seed, mu, lam):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 10))
    F = FiniteDiscreteMeasure(rng.uniform(-5, 5, k), rng.dirichlet(np.ones(k)))
    lhs = concentration_exact_1d(F, mu).value
    assert lhs <= (paper_floor(mu / lam) + 2) * concentration_exact_1d(F, lam).value + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.1, 5), st.floats(0.05, 5))
def test_scaling(seed, z, tau):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 8))
    F = FiniteDiscreteMeasure(rng.integers(-6, 7, k) / 4.0 + 0.01 * np.arange(k), rng.dirichlet(np.ones(k)))
    for s in (z, -z):
        assert concentration_exact_1d(F.scale(s), tau).value == pytest.approx(
            concentration_exact_1d(F, tau / abs(s)).value, abs=1e-12
        )


# -- Rademacher sums ------------------------------------------------------------


def enumerate_signs(a, tau):
    """Oracle: all 2^n sign patterns, then the brute window."""
    sums = [float(np.dot(s, a)) for s in itertools.product([-1, 1], repeat=len(a))]
    vals, counts = np.unique(np.round(sums, 12), return_counts=True)
    return brute_window(FiniteDiscreteMeasure(vals, counts / counts.sum()), tau)


def test_rademacher_examples():
    assert rademacher_sum_concentration([1, 1, 1, 1], 1).value == 0.375
    assert rademacher_sum_concentration(np.ones(10), 1).value == 252 / 1024
    assert rademacher_sum_concentration([1, 2], 0).value == 0.25
    assert rademacher_sum_concentration(np.ones(10), 1).method == "dp"


@pytest.mark.parametrize("n", range(1, 21))
def test_littlewood_offord_values(n):
    for tau in (0.0, 0.5, 1.0, 1.999):
        assert rademacher_sum_concentration(np.ones(n), tau).value == pytest.approx(
            math.comb(n, n // 2) / 2**n, abs=1e-12
        )


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-9, 9), min_size=1, max_size=10), st.sampled_from([0.0, 0.5, 1.0, 2.5, 7.0]))
def test_dp_matches_enumeration(a, tau):
    a = np.array(a, dtype=float) / 4
    assert rademacher_sum_concentration(a, tau).value == pytest.approx(enumerate_signs(a, tau), abs=1e-12)


def test_enumeration_path_for_gridless_coefficients():
    a = np.array([1.0, math.pi, math.e, math.sqrt(2) * 1e-9])
    law, method = rademacher_sum_distribution(a, max_span=1000)
    assert method == "enumeration"
    assert law.size == 16
    assert rademacher_sum_concentration([1.0, math.pi], 0.5).value == pytest.approx(enumerate_signs([1.0, math.pi], 0.5))
    with pytest.raises(InstanceTooLargeError):
        rademacher_sum_distribution(np.r_[np.ones(30), math.pi * 1e-7], max_span=1000)


def test_large_n_dp():
    r = rademacher_sum_concentration(np.ones(200), 1.0)
    assert r.value == pytest.approx(math.comb(200, 100) / 2**200, rel=1e-12)


# -- Monte Carlo ------------------------------------------------------------------


def test_mc_constant_sampler():
    r = concentration_mc(lambda n, seed: np.zeros(n), 1.0, 1000, 0)
    assert r.value == 1.0 and r.half_width == 0.0 and r.n_samples == 1000


def test_mc_requires_samples():
    with pytest.raises(InsufficientSamplesError):
        concentration_mc(lambda n, seed: np.zeros(n), 1.0, 99, 0)


def test_mc_rademacher_band():
    law, _ = rademacher_sum_distribution(np.ones(10))
    r = concentration_mc(sampler_from_measure(law), 1.0, 100_000, 0)
    assert r.method == "monte-carlo"
    assert 0 < r.half_width < 0.01
    assert abs(r.value - 252 / 1024) <= 3 * r.half_width


def test_mc_deterministic():
    law, _ = rademacher_sum_distribution(np.arange(1, 8))
    s = sampler_from_measure(law)
    assert concentration_mc(s, 2.0, 5000, 11) == concentration_mc(s, 2.0, 5000, 11)


@pytest.mark.parametrize("seed", range(5))
def test_mc_never_far_above_exact(seed):
    rng = make_rng(seed, 3)
    k = int(rng.integers(3, 30))
    F = FiniteDiscreteMeasure(rng.normal(size=k), rng.dirichlet(np.ones(k)))
    lam = float(rng.uniform(0.1, 2))
    r = concentration_mc(sampler_from_measure(F), lam, 20_000, seed)
    assert r.value <= concentration_exact_1d(F, lam).value + 3 * r.half_width


def test_mc_two_dimensions_is_lower_estimate():
    sq = FiniteDiscreteMeasure([[0, 0], [1, 0], [0, 1], [1, 1]], np.full(4, 0.25))
    r = concentration_mc(sampler_from_measure(sq), 1.0, 4000, 2)
    assert r.method == "monte-carlo-lb"
    assert r.value <= 0.5 + 3 * r.half_width
    assert r.value >= 0.25
