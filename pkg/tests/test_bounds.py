import math

import numpy as np
import pytest
from scipy import integrate

from anticonc._rng import make_rng
from anticonc.bounds import (
    corollary_logweight_rhs,
    corollary_threshold_rhs,
    default_delta_grid,
    logweight,
    optimize_threshold,
    q_proxy,
    q_proxy_mc,
    sup_form_identity,
    theorem1_rhs,
)
from anticonc.charfn import cf_H
from anticonc.errors import DegenerateLawError, EmptySubmeasureError, ZeroTailError
from anticonc.measures import FiniteDiscreteMeasure, SubMeasureSpec, log_factor, symmetrize, tail_mass

RAD_G = symmetrize(FiniteDiscreteMeasure.rademacher())
ONES4 = np.ones(4)


def proxy_oracle(a, lam, eps):
    v, _ = integrate.quad(lambda s: cf_H(a, 1.0, lam, s), -1 / eps, 1 / eps, limit=500, epsabs=1e-13)
    return eps * v


def test_theorem1_indicator_beyond_threshold():
    rep = theorem1_rhs(ONES4, SubMeasureSpec.indicator(RAD_G, 1.0), 1.0, 1.0)
    assert rep.lam == 0.5
    assert rep.exponent_integral == 0.0
    assert rep.rhs == rep.q_proxy
    assert rep.q_proxy == pytest.approx(proxy_oracle(ONES4, 0.5, 1.0), abs=1e-8)


def test_theorem1_infinite_sentinel():
    rep = theorem1_rhs(ONES4, SubMeasureSpec(RAD_G, [0.5, 0.5, 0.5]), 1.0, 1.0)
    assert rep.infinite and rep.rhs == math.inf
    assert rep.to_json()["rhs"] == "inf"
    with pytest.raises(EmptySubmeasureError):
        theorem1_rhs(ONES4, SubMeasureSpec(RAD_G, [0.0, 0.0, 0.0]), 1.0, 1.0)


def test_theorem1_exponent_by_hand():
    G = symmetrize(FiniteDiscreteMeasure.uniform([0, 1, 3]))
    w = np.where(np.abs(G.points[:, 0]) > 0, 0.7, 0.0)
    V = SubMeasureSpec(G, w)
    eps, tau = 0.5, 2.0
    rep = theorem1_rhs([1.0, 2.0], V, eps, tau)
    expected = sum(m * log_factor(z, tau, eps) for z, m in zip(G.points[:, 0], V.masses) if m > 0) / V.lam
    assert rep.exponent_integral == pytest.approx(expected, rel=1e-14)
    assert rep.rhs == pytest.approx(rep.q_proxy * math.exp(expected), rel=1e-14)
    assert rep.rhs >= rep.q_proxy


def test_threshold_examples():
    rep = corollary_threshold_rhs(ONES4, RAD_G, 1.0, 1.0, 1.0)
    assert rep.lam == 0.5 and rep.exponent_integral == 0.0 and rep.delta == 1.0
    G = symmetrize(FiniteDiscreteMeasure.uniform([0, 1, 2]))
    rep = corollary_threshold_rhs([1.0, 3.0], G, 2.0, 0.5, 1.0)  # delta = tau / eps
    assert rep.exponent_integral == 0.0
    assert rep.lam == pytest.approx(tail_mass(G, 2.0))
    with pytest.raises(ZeroTailError):
        corollary_threshold_rhs(ONES4, RAD_G, 2.5, 1.0, 1.0)


@pytest.mark.parametrize("seed", range(10))
def test_threshold_equals_theorem1(seed):
    rng = make_rng(seed, 0xB0)
    k = int(rng.integers(2, 5))
    X = FiniteDiscreteMeasure(rng.choice(np.arange(-4, 5), k, replace=False), rng.dirichlet(np.ones(k)))
    G = symmetrize(X)
    a = rng.integers(1, 4, size=3).astype(float)
    eps, tau = rng.uniform(0.3, 2, 2)
    delta = float(rng.choice(G.points[G.points[:, 0] > 0, 0]))
    c = corollary_threshold_rhs(a, G, delta, eps, tau)
    t = theorem1_rhs(a, SubMeasureSpec.indicator(G, delta), eps, tau)
    assert abs(c.rhs - t.rhs) <= 1e-12 and abs(c.exponent_integral - t.exponent_integral) <= 1e-12
    assert c.exponent_integral >= 0
    # zero exponent exactly when the support avoids |z| < tau/eps
    assert (c.exponent_integral == 0) == (delta >= tau / eps)


def test_logweight_examples():
    rep = corollary_logweight_rhs(ONES4, RAD_G, 1.0, 1.0)
    assert rep.lam == 0.5 and rep.exponent_integral == 0.0
    assert rep.bounding_exponent == pytest.approx(1.0)
    with pytest.raises(DegenerateLawError):
        corollary_logweight_rhs(ONES4, symmetrize(FiniteDiscreteMeasure.point_mass(1.0)), 1.0, 1.0)
    far = FiniteDiscreteMeasure([-5.0, 5.0], [0.5, 0.5])
    rep = corollary_logweight_rhs([1.0], far, 1.0, 1.0)
    assert rep.lam == 1.0 and rep.exponent_integral == 0.0
    assert rep.rhs == pytest.approx(q_proxy([1.0], 1.0, 1.0))


def test_logweight_weights():
    G = symmetrize(FiniteDiscreteMeasure.uniform([0.0, 0.05, 1.0]))
    V = logweight(G, 1.0, 1.0)
    z = G.points[:, 0]
    assert np.all(V.weights[z == 0] == 0)
    for zi, f in zip(z, V.weights):
        if zi != 0:
            assert f == pytest.approx(1 / max(1.0, log_factor(zi, 1.0, 1.0)))


@pytest.mark.parametrize("seed", range(10))
def test_logweight_exponent_bounded(seed):
    rng = make_rng(seed, 0xB1)
    k = int(rng.integers(2, 6))
    X = FiniteDiscreteMeasure(rng.normal(size=k) * rng.uniform(0.01, 2), rng.dirichlet(np.ones(k)))
    rep = corollary_logweight_rhs([1.0, 2.0], symmetrize(X), float(rng.uniform(0.2, 3)), float(rng.uniform(0.2, 3)))
    assert rep.exponent_integral <= rep.bounding_exponent + 1e-12


def test_optimize_table_and_choice():
    G = symmetrize(FiniteDiscreteMeasure.uniform([0, 1, 2, 5]))
    grid = default_delta_grid(G, 1.0, 2.0)
    best, rep, table = optimize_threshold([1.0, 1.0], G, 1.0, 2.0)
    assert len(table) == len(grid) + 1
    assert table[-1]["rule"] == "cor-logweight"
    feasible = [r for r in table[:-1] if math.isfinite(r["rhs"])]
    assert rep.rhs == min(r["rhs"] for r in feasible)
    assert best in grid


def test_optimize_singleton_and_infeasible():
    best, rep, table = optimize_threshold(ONES4, RAD_G, 1.0, 1.0, delta_grid=[0.5])
    assert best == 0.5 and len(table) == 2
    best, _, table = optimize_threshold(ONES4, RAD_G, 1.0, 1.0, delta_grid=[1.0, 9.0])
    assert best == 1.0 and table[1]["rhs"] == math.inf
    with pytest.raises(ZeroTailError):
        optimize_threshold(ONES4, RAD_G, 1.0, 1.0, delta_grid=[9.0])


def test_optimize_prefers_threshold_with_heavy_tail():
    # all off-zero mass far beyond tau/eps: every feasible threshold has zero
    # exponent and the largest lambda is at the smallest such delta
    X = FiniteDiscreteMeasure([0.0, 10.0, 20.0], [1 / 3, 1 / 3, 1 / 3])
    G = symmetrize(X)
    best, rep, _ = optimize_threshold([1.0], G, 1.0, 1.0, delta_grid=[1.0, 15.0, 20.0])
    assert best == 1.0
    assert rep.exponent_integral == 0.0 and rep.lam == pytest.approx(tail_mass(G, 1.0))


def test_ties_go_to_larger_delta():
    # grid points inside the same gap give identical reports
    best, _, _ = optimize_threshold(ONES4, RAD_G, 1.0, 1.0, delta_grid=[0.5, 1.0, 1.5])
    assert best == 1.5


def test_q_proxy_mc_brackets():
    # the proxy relates to Q only up to constants; check both stay in a sane ratio
    a = [1.0, 2.0]
    mc = q_proxy_mc(a, 1.0, 1.0, n_samples=20000)
    assert 0.1 < mc.value / q_proxy(a, 1.0, 1.0) < 10


def test_sup_form():
    rep = sup_form_identity([1.0, 2.0], 0.5, 1.0, 1.0, seed=3, n_samples=20000)
    assert rep.scaling_max_error <= 1e-12
    assert rep.z_grid == [1.0, 2.0, 4.0, 8.0]
    assert rep.sup_at_smallest_z
    assert rep.consistent
    assert all(x >= y - 3 * max(rep.half_widths) for x, y in zip(rep.q_values, rep.q_values[1:]))
