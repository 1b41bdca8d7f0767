"""Randomised invariant checks, run by ``anticonc verify``.

Each check draws its own cases from a stream keyed by the check's index, so
adding a check never changes the cases of another.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import make_rng
from .bounds import corollary_logweight_rhs, corollary_threshold_rhs, theorem1_rhs
from .charfn import box_sum, cf_H, cf_weighted_sum, measure_envelope, symmetrization_envelope
from .concentration import concentration_exact_1d, rademacher_sum_concentration
from .measures import (
    FiniteDiscreteMeasure,
    SubMeasureSpec,
    log_factor,
    paper_floor,
    symmetrize,
    tail_mass,
)
from .structure import deficit, enumerate_K1, search_generators


@dataclass
class CheckResult:
    name: str
    passed: bool
    cases: int
    detail: str = ""

    def to_json(self):
        return dict(self.__dict__)


def random_law(rng, max_atoms=4, integer=False):
    k = int(rng.integers(1, max_atoms + 1))
    if integer:
        xs = rng.choice(np.arange(-4, 5), size=k, replace=False).astype(float)
    else:
        xs = rng.normal(size=k)
    return FiniteDiscreteMeasure(xs, rng.dirichlet(np.ones(k)))


def _symmetrize(rng, cases):
    worst = 0.0
    for _ in range(cases):
        G = symmetrize(random_law(rng))
        worst = max(worst, abs(G.total_mass - 1), float(np.max(np.abs(G.reflect().masses - G.masses))))
    return worst <= 1e-12, f"max asymmetry {worst:.3g}"


def _floor(rng, cases):
    xs = np.concatenate([rng.uniform(-50, 50, cases), np.arange(-5, 6, dtype=float)])
    ok = all(paper_floor(x) < x <= paper_floor(x) + 1 for x in xs)
    return ok, ""


def _log_factor(rng, cases):
    ok = True
    for _ in range(cases):
        tau, eps = rng.uniform(0.1, 3, 2)
        zs = np.sort(rng.uniform(1e-3, 10, 30))
        vals = [log_factor(z, tau, eps) for z in zs]
        ok &= all(v >= 0 for v in vals) and all(x >= y for x, y in zip(vals, vals[1:]))
        ok &= all(v == 0 for z, v in zip(zs, vals) if z >= tau / eps)
    return ok, ""


def _tail(rng, cases):
    ok = True
    for _ in range(cases):
        G = symmetrize(random_law(rng))
        ds = np.sort(rng.uniform(0, 4, 20))
        t = [tail_mass(G, d) for d in ds]
        ok &= all(x >= y for x, y in zip(t, t[1:]))
    return ok, ""


def _monotone_q(rng, cases):
    ok = True
    for _ in range(cases):
        F = random_law(rng, 6)
        lams = np.sort(rng.uniform(0, 5, 10))
        q = [concentration_exact_1d(F, l).value for l in lams]
        ok &= all(x <= y for x, y in zip(q, q[1:])) and q[0] >= F.masses.max() - 1e-15
    return ok, ""


def _regularity(rng, cases):
    bad = 0
    for _ in range(cases):
        F = random_law(rng, 8)
        mu, lam = rng.uniform(0.01, 5, 2)
        if concentration_exact_1d(F, mu).value > (paper_floor(mu / lam) + 2) * concentration_exact_1d(F, lam).value + 1e-12:
            bad += 1
    return bad == 0, f"{bad} violations"


def _scaling_q(rng, cases):
    worst = 0.0
    for _ in range(cases):
        F = random_law(rng, 6)
        z = rng.uniform(0.2, 4) * rng.choice([-1, 1])
        tau = rng.uniform(0.05, 3)
        lhs = concentration_exact_1d(F.scale(z), tau).value
        rhs = concentration_exact_1d(F, tau / abs(z)).value
        worst = max(worst, abs(lhs - rhs))
    return worst <= 1e-12, f"max difference {worst:.3g}"


def _littlewood_offord(rng, cases):
    worst = 0.0
    for n in range(1, 21):
        tau = rng.uniform(0, 2) if n % 2 else 1.0
        got = rademacher_sum_concentration(np.ones(n), tau).value
        worst = max(worst, abs(got - math.comb(n, n // 2) / 2**n))
    return worst <= 1e-12, f"max error {worst:.3g}"


def _envelope(rng, cases):
    worst = -math.inf
    for _ in range(cases):
        X = random_law(rng)
        a = rng.normal(size=(int(rng.integers(1, 7)), 1))
        t = rng.uniform(-5, 5, (5, 1))
        G = symmetrize(X)
        worst = max(worst, float(np.max(np.abs(cf_weighted_sum(X, a, t)) - symmetrization_envelope(a, G, t))))
    return worst <= 1e-12, f"max excess {worst:.3g}"


def _cf_h(rng, cases):
    worst = 0.0
    for _ in range(cases):
        a = rng.normal(size=(int(rng.integers(1, 6)), 2))
        z, l1, l2 = rng.uniform(-3, 3), rng.uniform(0, 3), rng.uniform(0, 3)
        t = rng.uniform(-4, 4, (4, 2))
        h = cf_H(a, z, l1 + l2, t)
        worst = max(
            worst,
            float(np.max(np.abs(h - cf_H(a, z, l1, t) * cf_H(a, z, l2, t)))),
            float(np.max(np.abs(h - cf_H(a, -z, l1 + l2, -t)))),
            float(np.max(np.abs(h - cf_H(a, 1.0, l1 + l2, z * t)))),
        )
    return worst <= 1e-12, f"max error {worst:.3g}"


def _corollaries(rng, cases):
    worst = 0.0
    ok = True
    for _ in range(cases):
        X = random_law(rng, 4, integer=True)
        if X.size < 2:
            continue
        G = symmetrize(X)
        a = rng.integers(1, 4, size=int(rng.integers(1, 5))).astype(float)
        eps, tau = rng.uniform(0.3, 2, 2)
        delta = float(rng.choice(np.abs(G.points[G.points[:, 0] > 0, 0])))
        c = corollary_threshold_rhs(a, G, delta, eps, tau)
        t = theorem1_rhs(a, SubMeasureSpec.indicator(G, delta), eps, tau)
        worst = max(worst, abs(c.rhs - t.rhs), abs(c.exponent_integral - t.exponent_integral))
        lw = corollary_logweight_rhs(a, G, eps, tau)
        ok &= lw.exponent_integral <= lw.bounding_exponent + 1e-12
    return ok and worst <= 1e-12, f"max difference {worst:.3g}"


def _chain(rng, cases):
    """Middle steps of the proof chain on one shared quadrature rule."""
    ok = True
    detail = ""
    for _ in range(cases):
        X = random_law(rng, 3, integer=True)
        if X.size < 2:
            continue
        G = symmetrize(X)
        a = rng.integers(1, 4, size=int(rng.integers(1, 4))).astype(float)
        tau = float(rng.uniform(0.5, 2))
        w = rng.uniform(0, 1, G.size)
        w[np.max(np.abs(G.points), axis=1) == 0] = 0
        V = SubMeasureSpec(G, w)
        if V.lam <= 0:
            continue
        F = V.normalized()
        T, panels = 1 / tau, 64
        s1 = tau * box_sum(lambda t: np.abs(cf_weighted_sum(X, a, t)), 1, T, panels, 16)
        s2 = tau * box_sum(lambda t: symmetrization_envelope(a, G, t), 1, T, panels, 16)
        s3 = tau * box_sum(lambda t: measure_envelope(a, V.measure(), t), 1, T, panels, 16)
        logs = [math.log(tau * box_sum(lambda t, z=z: cf_H(a, z, V.lam, t), 1, T, panels, 16)) for z in F.points[:, 0]]
        s4 = math.exp(float(np.dot(F.masses, logs)))
        slack = 1e-6
        step = s1 <= s2 * (1 + slack) and s2 <= s3 * (1 + slack) and s3 <= s4 * (1 + slack)
        if not step:
            detail = f"chain broken: {s1:.6g} {s2:.6g} {s3:.6g} {s4:.6g}"
        ok &= step
    return ok, detail


def _k1(rng, cases):
    ok = True
    for _ in range(cases):
        r = int(rng.integers(0, 5))
        u = rng.integers(-5, 6, size=(r, 1)).astype(float)
        K = enumerate_K1(u)
        Ks = set(np.round(K[:, 0], 9))
        ok &= 0.0 in Ks and all(-x in Ks or x == 0 for x in Ks) and len(K) <= 3**r
        v = rng.integers(-5, 6, size=(1, 1)).astype(float)
        ok &= Ks <= set(np.round(enumerate_K1(np.vstack([u, v]))[:, 0], 9))
        M = random_law(rng, 6)
        tau = float(rng.uniform(0, 1))
        ok &= deficit(M, 1.0, np.vstack([u, v]), tau) <= deficit(M, 1.0, u, tau) + 1e-15
        ok &= deficit(M, 1.0, u, tau + 0.5) <= deficit(M, 1.0, u, tau) + 1e-15
    return ok, ""


def _greedy_vs_exact(rng, cases):
    ok = True
    for _ in range(cases):
        M = FiniteDiscreteMeasure(rng.integers(-8, 9, size=8).astype(float) + rng.uniform(-0.05, 0.05, 8), np.full(8, 1 / 8))
        pool = rng.integers(1, 7, size=10).astype(float)
        tau = 0.1
        g = search_generators(M, 1.0, tau, 3, "greedy", candidate_pool=pool)
        e = search_generators(M, 1.0, tau, 3, "exact", candidate_pool=pool)
        ok &= e.deficit <= g.deficit + 1e-12
    return ok, ""


CHECKS = [
    ("symmetrization is symmetric", _symmetrize, 50),
    ("strict floor brackets x", _floor, 200),
    ("log factor nonincreasing and zero beyond tau/eps", _log_factor, 30),
    ("tail mass nonincreasing", _tail, 30),
    ("concentration nondecreasing in radius", _monotone_q, 30),
    ("regularity with covering count", _regularity, 200),
    ("concentration scaling", _scaling_q, 100),
    ("classical Littlewood-Offord values", _littlewood_offord, 1),
    ("symmetrization envelope dominates", _envelope, 200),
    ("H transform: multiplicative, even, scaling", _cf_h, 100),
    ("threshold bound equals general bound; log-weight exponent bound", _corollaries, 20),
    ("proof chain inequalities", _chain, 10),
    ("K1 symmetry, monotonicity and deficit", _k1, 30),
    ("exhaustive search never beaten by greedy", _greedy_vs_exact, 10),
]


def run_suite(seed=0):
    results = []
    for i, (name, fn, cases) in enumerate(CHECKS):
        try:
            passed, detail = fn(make_rng(seed, 0x7E, i), cases)
        except Exception as exc:  # a crash counts as a failed check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(passed), cases, detail))
    return results
