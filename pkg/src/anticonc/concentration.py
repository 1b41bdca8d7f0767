"""Concentration functions ``Q(F, lam) = sup_x P(Y in x + lam*B)``.

``B`` is the closed Euclidean ball of radius 1/2, so in one dimension the
window is a closed interval of length ``lam`` and in two dimensions a closed
disk of radius ``lam/2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd

import numpy as np

from ._rng import make_rng
from .errors import DimensionError, InstanceTooLargeError, InsufficientSamplesError
from .measures import MERGE_TOL, PROBABILITY, CoefficientVector, FiniteDiscreteMeasure, as_coefficients

# closed-window slack, matching the atom merge tolerance
WINDOW_TOL = MERGE_TOL
BOOTSTRAP_RESAMPLES = 200
MC_MAX_CENTERS = 4000
DP_MAX_SPAN = 1 << 24
ENUM_MAX_N = 30


@dataclass(frozen=True)
class ConcentrationResult:
    value: float
    method: str
    half_width: float = 0.0
    n_samples: int = 0

    def to_json(self):
        return {
            "value": self.value,
            "method": self.method,
            "half_width": self.half_width,
            "n_samples": self.n_samples,
        }


def _window_ends(x, lam):
    """For sorted ``x``, index one past the last point of ``[x_i, x_i + lam]``."""
    return np.searchsorted(x, x + lam + WINDOW_TOL * max(1.0, abs(lam)), side="right")


def _max_window(x, masses, lam):
    cum = np.concatenate(([0.0], np.cumsum(masses)))
    ends = _window_ends(x, lam)
    return float(np.max(cum[ends] - cum[:-1]))


def concentration_exact_1d(F, lam):
    """Exact maximal mass of a closed interval of length ``lam``.

    Some optimal interval can be slid right until its left end hits an atom,
    so only intervals starting at atoms are scanned (two pointers via
    ``searchsorted``).
    """
    if F.dim != 1:
        raise DimensionError(f"concentration_exact_1d needs dim 1, got {F.dim}")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    x = F.points[:, 0]  # merge_atoms leaves points sorted
    value = float(F.masses.max()) if lam == 0 else _max_window(x, F.masses, lam)
    return ConcentrationResult(min(value, 1.0) if F.kind == PROBABILITY else value, "exact-1d")


def _pair_centers(P, r):
    """Centres of the radius-``r`` circles through each pair of points at distance <= 2r."""
    i, j = np.triu_indices(len(P), k=1)
    if len(i) == 0:
        return np.empty((0, 2))
    a, b = P[i], P[j]
    diff = b - a
    dist2 = np.einsum("ij,ij->i", diff, diff)
    ok = (dist2 > 0) & (dist2 <= 4 * r * r * (1 + 1e-12))
    a, diff, dist2 = a[ok], diff[ok], dist2[ok]
    mid = a + 0.5 * diff
    h = np.sqrt(np.maximum(r * r - dist2 / 4, 0.0))
    perp = np.stack([-diff[:, 1], diff[:, 0]], axis=1) / np.sqrt(dist2)[:, None]
    return np.concatenate([mid + h[:, None] * perp, mid - h[:, None] * perp])


def _disk_masses(centers, P, masses, r, chunk=2048):
    best = 0.0
    rr = r * r * (1 + 1e-12) + WINDOW_TOL
    for s in range(0, len(centers), chunk):
        c = centers[s : s + chunk]
        d2 = ((c[:, None, :] - P[None, :, :]) ** 2).sum(-1)
        best = max(best, float(((d2 <= rr) * masses).sum(1).max()))
    return best


def concentration_exact_2d(F, lam):
    """Exact maximal mass of a closed disk of radius ``lam/2`` in the plane.

    Candidate centres are every atom plus, for every pair of atoms at
    distance <= lam, both centres of radius-lam/2 circles through the pair;
    an optimal disk can always be moved to one of these.  O(n^3).
    """
    if F.dim != 2:
        raise DimensionError(f"concentration_exact_2d needs dim 2, got {F.dim}")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    if lam == 0 or F.size == 1:
        return ConcentrationResult(float(F.masses.max()) if lam == 0 else F.total_mass, "exact-2d")
    P = F.points
    r = lam / 2
    centers = np.concatenate([P, _pair_centers(P, r)])
    value = _disk_masses(centers, P, F.masses, r)
    return ConcentrationResult(min(value, 1.0) if F.kind == PROBABILITY else value, "exact-2d")


def concentration_exact(F, lam):
    if F.dim == 1:
        return concentration_exact_1d(F, lam)
    if F.dim == 2:
        return concentration_exact_2d(F, lam)
    raise DimensionError("no exact concentration path for d >= 3; use concentration_mc")


# -- Monte Carlo ----------------------------------------------------------------


def _empirical(samples):
    pts = np.asarray(samples, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    uniq, counts = np.unique(pts, axis=0, return_counts=True)
    return uniq, counts


def _membership_1d(x, lam):
    # window i covers the sorted atoms [i, ends[i])
    return _window_ends(x, lam)


def _membership_nd(uniq, counts, lam, rng, max_centers):
    from scipy.spatial import cKDTree

    r = lam / 2
    if len(uniq) <= max_centers:
        centers = uniq
    else:
        # keep the heaviest points, fill the rest at random
        heavy = np.argsort(-counts, kind="stable")[: max_centers // 2]
        rest = np.setdiff1d(np.arange(len(uniq)), heavy)
        extra = rng.choice(rest, size=max_centers - len(heavy), replace=False)
        centers = uniq[np.sort(np.concatenate([heavy, extra]))]
    tree = cKDTree(uniq)
    return tree.query_ball_point(centers, r * (1 + 1e-12) + WINDOW_TOL)


def concentration_mc(sampler, lam, n_samples, seed, max_centers=MC_MAX_CENTERS):
    """Monte Carlo estimate of ``Q`` from ``n_samples`` draws.

    ``sampler(n, seed)`` must return an array of ``n`` points (shape ``(n,)``
    or ``(n, d)``) and be deterministic in ``seed``.  In one dimension the
    exact maximal window of the empirical measure is returned; for d >= 2 the
    sample points themselves serve as disk centres, giving a lower estimate
    of the empirical maximum.  The half-width is half the central 95% range
    of 200 bootstrap replicates.
    """
    if n_samples < 100:
        raise InsufficientSamplesError(f"need at least 100 samples, got {n_samples}")
    samples = np.asarray(sampler(int(n_samples), int(seed)), dtype=float)
    uniq, counts = _empirical(samples)
    n = counts.sum()
    rng = make_rng(seed, 0xB007)
    d = uniq.shape[1]
    if d == 1:
        x = uniq[:, 0]
        ends = _membership_1d(x, lam)

        def stat(c):
            cum = np.concatenate(([0], np.cumsum(c)))
            return (cum[ends] - cum[:-1]).max() / n

        method = "monte-carlo"
    else:
        members = _membership_nd(uniq, counts, lam, make_rng(seed, 0xCE17), max_centers)

        def stat(c):
            return max(c[m].sum() for m in members) / n

        method = "monte-carlo-lb"
    value = float(stat(counts))
    if len(uniq) == 1:
        return ConcentrationResult(value, method, 0.0, int(n))
    p = counts / n
    boots = np.array([stat(rng.multinomial(n, p)) for _ in range(BOOTSTRAP_RESAMPLES)])
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return ConcentrationResult(value, method, float((hi - lo) / 2), int(n))


# -- Rademacher sums ------------------------------------------------------------


def _integer_grid(values, max_span):
    """Express ``values`` as integer multiples of a common step, if the span allows it.

    Every float is a dyadic rational, so a common step always exists; it is
    only usable when the resulting integer range is small.
    """
    fr = [Fraction(float(v)) for v in values]
    nonzero = [f for f in fr if f != 0]
    if not nonzero:
        return 1.0, [0] * len(fr)
    num = reduce(gcd, (f.numerator for f in nonzero))
    den = reduce(lambda x, y: x * y // gcd(x, y), (f.denominator for f in nonzero))
    step = Fraction(abs(num), den)
    ints = [int(f / step) for f in fr]
    if sum(abs(m) for m in ints) > max_span:
        return None
    return float(step), ints


def rademacher_sum_distribution(a, max_span=DP_MAX_SPAN):
    """Exact law of ``sum_k eps_k a_k`` with independent fair signs, ``a`` on R.

    Uses an integer-grid convolution when the coefficients share a usable
    grid step, otherwise enumerates sign patterns (n <= 30).
    """
    a = as_coefficients(a)
    if a.dim != 1:
        raise DimensionError("rademacher sums are computed for one-dimensional coefficients")
    vals = a.entries[:, 0]
    grid = _integer_grid(vals, max_span)
    if grid is not None:
        step, ints = grid
        span = sum(abs(m) for m in ints)
        use_int = len(ints) <= 62
        counts = np.zeros(2 * span + 1, dtype=np.int64 if use_int else float)
        counts[span] = 1
        lo = hi = span
        for m in ints:
            m = abs(m)
            if m == 0:
                counts[lo : hi + 1] *= 2
                continue
            new = np.zeros_like(counts)
            new[lo - m : hi - m + 1] += counts[lo : hi + 1]
            new[lo + m : hi + m + 1] += counts[lo : hi + 1]
            counts = new
            lo, hi = lo - m, hi + m
        nz = np.flatnonzero(counts)
        masses = counts[nz] / float(2 ** len(ints))
        pts = (nz - span).astype(float) * step
        return FiniteDiscreteMeasure._trusted(pts[:, None], masses, PROBABILITY), "dp"
    if a.n > ENUM_MAX_N:
        raise InstanceTooLargeError(f"n = {a.n} > {ENUM_MAX_N} and the coefficients have no usable grid")
    law = FiniteDiscreteMeasure._trusted(np.zeros((1, 1)), [1.0], PROBABILITY)
    for v in vals:
        law = law.convolve(FiniteDiscreteMeasure._trusted(np.array([[-v], [v]]), [0.5, 0.5], PROBABILITY))
    return law, "enumeration"


def rademacher_sum_concentration(a, tau):
    """Exact ``Q(F_a, tau)`` for ``X = +-1`` with probability 1/2 each."""
    law, method = rademacher_sum_distribution(a)
    res = concentration_exact_1d(law, tau)
    return ConcentrationResult(res.value, method)


def sampler_from_measure(F):
    """A ``sampler(n, seed)`` drawing i.i.d. points from a discrete measure."""
    from .idiv import AliasTable

    table = AliasTable(F.masses / F.total_mass)

    def sampler(n, seed):
        idx = table.sample(make_rng(seed, 0x5A), n)
        return F.points[idx]

    return sampler
