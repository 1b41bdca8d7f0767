"""Characteristic functions, box quadrature and the Esseen functional.

All integrals run over sup-norm boxes ``{|t| <= T} = [-T, T]^d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError, InvalidInputError, UnconvergedError
from .measures import as_coefficients


@dataclass(frozen=True)
class CharFn:
    """A characteristic function ``t -> F^(t)`` on R^d.

    ``evaluate`` maps an ``(m, d)`` array of frequencies to ``m`` values.
    ``nonnegative`` is set when the function is known to be real and >= 0
    (symmetric infinitely divisible laws, for example).  ``frequency`` is an
    upper bound on the oscillation rate, used to size quadrature panels.
    """

    dim: int
    evaluate: object
    nonnegative: bool = False
    frequency: float = 1.0

    def __call__(self, t):
        pts, scalar = _as_points(t, self.dim)
        return _unwrap(self.evaluate(pts), scalar)


def _as_points(t, dim):
    t = np.asarray(t, dtype=float)
    if t.ndim <= 1 and dim == 1:
        return t.reshape(-1, 1), t.ndim == 0
    if t.ndim == 1:
        if t.shape[0] != dim:
            raise DimensionError(f"frequency has length {t.shape[0]}, expected {dim}")
        return t[None, :], True
    if t.shape[-1] != dim:
        raise DimensionError(f"frequencies have dimension {t.shape[-1]}, expected {dim}")
    return t.reshape(-1, dim), False


def _unwrap(values, scalar):
    return values[0] if scalar else values


def _projections(a, t):
    # <t, a_k> for every frequency row and coefficient
    return t @ a.entries.T


def cf_discrete(law, s):
    """``phi_X(s) = sum_j p_j exp(i s x_j)`` for a law on R, ``s`` any shape."""
    s = np.asarray(s, dtype=float)
    x = law.points[:, 0]
    return np.exp(1j * s[..., None] * x) @ law.masses


def cf_weighted_sum(law, a, t):
    """Characteristic function of ``S_a = sum_k X_k a_k``: ``prod_k phi_X(<t, a_k>)``."""
    a = as_coefficients(a)
    if law.dim != 1:
        raise DimensionError("the summand law must live on R")
    pts, scalar = _as_points(t, a.dim)
    vals = np.prod(cf_discrete(law, _projections(a, pts)), axis=1)
    return _unwrap(vals, scalar)


def _h_exponent(a, z, t):
    return np.sum(1.0 - np.cos(_projections(a, t) * z), axis=1)


def cf_H(a, z, lam, t):
    """``exp(-(lam/2) sum_k (1 - cos(<t, a_k> z)))``, the transform of ``H_z^lam``."""
    a = as_coefficients(a)
    pts, scalar = _as_points(t, a.dim)
    return _unwrap(np.exp(-0.5 * lam * _h_exponent(a, z, pts)), scalar)


def _check_symmetric_on_R(G):
    if G.dim != 1:
        raise InvalidInputError("G must be a measure on R")


def envelope_exponent(a, measure, t):
    """``sum_k int (1 - cos(<t, a_k> z)) measure{dz}`` as an exact finite sum."""
    a = as_coefficients(a)
    _check_symmetric_on_R(measure)
    pts, scalar = _as_points(t, a.dim)
    proj = _projections(a, pts)  # (m, n)
    z = measure.points[:, 0]
    vals = (1.0 - np.cos(proj[:, :, None] * z)) @ measure.masses
    return _unwrap(vals.sum(axis=1), scalar)


def symmetrization_envelope(a, G, t):
    """``exp(-1/2 sum_k int (1 - cos(<t, a_k> z)) G{dz})``.

    For ``G`` the law of ``X1 - X2`` this dominates ``|F_a^(t)|`` pointwise.
    """
    _check_symmetric_on_R(G)
    if not G.is_symmetric(tol=1e-12):
        raise InvalidInputError("G must be symmetric")
    return np.exp(-0.5 * envelope_exponent(a, G, t))


def measure_envelope(a, V, t):
    """Same exponential for an arbitrary (possibly asymmetric) measure ``V`` on R."""
    return np.exp(-0.5 * envelope_exponent(a, V, t))


# -- CharFn factories -----------------------------------------------------------


def _max_norm(a):
    return float(np.max(np.abs(a.entries))) if a.n else 0.0


def charfn_weighted_sum(law, a):
    a = as_coefficients(a)
    freq = _max_norm(a) * float(np.max(np.abs(law.points))) * a.dim
    return CharFn(a.dim, lambda t: np.prod(cf_discrete(law, _projections(a, t)), axis=1), False, freq)


def charfn_H(a, lam, z=1.0):
    """``H_z^lam`` as a :class:`CharFn` (real, positive)."""
    a = as_coefficients(a)
    return CharFn(
        a.dim,
        lambda t: np.exp(-0.5 * lam * _h_exponent(a, z, t)),
        True,
        _max_norm(a) * abs(z) * a.dim,
    )


def charfn_envelope(a, measure):
    a = as_coefficients(a)
    freq = _max_norm(a) * float(np.max(np.abs(measure.points))) * a.dim
    return CharFn(a.dim, lambda t: np.exp(-0.5 * envelope_exponent(a, measure, t)), True, freq)


# -- quadrature -----------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureSpec:
    """Composite tensor Gauss-Legendre settings for box integrals.

    ``panels`` is the starting per-axis panel count; panels are doubled until
    two successive estimates differ by less than ``tol``, at most
    ``max_refine`` times.
    """

    panels: int = 1
    nodes: int = 16
    tol: float = 1e-8
    max_refine: int = 14

    def __post_init__(self):
        if self.panels < 1 or self.nodes < 1 or self.max_refine < 0:
            raise InvalidInputError("panels and nodes must be >= 1, max_refine >= 0")
        if not self.tol > 0:
            raise InvalidInputError("tol must be positive")

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


_LEGGAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _leggauss(q):
    if q not in _LEGGAUSS_CACHE:
        _LEGGAUSS_CACHE[q] = np.polynomial.legendre.leggauss(q)
    return _LEGGAUSS_CACHE[q]


def composite_rule(T, panels, nodes):
    """Nodes and weights of the composite Gauss-Legendre rule on [-T, T]."""
    x, w = _leggauss(nodes)
    h = 2.0 * T / panels
    left = -T + h * np.arange(panels)
    pts = (left[:, None] + 0.5 * h * (x[None, :] + 1.0)).ravel()
    wts = np.tile(0.5 * h * w, panels)
    return pts, wts


def box_sum(f, dim, T, panels, nodes, chunk=1 << 18):
    """Tensor-product rule for ``int_{[-T,T]^dim} f(t) dt``.

    ``f`` takes an ``(m, dim)`` array.  Summation order is fixed by panel
    index, so results are reproducible.
    """
    if dim > 3:
        raise DimensionError("box quadrature supports d <= 3")
    x, w = composite_rule(T, panels, nodes)
    if dim == 1:
        total = 0.0
        for s in range(0, len(x), chunk):
            total += float(np.real(f(x[s : s + chunk, None])) @ w[s : s + chunk])
        return total
    rest_x = np.stack(np.meshgrid(*([x] * (dim - 1)), indexing="ij"), -1).reshape(-1, dim - 1)
    rest_w = np.prod(np.stack(np.meshgrid(*([w] * (dim - 1)), indexing="ij"), -1).reshape(-1, dim - 1), axis=1)
    total = 0.0
    for xi, wi in zip(x, w):
        pts = np.concatenate([np.full((len(rest_x), 1), xi), rest_x], axis=1)
        total += wi * float(np.real(f(pts)) @ rest_w)
    return total


def initial_panels(T, frequency, dim, base=1):
    """Enough panels that each covers at most half a period of the fastest cosine."""
    return max(base, int(math.ceil(T * frequency / math.pi)))


MAX_GRID_POINTS = 1 << 26


def box_integral(f, dim, T, spec=QuadratureSpec(), frequency=1.0):
    """Adaptive ``int_{|t| <= T} f(t) dt``; returns ``(value, last_change, panels)``.

    Raises :class:`UnconvergedError` carrying the finest estimate when the
    refinement limit is reached.
    """
    panels = initial_panels(T, frequency, dim, spec.panels)
    prev = box_sum(f, dim, T, panels, spec.nodes)
    change = math.inf
    for _ in range(spec.max_refine):
        if (2 * panels * spec.nodes) ** dim > MAX_GRID_POINTS:
            break
        panels *= 2
        cur = box_sum(f, dim, T, panels, spec.nodes)
        change = abs(cur - prev)
        prev = cur
        if change < spec.tol:
            return cur, change, panels
    raise UnconvergedError(
        f"box quadrature did not reach tol {spec.tol} with {panels} panels per axis (last change {change:.3g})",
        prev,
        change,
    )


def esseen_functional(cf, tau, spec=QuadratureSpec()):
    """``tau^d * int_{|t| <= 1/tau} |cf(t)| dt``.

    Upper-bounds ``Q(F, tau)`` up to a dimension constant; when ``cf`` is
    known nonnegative it is also a lower bound up to a constant, so the value
    doubles as a two-sided proxy for the concentration function.
    """
    if tau <= 0:
        raise InvalidInputError("tau must be positive")
    if cf.dim > 3:
        raise DimensionError("esseen_functional supports d <= 3")
    scale = tau**cf.dim
    absf = (lambda t: cf.evaluate(t)) if cf.nonnegative else (lambda t: np.abs(cf.evaluate(t)))
    # tolerance applies to the scaled value
    inner = replace(spec, tol=spec.tol / scale)
    try:
        val, _, _ = box_integral(absf, cf.dim, 1.0 / tau, inner, cf.frequency)
    except UnconvergedError as exc:
        raise UnconvergedError(str(exc), scale * exc.best_estimate, exc.last_change) from None
    return scale * val


def esseen_functional_fixed(cf, tau, panels, nodes=16):
    """Non-adaptive variant on a fixed composite rule (same nodes for every call)."""
    scale = tau**cf.dim
    absf = (lambda t: cf.evaluate(t)) if cf.nonnegative else (lambda t: np.abs(cf.evaluate(t)))
    return scale * box_sum(absf, cf.dim, 1.0 / tau, panels, nodes)

