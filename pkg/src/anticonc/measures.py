"""Finite discrete measures on R^d and the scalar helpers used by the bounds.

Norm conventions used throughout the package:

* the sup-norm ``|x| = max_j |x_j|`` for integration boxes, atom merging and
  tau-neighbourhoods;
* the Euclidean norm ``||x||`` for the concentration ball
  ``B = {||x|| <= 1/2}``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import DimensionError, InvalidInputError, InvalidMeasureError

MERGE_TOL = 1e-12
MASS_TOL = 1e-12

PROBABILITY = "probability"
SUBPROBABILITY = "subprobability"
UNNORMALIZED = "unnormalized"
_KINDS = (PROBABILITY, SUBPROBABILITY, UNNORMALIZED)


def merge_atoms(points, masses, tol=MERGE_TOL):
    """Merge atoms closer than ``tol`` in sup-norm, summing their masses.

    Returns ``(points, masses)`` sorted lexicographically.  Closeness is
    chained: a run of points each within ``tol`` of its neighbour collapses
    onto the first point of the run.
    """
    points = np.asarray(points, dtype=float)
    masses = np.asarray(masses, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if len(points) == 0:
        return points.reshape(0, points.shape[1]), masses.reshape(0)
    d = points.shape[1]
    if d == 1:
        order = np.argsort(points[:, 0], kind="stable")
        x = points[order, 0]
        m = masses[order]
        starts = np.empty(len(x), dtype=bool)
        starts[0] = True
        starts[1:] = np.diff(x) > tol
        idx = np.flatnonzero(starts)
        return x[idx][:, None], np.add.reduceat(m, idx)

    # exact duplicates first, then a sweep over the first coordinate
    uniq, inverse = np.unique(points, axis=0, return_inverse=True)
    summed = np.zeros(len(uniq))
    np.add.at(summed, inverse.ravel(), masses)
    reps: list[np.ndarray] = []
    rep_mass: list[float] = []
    active: list[int] = []
    for p, w in zip(uniq, summed):
        active = [i for i in active if p[0] - reps[i][0] <= tol]
        hit = None
        for i in active:
            if np.max(np.abs(reps[i] - p)) <= tol:
                hit = i
                break
        if hit is None:
            reps.append(p)
            rep_mass.append(w)
            active.append(len(reps) - 1)
        else:
            rep_mass[hit] += w
    return np.array(reps), np.array(rep_mass)


class FiniteDiscreteMeasure:
    """A finite list of atoms ``(point, mass)`` in R^d with positive masses.

    ``kind`` records the normalisation: ``"probability"`` (total mass 1),
    ``"subprobability"`` (total at most 1) or ``"unnormalized"``.  Instances
    are immutable; all operations return new measures.
    """

    __slots__ = ("points", "masses", "kind")

    def __init__(self, points, masses, kind=PROBABILITY):
        if kind not in _KINDS:
            raise InvalidMeasureError(f"unknown measure kind {kind!r}")
        pts = np.asarray(points, dtype=float)
        ms = np.asarray(masses, dtype=float).ravel()
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise InvalidMeasureError("points must be an (m, d) array with d >= 1")
        if len(pts) != len(ms):
            raise InvalidMeasureError("points and masses differ in length")
        if len(ms) == 0:
            raise InvalidMeasureError("a measure needs at least one atom")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(ms))):
            raise InvalidMeasureError("atoms and masses must be finite")
        if np.any(ms <= 0):
            raise InvalidMeasureError("all masses must be positive")
        pts, ms = merge_atoms(pts, ms)
        total = float(ms.sum())
        if kind == PROBABILITY and abs(total - 1.0) > MASS_TOL:
            raise InvalidMeasureError(f"probability measure has total mass {total!r}")
        if kind == SUBPROBABILITY and total > 1.0 + MASS_TOL:
            raise InvalidMeasureError(f"sub-probability measure has total mass {total!r}")
        self._freeze(pts, ms, kind)

    def _freeze(self, pts, ms, kind):
        pts.setflags(write=False)
        ms.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", ms)
        object.__setattr__(self, "kind", kind)

    def __setattr__(self, name, value):
        raise AttributeError("FiniteDiscreteMeasure is immutable")

    @classmethod
    def _trusted(cls, points, masses, kind):
        # internal constructor: merge only, skip normalisation checks
        pts, ms = merge_atoms(points, masses)
        keep = ms > 0
        obj = object.__new__(cls)
        obj._freeze(np.ascontiguousarray(pts[keep]), np.ascontiguousarray(ms[keep]), kind)
        return obj

    # -- constructors -------------------------------------------------------

    @classmethod
    def point_mass(cls, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(x[None, :], [1.0])

    @classmethod
    def from_atoms(cls, atoms, kind=PROBABILITY):
        """Build from an iterable of ``(point, mass)`` pairs."""
        atoms = list(atoms)
        pts = [np.atleast_1d(np.asarray(x, dtype=float)) for x, _ in atoms]
        return cls(np.array(pts), [p for _, p in atoms], kind)

    @classmethod
    def rademacher(cls):
        return cls([[-1.0], [1.0]], [0.5, 0.5])

    @classmethod
    def uniform(cls, values):
        values = np.asarray(values, dtype=float)
        return cls(values, np.full(len(values), 1.0 / len(values)))

    @classmethod
    def gaussian(cls, k=256, mean=0.0, sd=1.0):
        """Equal-mass quantile discretisation of N(mean, sd^2) with ``k`` atoms."""
        nd = NormalDist(mean, sd)
        xs = [nd.inv_cdf((i + 0.5) / k) for i in range(k)]
        return cls(np.array(xs), np.full(k, 1.0 / k))

    # -- basic properties ---------------------------------------------------

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def size(self):
        return len(self.masses)

    @property
    def total_mass(self):
        return float(self.masses.sum())

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"FiniteDiscreteMeasure(dim={self.dim}, atoms={self.size}, kind={self.kind!r})"

    def atoms(self):
        return [(p.copy(), float(m)) for p, m in zip(self.points, self.masses)]

    def mass_at(self, x, tol=MERGE_TOL):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        hit = np.max(np.abs(self.points - x), axis=1) <= tol
        return float(self.masses[hit].sum())

    def mean(self):
        return self.masses @ self.points / self.total_mass

    def is_symmetric(self, tol=1e-12):
        """True when ``mass(z) == mass(-z)`` for every atom, up to ``tol``."""
        ref = self.reflect()
        if ref.size != self.size:
            return False
        return bool(
            np.allclose(ref.points, self.points, rtol=0, atol=MERGE_TOL)
            and np.allclose(ref.masses, self.masses, rtol=0, atol=tol)
        )

    # -- transformations ----------------------------------------------------

    def reflect(self):
        return FiniteDiscreteMeasure._trusted(-self.points, self.masses, self.kind)

    def scale(self, c):
        """Law of ``c * Y`` (``c`` scalar) or ``Y * c`` for a vector ``c`` when dim is 1."""
        c = np.asarray(c, dtype=float)
        if c.ndim == 0:
            pts = self.points * float(c)
        else:
            if self.dim != 1:
                raise DimensionError("vector scaling needs a one-dimensional measure")
            pts = self.points[:, :1] * c[None, :]
        return FiniteDiscreteMeasure._trusted(pts, self.masses, self.kind)

    def shift(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return FiniteDiscreteMeasure._trusted(self.points + x, self.masses, self.kind)

    def with_masses(self, masses, kind=UNNORMALIZED):
        return FiniteDiscreteMeasure._trusted(self.points, masses, kind)

    def normalized(self):
        return FiniteDiscreteMeasure._trusted(self.points, self.masses / self.total_mass, PROBABILITY)

    def convolve(self, other, max_atoms=None):
        """Exact convolution (law of the sum of independent variables)."""
        if other.dim != self.dim:
            raise DimensionError(f"cannot convolve dim {self.dim} with dim {other.dim}")
        n = self.size * other.size
        if max_atoms is not None and n > max_atoms:
            from .errors import InstanceTooLargeError

            raise InstanceTooLargeError(f"convolution would create {n} atoms (cap {max_atoms})")
        pts = (self.points[:, None, :] + other.points[None, :, :]).reshape(n, self.dim)
        ms = np.outer(self.masses, other.masses).ravel()
        kind = PROBABILITY if self.kind == other.kind == PROBABILITY else UNNORMALIZED
        return FiniteDiscreteMeasure._trusted(pts, ms, kind)

    # -- serialisation ------------------------------------------------------

    def to_json(self):
        return {
            "dim": int(self.dim),
            "atoms": [{"x": [float(v) for v in p], "p": float(m)} for p, m in zip(self.points, self.masses)],
        }

    @classmethod
    def from_json(cls, obj, kind=PROBABILITY):
        return measure_from_json(obj, kind)


def symmetrize(law):
    """Law of ``X1 - X2`` for independent copies of ``X``."""
    if law.kind != PROBABILITY:
        raise InvalidMeasureError("symmetrize needs a probability measure")
    if law.dim != 1:
        raise InvalidMeasureError("symmetrize is defined for laws on R")
    g = law.convolve(law.reflect())
    # enforce exact symmetry of the float masses
    ref = g.reflect()
    if ref.size == g.size and np.allclose(ref.points, g.points, rtol=0, atol=MERGE_TOL):
        ms = 0.5 * (g.masses + ref.masses)
        return FiniteDiscreteMeasure._trusted(g.points, ms, PROBABILITY)
    return g


def weighted_sum_law(law, a, max_atoms=4_000_000):
    """Exact law of ``sum_k X_k a_k`` with ``X_k`` i.i.d. from ``law`` (on R)."""
    a = as_coefficients(a)
    if law.dim != 1:
        raise DimensionError("the summand law must live on R")
    out = FiniteDiscreteMeasure._trusted(np.zeros((1, a.dim)), [1.0], PROBABILITY)
    for ak in a.entries:
        step = law.scale(ak)
        out = out.convolve(step, max_atoms=max_atoms)
    return out


# -- coefficient vectors ------------------------------------------------------


@dataclass(frozen=True)
class CoefficientVector:
    """The coefficients ``a_1..a_n`` in R^d, stored as an ``(n, d)`` array."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim == 1:
            e = e[:, None]
        if e.ndim != 2 or e.shape[0] < 1 or e.shape[1] < 1:
            raise InvalidInputError("coefficients must be a non-empty (n, d) array")
        if not np.all(np.isfinite(e)):
            raise InvalidInputError("coefficients must be finite")
        e = np.array(e)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def dim(self):
        return self.entries.shape[1]

    @classmethod
    def ones(cls, n, d=1):
        return cls(np.ones((n, d)))

    def to_json(self):
        return {"dim": int(self.dim), "a": [[float(v) for v in row] for row in self.entries]}

    @classmethod
    def from_json(cls, obj):
        return coefficients_from_json(obj)


def as_coefficients(a):
    return a if isinstance(a, CoefficientVector) else CoefficientVector(a)


# -- sub-measures V = f * G ---------------------------------------------------


class SubMeasureSpec:
    """A measure ``V = f * G`` given by weights ``0 <= f <= 1`` on the atoms of G."""

    def __init__(self, base, weights):
        w = np.asarray(weights, dtype=float).ravel()
        if len(w) != base.size:
            raise InvalidInputError(f"{len(w)} weights for {base.size} atoms")
        if not np.all(np.isfinite(w)) or np.any(w < 0) or np.any(w > 1):
            raise InvalidInputError("weights must lie in [0, 1]")
        w.setflags(write=False)
        self.base = base
        self.weights = w

    @classmethod
    def indicator(cls, base, delta):
        """``f = 1{|z| >= delta}`` (closed threshold, sup-norm)."""
        return cls(base, (np.max(np.abs(base.points), axis=1) >= delta).astype(float))

    @classmethod
    def from_function(cls, base, f):
        return cls(base, [f(p if base.dim > 1 else float(p[0])) for p in base.points])

    @property
    def masses(self):
        return self.weights * self.base.masses

    @property
    def lam(self):
        """Total mass of V."""
        return float(np.sum(self.masses))

    def measure(self):
        m = self.masses
        keep = m > 0
        return FiniteDiscreteMeasure._trusted(self.base.points[keep], m[keep], UNNORMALIZED)

    def normalized(self):
        lam = self.lam
        if lam <= 0:
            from .errors import EmptySubmeasureError

            raise EmptySubmeasureError("V has zero total mass")
        m = self.masses
        keep = m > 0
        return FiniteDiscreteMeasure._trusted(self.base.points[keep], m[keep] / lam, PROBABILITY)

    def dominated(self):
        """V-mass <= G-mass on every atom."""
        return bool(np.all(self.masses <= self.base.masses))


# -- scalar helpers -----------------------------------------------------------


def paper_floor(x):
    """Largest integer ``k`` with ``k < x`` (strict).

    Equal to ``math.floor`` for non-integers and one less at integers, so
    ``paper_floor(1.0) == 0``.
    """
    return math.ceil(x) - 1


def log_factor(z, tau, eps):
    """``log(1 + paper_floor(tau / (eps |z|)))``; 0 for ``|z| >= tau/eps``, inf at 0."""
    az = abs(float(z))
    if az == 0.0:
        return math.inf
    if eps * az >= tau:
        return 0.0
    return math.log1p(paper_floor(tau / (eps * az)))


def log_factor_array(z, tau, eps):
    """Vectorised :func:`log_factor` over an array of real ``z``."""
    az = np.abs(np.asarray(z, dtype=float))
    out = np.zeros_like(az)
    zero = az == 0
    inner = ~zero & (eps * az < tau)
    # math.log1p per element keeps results bit-identical to the scalar path
    ks = np.ceil(tau / (eps * az[inner])) - 1
    out[inner] = [math.log1p(k) for k in ks]
    out[zero] = np.inf
    return out


def tail_mass(G, delta):
    """``G{|z| >= delta}`` (closed), sup-norm for dim > 1."""
    r = np.max(np.abs(G.points), axis=1)
    return float(G.masses[r >= delta].sum())


# -- JSON ---------------------------------------------------------------------


def _reject_constant(name):
    raise InvalidInputError(f"non-finite number {name} is not allowed")


def loads_strict(text):
    """``json.loads`` that rejects NaN/Infinity tokens and reports line/column."""
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _finite_vector(v, where, dim):
    if not isinstance(v, list) or len(v) != dim:
        raise InvalidInputError(f"{where}: expected a list of {dim} numbers")
    out = []
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise InvalidInputError(f"{where}[{i}]: expected a finite number, got {x!r}")
        out.append(float(x))
    return out


def _read_dim(obj, where):
    if not isinstance(obj, dict):
        raise InvalidInputError(f"{where}: expected a JSON object")
    d = obj.get("dim")
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise InvalidInputError(f"{where}.dim: expected a positive integer, got {d!r}")
    return d


def measure_from_json(obj, kind=PROBABILITY):
    d = _read_dim(obj, "measure")
    atoms = obj.get("atoms")
    if not isinstance(atoms, list) or not atoms:
        raise InvalidInputError("measure.atoms: expected a non-empty list")
    pts, ms = [], []
    for i, at in enumerate(atoms):
        where = f"measure.atoms[{i}]"
        if not isinstance(at, dict) or "x" not in at or "p" not in at:
            raise InvalidInputError(f"{where}: expected an object with keys 'x' and 'p'")
        pts.append(_finite_vector(at["x"], f"{where}.x", d))
        p = at["p"]
        if isinstance(p, bool) or not isinstance(p, (int, float)) or not math.isfinite(p) or p <= 0:
            raise InvalidInputError(f"{where}.p: expected a positive finite mass, got {p!r}")
        ms.append(float(p))
    try:
        return FiniteDiscreteMeasure(np.array(pts), ms, kind)
    except InvalidMeasureError as exc:
        raise InvalidInputError(f"measure: {exc}") from exc


def coefficients_from_json(obj):
    d = _read_dim(obj, "coefficients")
    rows = obj.get("a")
    if not isinstance(rows, list) or not rows:
        raise InvalidInputError("coefficients.a: expected a non-empty list")
    return CoefficientVector(np.array([_finite_vector(r, f"coefficients.a[{i}]", d) for i, r in enumerate(rows)]))


def load_measure(path, kind=PROBABILITY):
    with open(path, encoding="utf-8") as fh:
        return measure_from_json(loads_strict(fh.read()), kind)


def load_coefficients(path):
    with open(path, encoding="utf-8") as fh:
        return coefficients_from_json(loads_strict(fh.read()))
