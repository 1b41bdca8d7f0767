"""Empirical calibration of the unknown constant in the general bound.

The bound ``Q(F_a, tau) <= C * rhs`` holds with a constant depending only on
the dimension, which is not known explicitly.  A frozen suite of random
one-dimensional instances is solved exactly (full enumeration of the law of
``S_a``) and the largest observed ratio ``Q / rhs`` is the calibrated
constant.  It is a property of this instance family and of the quadrature
proxy, not a theoretical value.

Instance family: ``n`` uniform on 1..12; ``X`` has 2..4 distinct integer
atoms in [-3, 3] with Dirichlet(1) masses; ``a_k`` are nonzero integers in
[-5, 5]; ``tau`` in {0.5, 1, 2, 4}; ``eps`` in {0.5, 1, 2}.  ``rhs`` is the
best threshold bound over the default delta grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import make_rng
from .bounds import optimize_threshold
from .charfn import QuadratureSpec
from .concentration import concentration_exact_1d
from .measures import FiniteDiscreteMeasure, symmetrize, weighted_sum_law

CALIBRATION_SEED = 0
CALIBRATION_SIZE = 200
FRESH_SIZE = 500
_SUITE_KEY = 6


@dataclass(frozen=True)
class Instance:
    law: FiniteDiscreteMeasure
    a: np.ndarray
    tau: float
    eps: float


def random_instance(rng):
    n = int(rng.integers(1, 13))
    k = int(rng.integers(2, 5))
    xs = rng.choice(np.arange(-3, 4), size=k, replace=False).astype(float)
    law = FiniteDiscreteMeasure(xs, rng.dirichlet(np.ones(k)))
    a = rng.integers(1, 6, size=n).astype(float) * rng.choice([-1.0, 1.0], size=n)
    tau = float(rng.choice([0.5, 1.0, 2.0, 4.0]))
    eps = float(rng.choice([0.5, 1.0, 2.0]))
    return Instance(law, a, tau, eps)


def instance_suite(seed, count, stream):
    """``count`` instances from stream ``stream`` (0 = calibration, 1 = fresh)."""
    rng = make_rng(seed, _SUITE_KEY, stream)
    return [random_instance(rng) for _ in range(count)]


def ratio(inst, quad=QuadratureSpec()):
    """``(exact Q(F_a, tau), rhs, Q / rhs)`` for one instance."""
    q = concentration_exact_1d(weighted_sum_law(inst.law, inst.a), inst.tau).value
    _, rep, _ = optimize_threshold(inst.a, symmetrize(inst.law), inst.eps, inst.tau, quad=quad)
    return q, rep.rhs, q / rep.rhs


def calibrate(seed=CALIBRATION_SEED, count=CALIBRATION_SIZE):
    """Largest ``Q / rhs`` over the frozen calibration suite."""
    return max(ratio(inst)[2] for inst in instance_suite(seed, count, 0))


def check(constant, seed=CALIBRATION_SEED, count=FRESH_SIZE):
    """Fresh instances with ``Q > constant * rhs``, as ``(index, Q, rhs)`` tuples."""
    bad = []
    for i, inst in enumerate(instance_suite(seed, count, 1)):
        q, rhs, _ = ratio(inst)
        if q > constant * rhs:
            bad.append((i, q, rhs))
    return bad
