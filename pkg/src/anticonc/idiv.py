"""Compound Poisson laws with characteristic function ``exp(alpha (M^(t) - 1))``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import make_rng, ordered_map
from .errors import InvalidInputError
from .measures import PROBABILITY, FiniteDiscreteMeasure, as_coefficients, measure_from_json

SAMPLE_BATCH = 1 << 15


class AliasTable:
    """Walker/Vose alias table for O(1) draws from a finite distribution."""

    def __init__(self, probs):
        p = np.asarray(probs, dtype=float)
        p = p / p.sum()
        n = len(p)
        scaled = p * n
        prob = np.ones(n)
        alias = np.arange(n)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s, g = small.pop(), large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] -= 1.0 - scaled[s]
            (small if scaled[g] < 1.0 else large).append(g)
        # leftovers are 1 up to rounding
        self.prob = prob
        self.alias = alias

    def sample(self, rng, size):
        i = rng.integers(0, len(self.prob), size=size)
        u = rng.random(size)
        return np.where(u < self.prob[i], i, self.alias[i])


@dataclass(frozen=True)
class CompoundPoissonModel:
    """Poisson(``alpha``) many i.i.d. jumps drawn from ``jump_law``."""

    alpha: float
    jump_law: FiniteDiscreteMeasure

    def __post_init__(self):
        if not (self.alpha >= 0 and np.isfinite(self.alpha)):
            raise InvalidInputError("alpha must be a finite nonnegative number")
        if self.jump_law.kind != PROBABILITY:
            raise InvalidInputError("the jump law must be a probability measure")

    @property
    def dim(self):
        return self.jump_law.dim

    def levy_measure(self):
        return self.jump_law.with_masses(self.alpha * self.jump_law.masses)

    def to_json(self):
        out = self.jump_law.to_json()
        out["alpha"] = float(self.alpha)
        return out

    @classmethod
    def from_json(cls, obj):
        alpha = obj.get("alpha") if isinstance(obj, dict) else None
        if isinstance(alpha, bool) or not isinstance(alpha, (int, float)) or not alpha >= 0:
            raise InvalidInputError(f"model.alpha: expected a nonnegative number, got {alpha!r}")
        return cls(float(alpha), measure_from_json(obj))


def spectral_of_coefficients(a, lam):
    """The compound Poisson form of ``H_1^lam``.

    Its Levy measure puts ``lam/4`` on each of ``+a_k`` and ``-a_k``, so the
    intensity is ``lam * n / 2`` and jumps are uniform over the ``2n`` signed
    coefficients (coinciding atoms merge).
    """
    a = as_coefficients(a)
    if not lam > 0:
        raise InvalidInputError("lam must be positive")
    pts = np.concatenate([a.entries, -a.entries])
    jumps = FiniteDiscreteMeasure._trusted(pts, np.full(2 * a.n, 1.0 / (2 * a.n)), PROBABILITY)
    return CompoundPoissonModel(lam * a.n / 2.0, jumps)


def cf_compound_poisson(model, t):
    """``exp(alpha (M^(t) - 1))`` evaluated exactly; ``t`` a vector or an (m, d) array."""
    t = np.asarray(t, dtype=float)
    d = model.dim
    scalar = t.ndim == 0 or (t.ndim == 1 and d > 1)
    pts = t.reshape(-1, d)
    mhat = np.exp(1j * (pts @ model.jump_law.points.T)) @ model.jump_law.masses
    vals = np.exp(model.alpha * (mhat - 1.0))
    return vals[0] if scalar else vals


def _sample_batch(model, table, n, rng):
    counts = rng.poisson(model.alpha, size=n) if model.alpha > 0 else np.zeros(n, dtype=np.int64)
    total = int(counts.sum())
    out = np.zeros((n, model.dim))
    if total == 0:
        return out
    jumps = model.jump_law.points[table.sample(rng, total)]
    owner = np.repeat(np.arange(n), counts)
    for j in range(model.dim):
        out[:, j] = np.bincount(owner, weights=jumps[:, j], minlength=n)
    return out


def sample_compound_poisson(model, n_samples, seed):
    """``n_samples`` draws of ``sum_{i<=N} J_i``, ``N ~ Poisson(alpha)``, as an (n, d) array.

    Work is split into fixed-size batches, each with its own stream keyed
    by the batch index, so the output does not depend on thread count.
    """
    if n_samples < 1:
        raise InvalidInputError("n_samples must be >= 1")
    table = AliasTable(model.jump_law.masses)
    sizes = [min(SAMPLE_BATCH, n_samples - s) for s in range(0, n_samples, SAMPLE_BATCH)]
    parts = ordered_map(
        lambda ib: _sample_batch(model, table, ib[1], make_rng(seed, 0xC0, ib[0])),
        enumerate(sizes),
    )
    return np.concatenate(parts)


def compound_poisson_sampler(model):
    """Adapter to the ``sampler(n, seed)`` protocol of :func:`concentration_mc`."""
    return lambda n, seed: sample_compound_poisson(model, n, seed)
