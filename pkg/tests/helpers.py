"""Shared instance generators for the test modules."""
import itertools

import numpy as np

from anticonc.measures import FiniteDiscreteMeasure


def planted_instance(rng, d, r_star, n_atoms=50):
    """Atoms placed exactly on points of ``K_1(u*)`` for random generators ``u*``.

    Returns ``(M, u_star)`` with ``M`` uniform over the chosen (merged) atoms.
    """
    u = rng.uniform(-10, 10, (r_star, d))
    coeffs = np.array(list(itertools.product((-1, 0, 1), repeat=r_star)), dtype=float)
    K = coeffs @ u
    pts = K[rng.integers(0, len(K), n_atoms)]
    return FiniteDiscreteMeasure(pts, np.full(n_atoms, 1.0 / n_atoms)), u


def brute_distance(points, K):
    """Sup-norm distance from each point to the nearest point of ``K``, by full pairwise scan."""
    return np.max(np.abs(points[:, None, :] - K[None, :, :]), axis=2).min(axis=1)
