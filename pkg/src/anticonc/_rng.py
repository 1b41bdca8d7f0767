"""Seeded, splittable random streams and an order-preserving parallel map."""
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def make_rng(seed, *keys):
    """Counter-based (Philox) generator for ``seed`` and a spawn-key path.

    Distinct key tuples give statistically independent streams, so batch
    ``i`` of a computation can always use ``make_rng(seed, ..., i)``.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))


def thread_count():
    try:
        n = int(os.environ.get("ANTICONC_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def ordered_map(fn, items):
    """``list(map(fn, items))``, optionally threaded; output order is input order."""
    items = list(items)
    n = thread_count()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
