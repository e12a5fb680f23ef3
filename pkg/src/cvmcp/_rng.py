"""Order-independent random streams for replicated simulations.

Replicates are grouped in fixed-size blocks.  Block ``b`` of stream ``key``
draws from ``Philox`` keyed by ``SeedSequence(seed, spawn_key=(*key, b))``,
so each block's numbers depend only on (seed, key, b) and results are the
same whether blocks run serially or on a thread pool.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK = 1000


def fresh_seed() -> int:
    return int(np.random.SeedSequence().entropy % (1 << 63))


def block_rng(seed, key, block):
    ss = np.random.SeedSequence(seed, spawn_key=(*key, block))
    return np.random.Generator(np.random.Philox(ss))


def run_blocks(fn, reps, seed, key=(), block=BLOCK, workers=1):
    """Call ``fn(rng, size)`` per block and return the results in block order."""
    n_blocks = -(-reps // block)
    sizes = [min(block, reps - b * block) for b in range(n_blocks)]

    def job(b):
        return fn(block_rng(seed, key, b), sizes[b])

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, range(n_blocks)))
    return [job(b) for b in range(n_blocks)]


def random_rank_rows(rng, size, n):
    """``size`` uniformly random permutations of 1..n as int64 rows."""
    return np.argsort(rng.random((size, n)), axis=1).argsort(axis=1).astype(np.int64) + 1
