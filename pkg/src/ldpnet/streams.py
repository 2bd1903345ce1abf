"""Counter-based random streams addressed by (purpose, index...).

Each logical family of draws gets its own Philox stream keyed by the run seed,
a purpose code and an index tuple, so results never depend on evaluation order
or on how replicate blocks are spread over threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

PURPOSES = {
    "weights": 1,
    "theta": 2,
    "init": 3,
    "noise": 4,
    "configuration": 5,
    "gaussian": 6,
}

# replicate block size for Monte-Carlo loops; part of the reproducibility contract
CHUNK = 1024


def stream(seed: int, purpose: str, *index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(PURPOSES[purpose], *map(int, index)))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(samples: int) -> list[int]:
    full, rest = divmod(int(samples), CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def map_chunks(fn, samples: int, threads: int = 1) -> list:
    """Apply ``fn(chunk_index, size)`` over replicate blocks, results in block order."""
    sizes = chunk_sizes(samples)
    if threads <= 1 or len(sizes) <= 1:
        return [fn(i, s) for i, s in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))
