"""Counter-based random streams.

Each stream is a Philox generator keyed by ``(seed, domain)`` whose counter
starts at the structural index (sample number, image number). Streams never
depend on generation order, so parallel and serial runs match bit for bit.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

DOMAIN_SIMGEN = 0x51D6E7
DOMAIN_NOISE = 0x701CE5


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def stream(seed: int, domain: int, index: int) -> np.random.Generator:
    key = np.array([check_seed(seed), domain & MASK64], dtype=np.uint64)
    counter = np.array([0, 0, index & MASK64, index >> 64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def derive_seed(seed: int, *path: int) -> int:
    """Independent 64-bit child seed for a sub-population."""
    ss = np.random.SeedSequence([check_seed(seed), *path])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
