"""Deterministic random-stream derivation.

PRNG contract: every stochastic operation draws from a NumPy ``Generator``
backed by the PCG64 bit generator, seeded through ``numpy.random.SeedSequence``
with the pair ``(user_seed, stream_id)``. Stream ids are fixed constants, so
the streams for initialization, background sampling, shuffling, bootstrap
resampling, and pixel sampling are independent of each other and stable
across runs and platforms for a given NumPy/toolkit installation.
"""

import numpy as np

STREAM_IDS = {
    "init": 0x1A11,
    "background": 0x2B22,
    "shuffle": 0x3C33,
    "bootstrap": 0x4D44,
    "pixels": 0x5E55,
}


def stream(name: str, seed: int) -> np.random.Generator:
    """Return the named deterministic random stream for ``seed``."""
    if name not in STREAM_IDS:
        raise ValueError(f"unknown stream name: {name!r}")
    ss = np.random.SeedSequence([int(seed), STREAM_IDS[name]])
    return np.random.Generator(np.random.PCG64(ss))
