import numpy as np


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the stream identified by (seed, *keys)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), *map(int, keys)]))


def derive_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([int(seed) & (2**64 - 1), *map(int, keys)]).generate_state(1, np.uint64)[0])
