"""
Per-trial random streams.

Each trial draws from its own counter-based Philox generator keyed by (seed, trial),
so a trial's outcome does not depend on which worker runs it or in what order.
"""

import random

import numpy as np


def trial_seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    if any(k < 0 for k in key):
        raise ValueError(f"Stream keys must be non-negative. Got {key}")
    return np.random.SeedSequence(seed, spawn_key=key)


def derive_trial_seed(seed: int, trial: int) -> int:
    """Stable 64-bit seed of one trial's stream, recorded alongside its results."""
    return int(trial_seed_sequence(seed, trial).generate_state(1, dtype=np.uint64)[0])


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(trial_seed_sequence(seed, *key)))


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return stream_rng(seed, trial)


def set_seed(seed):
    random.seed(seed)
    np.random.seed(seed)
