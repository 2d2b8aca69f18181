"""Counter-based random streams keyed by ``(seed, trial_index)``.

Each trial owns an independent Philox stream whose 128-bit key is the pair
``(trial_index, seed)``, so results do not depend on which worker runs a
trial or in what order.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

_MASK64 = (1 << 64) - 1


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    if trial_index < 0 or trial_index > _MASK64:
        raise ConfigError(f"trial_index out of range: {trial_index}")
    key = np.array([trial_index, int(seed) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
