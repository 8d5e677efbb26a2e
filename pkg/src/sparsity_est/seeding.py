"""Stable seed derivation shared by constructions and experiment runners."""

from __future__ import annotations

import numpy as np


def derive_seed(seed: int, *keys: int) -> int:
    """64-bit seed determined by ``(seed, *keys)`` only."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1, np.uint64)[0])
