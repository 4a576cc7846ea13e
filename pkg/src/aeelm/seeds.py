"""Deterministic seed derivation.

A child seed is a pure function of the master seed and a fixed integer key,
so adding a new consumer never shifts the draws of existing ones.
"""

import numpy as np

# Fixed keys for pipeline stages. Append new stages; never renumber.
STAGE_AE_SEARCH = 1
STAGE_AE_FINAL = 2
STAGE_ELM = 3
STAGE_BP = 4
STAGE_RBF = 5
STAGE_PLANT = 6


def derive_seed(master, *keys):
    """64-bit seed derived from ``master`` and integer ``keys``."""
    ss = np.random.SeedSequence([int(master) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
