"""Per-vertex seed derivation shared by sequential code and simulated vertices."""
from __future__ import annotations

import numpy as np


def vertex_seed(seed: int | None, vid: int) -> int:
    """64-bit private seed of vertex ``vid`` under global ``seed``."""
    base = 0 if seed is None else int(seed)
    state = np.random.SeedSequence([base & (2**63 - 1), abs(int(vid)), int(vid < 0)]).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def priority_from_seed(private_seed: int, bits: int = 64) -> int:
    """Random priority a vertex derives from its own private seed."""
    state = np.random.SeedSequence([private_seed, 0x5EED]).generate_state(2, np.uint32)
    value = int(state[0]) << 32 | int(state[1])
    return value >> (64 - bits) if bits < 64 else value


def vertex_priority(seed: int | None, vid: int, bits: int = 64) -> int:
    return priority_from_seed(vertex_seed(seed, vid), bits)
