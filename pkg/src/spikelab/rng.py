"""Counter-based random streams keyed by (master seed, replication, purpose).

Each stream is an independent Philox generator whose key encodes the master
seed and the replication index, and whose counter's high word encodes the
purpose. Streams can be created in any order from any thread and always
produce the same numbers, which is what makes Monte Carlo output independent
of scheduling.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np

__all__ = ["Purpose", "stream"]

_MASK64 = (1 << 64) - 1


class Purpose(IntEnum):
    DATA = 0
    MIXTURE = 1
    AUX = 2


def stream(seed: int, index: int = 0, purpose: Purpose = Purpose.DATA) -> np.random.Generator:
    """Return the generator for one (seed, index, purpose) cell."""
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be non-negative")
    key = np.array([seed & _MASK64, index & _MASK64], dtype=np.uint64)
    counter = np.array([0, 0, int(purpose), 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
