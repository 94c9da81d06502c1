"""Per-task seed derivation.

Every random draw in a study gets its own seed, computed from the run's
base seed, a short task label and the integer coordinates of the task::

    SeedSequence([base_seed, crc32(kind), *coords]).generate_state(1)[0]

The result depends only on those values, never on execution order, so a
threaded sweep produces the same numbers as a serial one.
"""

from __future__ import annotations

import zlib

import numpy as np

from .geometry import ParameterError


def derive_seed(base_seed: int, kind: str, *coords: int) -> int:
    """32-bit seed for task ``kind`` at integer coordinates ``coords``."""
    parts = [int(base_seed), zlib.crc32(kind.encode("utf-8"))]
    for c in coords:
        if int(c) != c or c < 0:
            raise ParameterError(f"seed coordinates must be non-negative integers, got {c!r}")
        parts.append(int(c))
    if parts[0] < 0:
        raise ParameterError("base_seed must be non-negative")
    return int(np.random.SeedSequence(parts).generate_state(1)[0])
