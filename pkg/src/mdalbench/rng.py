"""Named, reproducible random substreams.

Every source of randomness in an experiment is a substream derived from
(base seed, label, repeat index). The same triple always yields the same
draw sequence, and substreams with different labels are independent, so
e.g. acquisition randomness never perturbs model initialization.
"""

import hashlib

import numpy as np

_U64 = (1 << 64) - 1


def stream_key(label: str) -> int:
    """Stable 64-bit key for a substream label."""
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def substream(seed: int, label: str, repeat: int = 0) -> np.random.Generator:
    """Generator for the (seed, label, repeat) substream."""
    entropy = [int(seed) & _U64, stream_key(label), int(repeat) & _U64]
    return np.random.default_rng(np.random.SeedSequence(entropy))
