"""Deterministic random-stream derivation.

Every stochastic routine in this package takes a 64-bit integer seed.  Streams
are numpy ``Generator`` objects (PCG64) built from
``SeedSequence([seed, h(label_1), h(label_2), ...])`` where ``h`` is the first
8 bytes of the SHA-256 of the label.  Distinct labels therefore give
independent substreams, and a rerun with the same seed and labels reproduces
every draw bit-for-bit.
"""

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _label_key(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & _MASK64
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_rng(seed: int, *labels) -> np.random.Generator:
    """Generator for the substream identified by (seed, labels)."""
    keys = [int(seed) & _MASK64] + [_label_key(lab) for lab in labels]
    return np.random.default_rng(np.random.SeedSequence(keys))
