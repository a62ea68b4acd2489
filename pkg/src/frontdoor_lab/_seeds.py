"""Deterministic seed derivation for independent random streams.

Every pipeline stage derives its generators from a root seed plus a label
path, so stages never share a stream and reruns reproduce bit-identical
output regardless of which stages run.
"""

from __future__ import annotations

import hashlib

import numpy as np


def mix_seed(*parts) -> int:
    """Stable 63-bit seed from a label path (ints and strings)."""
    text = "/".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % 2**63


def rng_from(*parts) -> np.random.Generator:
    return np.random.default_rng(mix_seed(*parts))
