"""Named substreams derived from one master seed.

Every stage draws randomness from its own substream so stages stay
independently reproducible; the derivation is a stable hash, not Python's
process-salted ``hash``.
"""

from __future__ import annotations

import hashlib


def substream_seed(seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")
