"""Counter-based reproducible randomness (bit-exact contract).

Every Monte-Carlo draw in this package derives from splitmix64 so results
are deterministic in the seed and independent of execution order and
batching. All arithmetic is mod 2^64:

    GOLDEN = 0x9E3779B97F4A7C15
    splitmix64(x):
        x = x + GOLDEN
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9
        x = (x ^ (x >> 27)) * 0x94D049BB133111EB
        return x ^ (x >> 31)

    key(seed, t)   = splitmix64(seed + (t + 1) * GOLDEN)    # stream t
    u64(key, d)    = splitmix64(key + (d + 1) * GOLDEN)     # draw d
    uniform(0,1)   = (u64 >> 11) * 2^-53
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1


def splitmix64(x):
    """The mixer; accepts python ints or uint64 ndarrays."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = x + np.uint64(GOLDEN)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x = x ^ (x >> np.uint64(31))
    return x


def stream_key(seed: int, t: int) -> int:
    with np.errstate(over="ignore"):
        return int(splitmix64(np.uint64(seed & _MASK) + np.uint64(((t + 1) * GOLDEN) & _MASK)))


def trial_keys(seed: int, start: int, count: int) -> np.ndarray:
    """Keys for streams start .. start+count-1, vectorized."""
    t = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return splitmix64(np.uint64(seed & _MASK) + (t + np.uint64(1)) * np.uint64(GOLDEN))


def uniforms(keys: np.ndarray, draw: int) -> np.ndarray:
    """Uniform(0,1) draw number `draw` under each key (53-bit mantissa)."""
    with np.errstate(over="ignore"):
        v = splitmix64(np.asarray(keys, dtype=np.uint64) + np.uint64(((draw + 1) * GOLDEN) & _MASK))
    return (v >> np.uint64(11)).astype(np.float64) * 2.0**-53


def stable_text_key(text: str) -> int:
    """64-bit key from text, for seeding per-object streams deterministically."""
    h = np.uint64(1469598103934665603)  # FNV-1a offset basis
    with np.errstate(over="ignore"):
        for b in text.encode():
            h = (h ^ np.uint64(b)) * np.uint64(1099511628211)
    return int(h)
