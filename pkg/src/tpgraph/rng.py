"""Counter-based random streams.

Every random batch used by the learner is addressed by ``(seed, position)``
rather than by the state of a shared generator. The construction is
SplitMix64 keyed by a hash of the test position:

    key        = mix64(seed + PHI)
    stream(t)  = SplitMix64 seeded at mix64(key + t * PHI)
    word(t, s) = mix64(stream(t) + (s + 1) * PHI)

where ``mix64`` is the SplitMix64 finalizer and ``PHI = 0x9E3779B97F4A7C15``.
All arithmetic is modulo 2**64, so outputs are identical on every platform.
A word becomes a uniform double in ``[0, 1)`` via ``(w >> 11) * 2**-53``.

Gaussian sampling and the synthetic generators use numpy's ``Philox``
bit generator (also counter-based), seeded directly with the user seed.
"""
from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1
PHI = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TWO_M53 = 2.0 ** -53


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def check_seed(seed) -> int:
    """Validate a user seed and return it as a Python int in ``[0, 2**64)``."""
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must lie in [0, 2**64), got {seed}")
    return seed


def stream_key(seed: int) -> int:
    return mix64(check_seed(seed) + PHI)


def stream_origin(key: int, position: int) -> int:
    return mix64(key + (position * PHI & MASK64))


def stream_words(key: int, position: int, count: int) -> np.ndarray:
    """First ``count`` words of stream ``position`` as a uint64 array."""
    origin = np.uint64(stream_origin(key, position))
    steps = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = origin + steps * np.uint64(PHI)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
        z = z ^ (z >> np.uint64(31))
    return z


def stream_uniforms(key: int, position: int, count: int) -> np.ndarray:
    return (stream_words(key, position, count) >> np.uint64(11)).astype(np.float64) * _TWO_M53


def philox(seed: int) -> np.random.Generator:
    """Counter-based numpy generator for sampling and model construction."""
    return np.random.Generator(np.random.Philox(key=check_seed(seed)))


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from an arbitrary tuple of labels.

    The parts are joined with ``"|"`` after ``repr``-free string conversion
    (floats use ``float.hex`` so that 7/9 is not truncated) and hashed with
    BLAKE2b; the first eight digest bytes, little-endian, form the seed.
    """
    tokens = []
    for part in parts:
        if isinstance(part, float):
            tokens.append(part.hex())
        else:
            tokens.append(str(part))
    digest = hashlib.blake2b("|".join(tokens).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")
