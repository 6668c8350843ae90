"""Counter-based, splittable random streams.

Every random quantity in this package is derived from a stream keyed by
``(seed, purpose, *indices)``.  Streams with distinct keys are independent,
and a stream's output depends only on its key, never on call order or
thread scheduling.  Normal variates are produced by inverse-CDF transform
of the keyed uniform stream, so the draw count is fixed (no rejection
loops) and results are platform-stable.
"""

from __future__ import annotations

import hashlib

import numpy as np
from scipy.special import ndtri

__all__ = ["stream_key", "rng_stream", "uniforms", "normals", "complex_normals"]

_U53 = float(1 << 53)


def stream_key(seed: int, purpose: str, *indices: int) -> bytes:
    """Canonical byte encoding of a stream key."""
    parts = [str(int(seed)), purpose] + [str(int(i)) for i in indices]
    return "/".join(parts).encode("utf-8")


def rng_stream(seed: int, purpose: str, *indices: int) -> np.random.Generator:
    """Return the Philox generator for the stream keyed by (seed, purpose, indices).

    Philox is counter-based: the 256-bit key is derived by hashing the
    canonical key encoding, so any two distinct keys give statistically
    independent streams.
    """
    digest = hashlib.sha256(stream_key(seed, purpose, *indices)).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)  # Philox takes a 128-bit key
    return np.random.Generator(np.random.Philox(key=key))


def uniforms(seed: int, purpose: str, *indices: int, size: int) -> np.ndarray:
    """Uniform variates on the open interval (0, 1), 53-bit resolution."""
    gen = rng_stream(seed, purpose, *indices)
    bits = gen.integers(0, 1 << 53, size=size, dtype=np.uint64)
    return (bits.astype(np.float64) + 0.5) / _U53


def normals(seed: int, purpose: str, *indices: int, size: int) -> np.ndarray:
    """Standard normal variates via inverse CDF of the uniform stream."""
    return ndtri(uniforms(seed, purpose, *indices, size=size))


def complex_normals(seed: int, purpose: str, *indices: int, size: int) -> np.ndarray:
    """Standard complex normals: real and imaginary parts iid N(0, 1/2)."""
    z = normals(seed, purpose, *indices, size=2 * size)
    return (z[:size] + 1j * z[size:]) / np.sqrt(2.0)
