"""Counter-based random numbers for reproducible, order-independent sampling.

Two layers share the Philox family:

* ``philox4x32`` — the raw 10-round Philox-4x32 block cipher, vectorized
  over numpy arrays.  Feeding it an edge identifier as the counter gives a
  stateless uniform per edge: the same (seed, id) always yields the same
  draw, in any query order.  The percolation sampler builds on this.

* ``step_generator`` — a numpy Generator backed by 4x64 Philox whose key is
  derived from (seed, replicate) and whose counter block is reserved per
  time step.  One step of one replicate draws from its own stream, so
  replicates parallelize with no shared state and a trajectory is
  bit-reproducible regardless of worker count.
"""

from __future__ import annotations

import numpy as np

__all__ = ["philox4x32", "uniform_from_counters", "mix64", "step_generator"]

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)


def philox4x32(c0, c1, c2, c3, key0: int, key1: int, rounds: int = 10):
    """Philox-4x32 keyed bijection of a 128-bit counter, vectorized.

    Counter words are uint32 arrays (or scalars); returns four uint32
    output words of the same shape.
    """
    x0 = np.asarray(c0, dtype=np.uint64)
    x1 = np.asarray(c1, dtype=np.uint64)
    x2 = np.asarray(c2, dtype=np.uint64)
    x3 = np.asarray(c3, dtype=np.uint64)
    k0 = np.uint64(key0 & 0xFFFFFFFF)
    k1 = np.uint64(key1 & 0xFFFFFFFF)
    for _ in range(rounds):
        prod0 = _M0 * x0
        prod1 = _M1 * x2
        hi0 = prod0 >> np.uint64(32)
        lo0 = prod0 & _MASK32
        hi1 = prod1 >> np.uint64(32)
        lo1 = prod1 & _MASK32
        x0 = hi1 ^ x1 ^ k0
        x1 = lo1
        x2 = hi0 ^ x3 ^ k1
        x3 = lo0
        k0 = (k0 + np.uint64(_W0)) & _MASK32
        k1 = (k1 + np.uint64(_W1)) & _MASK32
    return (
        x0.astype(np.uint32),
        x1.astype(np.uint32),
        x2.astype(np.uint32),
        x3.astype(np.uint32),
    )


def uniform_from_counters(c0, c1, c2, c3, seed: int) -> np.ndarray:
    """Uniform floats in [0, 1), one per counter, keyed by the seed."""
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    o0, o1, _, _ = philox4x32(c0, c1, c2, c3, seed & 0xFFFFFFFF, seed >> 32)
    word = (o0.astype(np.uint64) << np.uint64(32)) | o1.astype(np.uint64)
    return (word >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def mix64(*parts: int) -> int:
    """Collapse integers into one well-mixed 64-bit value (SplitMix64 core）."""
    acc = 0x9E3779B97F4A7C15
    for p in parts:
        acc = (acc ^ (int(p) & 0xFFFFFFFFFFFFFFFF)) * 0xBF58476D1CE4E5B9 % (1 << 64)
        acc = ((acc ^ (acc >> 27)) * 0x94D049BB133111EB) % (1 << 64)
        acc ^= acc >> 31
    return acc


def step_generator(seed: int, replicate: int, t: int) -> np.random.Generator:
    """Fresh generator for one time step of one replicate.

    Key = (seed, mixed replicate); counter block = t in a high word, so the
    streams of distinct (seed, replicate, t) never overlap.  All draws of a
    step are consumed from this stream in canonical (row-major site) order.
    """
    key = np.array(
        [int(seed) & 0xFFFFFFFFFFFFFFFF, mix64(replicate, 0xA5EED)],
        dtype=np.uint64,
    )
    counter = np.array([0, int(t), 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))
