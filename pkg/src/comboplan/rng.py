"""Seedable random streams for planner runs.

A run owns one master seed. Independent consumers (environment transitions,
rollout action sampling, mixture-policy selection, policy evaluation) each get
their own stream derived from the seed, so swapping the uncertainty check or
the algorithm variant does not shift anybody else's draws.

Two mechanisms are provided:

* ``stream(seed, name)`` returns a ``numpy.random.Generator`` (Philox) for
  code paths that consume draws sequentially.
* A stateless counter hash (splitmix64 finalizer) used by the rollout
  engine. Every draw is addressed by integers, never by position in a
  sequence, which makes the compiled kernel and its pure-Python twin
  bit-for-bit identical.
"""

from __future__ import annotations

import numpy as np

STREAMS = {
    "env": 0,
    "policy": 1,
    "mixture": 2,
    "eval": 3,
}

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1


def stream(seed: int, name: str) -> np.random.Generator:
    """Named Philox stream for a run seed."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(STREAMS[name],))
    return np.random.Generator(np.random.Philox(ss))


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def stream_key(seed: int, name: str) -> int:
    """64-bit key for the counter hash, one per (seed, stream)."""
    return mix64(mix64((seed & _MASK) ^ (STREAMS[name] * _GOLDEN)) + _GOLDEN)


def counter_uniform(key: int, counter: int) -> float:
    """Uniform in [0, 1) addressed by an integer counter."""
    h = mix64((key + counter * _GOLDEN) & _MASK)
    return (h >> 11) * 2.0**-53


def counter_uniform_array(key: int, counters: np.ndarray) -> np.ndarray:
    """Vectorized ``counter_uniform`` over an array of counters."""
    z = (np.uint64(key) + counters.astype(np.uint64) * np.uint64(_GOLDEN)).astype(
        np.uint64
    )
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53
