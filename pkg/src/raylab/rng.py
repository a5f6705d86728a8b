"""Counter-based random number generation with per-stream keys.

Every draw in the renderer comes from a keyed stream: a 64-bit counter whose
initial value hashes (seed, k1, k2, k3) and that advances by a fixed odd
constant per draw, with a SplitMix64 finalizer turning counters into
uniforms.  Streams are cheap to open at any (pixel, sample) coordinate, so a
single pixel can be re-rendered in isolation and the traversal order of the
image never changes the result.
"""

from __future__ import annotations

import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_ABSORB = np.uint64(0xA24BAED4963EE407)
_SEED_TAG = np.uint64(0xD1B54A32D192ED03)
_INV_2_53 = 1.0 / 9007199254740992.0

# Stream salts keep draw domains of the different passes disjoint.
SALT_PATH = 1
SALT_LIGHT_PATH = 2
SALT_PHOTON = 3
SALT_BOOTSTRAP = 4
SALT_CHAIN = 5


@njit(cache=True, inline="always")
def mix64(z):
    """SplitMix64 finalizer: a bijective avalanche on 64-bit words."""
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def stream_init(seed, k1, k2, k3):
    """Initial counter state of the stream keyed (seed, k1, k2, k3)."""
    s = mix64(np.uint64(seed) * GOLDEN ^ _SEED_TAG)
    s = mix64(s ^ np.uint64(k1) * _ABSORB)
    s = mix64(s ^ np.uint64(k2) * _ABSORB)
    s = mix64(s ^ np.uint64(k3) * _ABSORB)
    return s


@njit(cache=True, inline="always")
def rng_next(state):
    """Advance one draw; returns (u, new_state) with u uniform in [0, 1)."""
    state = state + GOLDEN
    z = mix64(state)
    return (z >> np.uint64(11)) * _INV_2_53, state


class Rng:
    """Host-side stateful view of one stream.

    The compiled kernels thread the raw counter through their loops instead;
    this wrapper exists for estimator code and tests that live in Python.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int, k1: int = 0, k2: int = 0, k3: int = 0):
        self.state = np.uint64(stream_init(seed, k1, k2, k3))

    def next_float(self) -> float:
        u, state = rng_next(self.state)
        self.state = np.uint64(state)
        return float(u)

    def next_2d(self) -> tuple[float, float]:
        return self.next_float(), self.next_float()
