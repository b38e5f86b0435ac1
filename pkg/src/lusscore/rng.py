"""Deterministic, portable random numbers.

Everything seeded in this package draws from one generator: splitmix64 run
in counter mode.  Output ``i`` of a stream with seed ``s`` is::

    mix64((s + (i + 1) * GOLDEN) mod 2**64)

where ``mix64`` is the splitmix64 finalizer.  Each draw is a pure function
of (seed, index), so blocks of any size can be produced vectorised without
changing the values drawn, and independent sub-streams can be derived per
item with :func:`derive_seed`.

Gaussians use the Box-Muller transform on consecutive counter pairs; the
first uniform of a pair is shifted into (0, 1] so the log never sees zero.
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = 0xFFFFFFFFFFFFFFFF
_INV_2_53 = 1.0 / (1 << 53)

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


def mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, vectorised over a uint64 array."""
    z = z.astype(np.uint64, copy=True)
    z ^= z >> _S30
    z *= _M1
    z ^= z >> _S27
    z *= _M2
    z ^= z >> _S31
    return z


def mix64_int(z: int) -> int:
    """splitmix64 finalizer on a plain Python integer."""
    z &= _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


def fnv1a64(text: str) -> int:
    """FNV-1a hash of UTF-8 bytes; used to fold string keys into seeds."""
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & _MASK64
    return h


def derive_seed(master: int, *parts: int | str) -> int:
    """Derive an independent child seed from a master seed and key parts.

    The derivation is order-sensitive and collision-resistant enough for
    stream splitting: each part is finalized and folded into the running
    hash.  Strings hash via FNV-1a so image ids and stage names are stable
    across runs and platforms.
    """
    h = mix64_int(master ^ GOLDEN)
    for part in parts:
        k = fnv1a64(part) if isinstance(part, str) else (int(part) & _MASK64)
        h = mix64_int((h + GOLDEN) ^ mix64_int(k + GOLDEN))
    return h


class CounterRng:
    """Counter-mode splitmix64 stream.

    The stream position advances by the number of values drawn; two
    instances with the same seed and call sequence produce identical
    values on every platform.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self.counter = 0

    def _raw(self, n: int) -> np.ndarray:
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        z = np.uint64(self.seed) + idx * np.uint64(GOLDEN)
        return mix64(z)

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles uniform on [0, 1), 53 random bits each."""
        return (self._raw(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def uniform(self, low: float, high: float) -> float:
        return float(low + self.uniforms(1)[0] * (high - low))

    def normals(self, n: int) -> np.ndarray:
        """n standard normals via Box-Muller on consecutive counter pairs."""
        pairs = (n + 1) // 2
        bits = (self._raw(2 * pairs) >> np.uint64(11)).astype(np.float64)
        u1 = (bits[0::2] + 1.0) * _INV_2_53  # (0, 1]: log-safe
        u2 = bits[1::2] * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n) by sorting random keys.

        Stable argsort pins the (vanishingly unlikely) key-collision case,
        so the result depends only on the drawn keys.
        """
        keys = self._raw(n)
        return np.argsort(keys, kind="stable")

    def shuffled(self, items: list) -> list:
        order = self.permutation(len(items))
        return [items[i] for i in order]
