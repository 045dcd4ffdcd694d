"""Deterministic, version-stable random number generation.

All randomness in the toolkit flows through :class:`SeededRng`, a
counter-based generator built on the splitmix64 finalizer: output word i
is ``mix64(seed + (counter + i) * GOLDEN)``.  Gaussian variates use the
Box-Muller transform on pairs of uniforms.  Because the algorithm is
pinned here rather than inherited from numpy's Generator (whose streams
may change between numpy releases), identical seeds reproduce identical
samples across platforms and releases.  Model files record the
:data:`RNG_ALGORITHM` tag so a stream change would be detectable.

``derive_seed`` hashes an arbitrary tuple of labels into a fresh 64-bit
seed, which is how independent sub-streams (per gender, per speaker, per
sweep cell) are obtained reproducibly.
"""

from __future__ import annotations

import hashlib

import numpy as np

RNG_ALGORITHM = "splitmix64-boxmuller-v1"

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = 2.0 ** -53


def derive_seed(*parts) -> int:
    """Map a tuple of labels to a 64-bit seed via SHA-256.

    Parts are joined by their ``str()`` form; floats should be passed as
    Python floats (``repr`` is stable for round numbers like 0.95).
    """
    text = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class SeededRng:
    """Counter-based splitmix64 stream seeded with a 64-bit integer."""

    def __init__(self, seed: int):
        if not isinstance(seed, (int, np.integer)):
            raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._base = np.uint64(self.seed)
        self._counter = 0

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit words."""
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            return _mix64(self._base + idx * _GOLDEN)

    def uniform(self, n: int) -> np.ndarray:
        """``n`` uniforms in the open interval (0, 1)."""
        return ((self.raw(n) >> np.uint64(11)).astype(np.float64) + 0.5) * _U53

    def normal(self, shape) -> np.ndarray:
        """Standard normal variates via Box-Muller."""
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        count = int(np.prod(shape)) if shape else 1
        pairs = (count + 1) // 2
        u1 = self.uniform(pairs)
        u2 = self.uniform(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.concatenate([radius * np.cos(theta), radius * np.sin(theta)])[:count]
        return out.reshape(shape)

    def integers(self, bound: int, n: int | None = None):
        """Integers uniform on [0, bound); scalar when ``n`` is None."""
        if bound < 1:
            raise ValueError("bound must be >= 1")
        vals = np.minimum((self.uniform(1 if n is None else n) * bound).astype(np.int64), bound - 1)
        return int(vals[0]) if n is None else vals

    def categorical(self, weights: np.ndarray, n: int) -> np.ndarray:
        """``n`` indices drawn from a normalized weight vector."""
        cum = np.cumsum(np.asarray(weights, dtype=np.float64))
        cum /= cum[-1]
        return np.searchsorted(cum, self.uniform(n), side="right").astype(np.int64)

    def permutation(self, n: int) -> np.ndarray:
        """Uniform permutation of range(n), via random sort keys."""
        return np.argsort(self.uniform(n), kind="stable")

    def choice_without_replacement(self, n: int, k: int) -> np.ndarray:
        """``k`` distinct indices from range(n)."""
        if k > n:
            raise ValueError("cannot choose more items than available")
        return self.permutation(n)[:k]


def make_rng(seed: int) -> SeededRng:
    return SeededRng(seed)
