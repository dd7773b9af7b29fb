"""Deterministic 64-bit PRNG used for data generation, init, and batching.

The generator is splitmix64: output(n) = mix64(seed + (n+1) * GOLDEN), where
mix64 is the standard xor-shift/multiply finalizer. It is counter-based, so
streams vectorize cleanly with numpy uint64 arrays and any draw sequence is a
pure function of (seed, draw order). Every derived quantity in this package
(datasets, weight init, batch indices) is documented in terms of this stream
so a run is reproducible from its seed alone.

Derived values:
  - uniforms: top 53 bits of each output, scaled by 2^-53, in [0, 1)
  - normals: Box-Muller pairs from consecutive uniforms (u1 shifted to (0, 1])
  - bounded ints: output modulo n (documented bias is negligible for n << 2^64)
  - permutations: Fisher-Yates, swapping index i with a bounded draw in [0, i]

Independent sub-streams come from `derive(seed, tag)` = mix64(mix64(seed) ^ tag);
the finalizer's diffusion keeps sibling streams uncorrelated.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def derive(seed: int, tag: int) -> int:
    """Derive an independent child seed from (seed, purpose tag)."""
    base = _mix64(np.array([seed], dtype=np.uint64))[0]
    return int(_mix64(np.array([base ^ _U64(tag)], dtype=np.uint64))[0])


class SplitMix64:
    """Stateful view over the splitmix64 counter stream for one seed."""

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._n = 0  # draws consumed

    def next_raw(self, count: int) -> np.ndarray:
        """Next `count` raw 64-bit outputs as a uint64 array."""
        idx = np.arange(self._n + 1, self._n + count + 1, dtype=np.uint64)
        self._n += count
        return _mix64(_U64(self.seed) + idx * _GOLDEN)

    def uniform(self, shape: int | tuple[int, ...] = ()) -> np.ndarray | float:
        """Uniforms in [0, 1) from the top 53 bits of each output."""
        shape = (shape,) if isinstance(shape, int) else shape
        n = int(np.prod(shape)) if shape else 1
        u = (self.next_raw(n) >> _U64(11)).astype(np.float64) * 2.0**-53
        return u.reshape(shape) if shape else float(u[0])

    def normal(self, shape: int | tuple[int, ...] = ()) -> np.ndarray | float:
        """Standard normals via Box-Muller on consecutive uniform pairs."""
        shape = (shape,) if isinstance(shape, int) else shape
        n = int(np.prod(shape)) if shape else 1
        pairs = (n + 1) // 2
        raw = (self.next_raw(2 * pairs) >> _U64(11)).astype(np.float64)
        u1 = (raw[:pairs] + 1.0) * 2.0**-53  # (0, 1] so log is finite
        u2 = raw[pairs:] * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        return z.reshape(shape) if shape else float(z[0])

    def below(self, n: int, count: int | None = None) -> np.ndarray | int:
        """Integers in [0, n) via modulo reduction of raw outputs."""
        if n <= 0:
            raise ValueError(f"bound must be positive, got {n}")
        raw = self.next_raw(1 if count is None else count) % _U64(n)
        out = raw.astype(np.int64)
        return int(out[0]) if count is None else out

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n)."""
        perm = np.arange(n, dtype=np.int64)
        for i in range(n - 1, 0, -1):
            j = self.below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm
