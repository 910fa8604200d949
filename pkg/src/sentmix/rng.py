"""Counter-based pseudorandom generator with reproducible streams.

Every draw is a pure function of (seed, counter): the k-th raw value is the
splitmix64 finalizer applied to ``seed + (k+1) * GOLDEN``. That makes streams
replayable, forkable into independent child streams, and cheap to vectorize
over a counter range. Reproducibility is preferred over raw speed throughout.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_CHILD_SALT = 0xB5297A4D3C2B4E6F


def _mix(z: int) -> int:
    """splitmix64 finalizer on a python int, mod 2**64."""
    z &= _MASK
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK
    z ^= z >> 31
    return z


def _mix_array(z: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer; uint64 arithmetic wraps mod 2**64."""
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


class RngState:
    """Deterministic draw stream identified by a 64-bit seed and a counter.

    The same seed always produces the same sequence of values, independent
    of how draws are grouped into scalar or array requests of the same kind.
    A single RngState must have a single owner; fork with :meth:`child` when
    independent substreams are needed.
    """

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & _MASK
        self.counter = int(counter)

    def __repr__(self) -> str:
        return f"RngState(seed={self.seed}, counter={self.counter})"

    def child(self, tag: int) -> "RngState":
        """Fork an independent stream; a fixed tag gives a fixed substream."""
        return RngState(_mix((self.seed ^ _CHILD_SALT) + (int(tag) + 1) * _GOLDEN))

    def _raw(self, n: int) -> np.ndarray:
        start = self.counter
        self.counter = start + n
        idx = np.arange(start + 1, start + n + 1, dtype=np.uint64)
        return _mix_array(np.uint64(self.seed) + idx * np.uint64(_GOLDEN))

    def _raw_int(self) -> int:
        # Scalar fast path; bit-identical to one element of _raw.
        self.counter += 1
        return _mix(self.seed + self.counter * _GOLDEN)

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles in [0, 1) with 53-bit resolution."""
        return (self._raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        u = (self._raw_int() >> 11) * 2.0**-53
        return low + (high - low) * u

    def normals(self, n: int) -> np.ndarray:
        """n standard normal draws via Box-Muller (two uniforms per value)."""
        u1 = self.uniforms(n)
        u2 = self.uniforms(n)
        # 1 - u1 lies in (0, 1], keeping the log finite.
        r = np.sqrt(-2.0 * np.log1p(-u1))
        return r * np.cos(2.0 * np.pi * u2)

    def normal(self) -> float:
        u1 = (self._raw_int() >> 11) * 2.0**-53
        u2 = (self._raw_int() >> 11) * 2.0**-53
        return math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(2.0 * math.pi * u2)

    def gamma(self, shape: float) -> float:
        """Gamma(shape, 1) draw via the Marsaglia-Tsang squeeze method."""
        if shape <= 0.0:
            raise ValueError(f"gamma shape must be positive, got {shape}")
        if shape < 1.0:
            # Boost through shape + 1; uniform power maps it back down.
            u = self.uniform()
            return self.gamma(shape + 1.0) * u ** (1.0 / shape)
        d = shape - 1.0 / 3.0
        c = 1.0 / math.sqrt(9.0 * d)
        while True:
            x = self.normal()
            t = 1.0 + c * x
            if t <= 0.0:
                continue
            v = t * t * t
            u = self.uniform()
            if u <= 0.0:
                continue
            if u < 1.0 - 0.0331 * x * x * x * x:
                return d * v
            if math.log(u) < 0.5 * x * x + d * (1.0 - v + math.log(v)):
                return d * v

    def randint_below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError(f"randint_below needs n >= 1, got {n}")
        return min(int(self.uniform() * n), n - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n)."""
        idx = np.arange(n, dtype=np.int64)
        for i in range(n - 1):
            j = i + self.randint_below(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return idx


def sample_beta(rng: RngState, alpha: float) -> float:
    """Draw from the symmetric Beta(alpha, alpha) via two gamma draws.

    Values lie in [0, 1]; equal shape parameters make the distribution
    symmetric about 0.5.
    """
    if alpha <= 0.0:
        raise ValueError(f"beta shape must be positive, got {alpha}")
    x = rng.gamma(alpha)
    y = rng.gamma(alpha)
    total = x + y
    if total == 0.0:
        return 0.5
    return x / total
