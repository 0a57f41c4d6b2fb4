"""SplitMix64 counter-based generator.

Output ``i`` of a stream is ``mix(seed_key + (i + 1) * GAMMA)``, so any draw
can be reproduced from (seed, stream, counter) alone on any platform.
numpy's uint64 arithmetic wraps modulo 2**64, which is exactly what the
mixing function needs.
"""

from __future__ import annotations

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_MASK64 = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _mix_int(x: int) -> int:
    return int(_mix(np.array([x & _MASK64], dtype=np.uint64))[0])


class SplitMix64:
    """Deterministic stream of 64-bit words keyed by ``(seed, stream)``.

    Different ``stream`` values give independent sequences for the same seed,
    e.g. weight init vs. mini-batch shuffling.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self._key = np.uint64(_mix_int(self.seed) ^ _mix_int(self.stream * 0x632BE59BD9B4E019 + 1))
        self._counter = 0

    def next_uint64(self, n: int) -> np.ndarray:
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            return _mix(self._key + idx * GAMMA)

    def uniform(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """``n`` doubles in ``[low, high)`` from the top 53 bits of each word."""
        u = (self.next_uint64(n) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
        return low + (high - low) * u

    def normal(self, n: int) -> np.ndarray:
        # Box-Muller; 1 - u keeps the log argument in (0, 1].
        m = (n + 1) // 2
        u1 = 1.0 - self.uniform(m)
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
        return z[:n]

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of ``range(n)``."""
        out = np.arange(n)
        if n < 2:
            return out
        words = self.next_uint64(n - 1)
        for k, i in enumerate(range(n - 1, 0, -1)):
            j = int(words[k] % np.uint64(i + 1))
            out[i], out[j] = out[j], out[i]
        return out
