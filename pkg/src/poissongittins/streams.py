"""Counter-based random streams keyed by ``(seed, stream_id)``.

Block ``b`` of stream ``(seed, stream_id)`` with tag ``t`` is produced by a
Philox generator whose key is ``(seed, stream_id)`` and whose counter starts
at ``(0, b, t, 0)``.  A block is therefore a pure function of those four
integers: the same path or episode sees the same numbers no matter how the
work is batched or distributed over workers.
"""

from __future__ import annotations

import numpy as np
from scipy import special

__all__ = ["StreamFactory", "open_unit", "exponential", "normal", "poisson", "gamma_sum"]

_HALF_ULP = 2.0**-54


class StreamFactory:
    """Reusable Philox state for drawing blocks; not shared between threads."""

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._bitgen = np.random.Philox(key=np.array([self.seed, 0], dtype=np.uint64))
        self._gen = np.random.Generator(self._bitgen)
        self._state = self._bitgen.state
        self._key = self._state["state"]["key"]
        self._counter = self._state["state"]["counter"]

    def block(self, stream_id: int, block: int, n: int, tag: int = 0) -> np.ndarray:
        """``n`` uniforms on ``[0, 1)`` for one block of one stream."""
        self._key[1] = stream_id
        self._counter[:] = (0, block, tag, 0)
        self._state["buffer_pos"] = 4
        self._state["has_uint32"] = 0
        self._bitgen.state = self._state
        return self._gen.random(n)

    def blocks(self, stream_ids, block: int, n: int, tag: int = 0) -> np.ndarray:
        out = np.empty((len(stream_ids), n))
        for i, sid in enumerate(stream_ids):
            out[i] = self.block(sid, block, n, tag)
        return out


def open_unit(u: np.ndarray) -> np.ndarray:
    """Map ``[0, 1)`` draws into ``(0, 1)`` by a half-ulp offset."""
    return u + _HALF_ULP


def exponential(u, rate):
    return -np.log1p(-u) / rate


def normal(u):
    return special.ndtri(open_unit(u))


def poisson(u, mean):
    """Poisson variates by inversion of the CDF (vectorized)."""
    mean = np.broadcast_to(np.asarray(mean, dtype=float), np.shape(u))
    return _poisson_inverse(u, mean)


def _poisson_inverse(u, mean):
    out = np.zeros(np.shape(u))
    small = mean < 30.0
    if np.any(small):
        us, ms = u[small], mean[small]
        n = np.zeros_like(us)
        p = np.exp(-ms)
        cdf = p.copy()
        idx = np.flatnonzero(us >= cdf)
        k = 0
        while len(idx) and k < 200:
            k += 1
            p[idx] *= ms[idx] / k
            cdf[idx] += p[idx]
            n[idx] = k
            idx = idx[us[idx] >= cdf[idx]]
        out[small] = n
    if np.any(~small):
        from scipy import stats

        out[~small] = stats.poisson.ppf(u[~small], mean[~small])
    return out


def gamma_sum(u, count, rate):
    """Sum of ``count`` independent Exp(``rate``) variables by inversion (0 when count is 0)."""
    count = np.asarray(count, dtype=float)
    out = np.zeros(np.shape(u))
    pos = count > 0
    if np.any(pos):
        out[pos] = special.gammaincinv(count[pos], open_unit(u[pos])) / rate
    return out
