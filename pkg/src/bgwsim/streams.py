"""Counter-based random streams for reproducible, order-independent Monte Carlo.

Every random quantity in this package is derived from a Philox4x64-10 block
cipher evaluated at a structured counter:

    key     = (context key, path index)
    counter = (block index, generation/step index, 0, 0)

so the variates consumed by path ``i`` at step ``n`` depend only on
``(master seed, context tag, i, n)``.  Ensembles are therefore bit-identical
regardless of path ordering, chunking or thread count, and a single path can
be re-simulated in isolation.

Variates are produced by inverse transform from the 53-bit uniforms of each
block (normal via ``ndtri``, binomial/poisson via the scipy distribution
``ppf``, which is an exact inverse of the discrete CDF).
"""

from __future__ import annotations

import hashlib

import numpy as np
from scipy import stats
from scipy.special import ndtri

__all__ = [
    "context_key",
    "philox4x64",
    "uniform_blocks",
    "PathStream",
    "normals_from_uniforms",
    "binomial_from_uniforms",
    "poisson_from_uniforms",
]

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_ROUNDS = 10

# (x + 0.5) * 2^-53 maps a 53-bit integer into (0, 1), never hitting 0 or 1,
# so discrete ppf inverse transforms are always well defined.
_INV53 = float(2.0**-53)


def context_key(master_seed: int, tag: str) -> int:
    """Derive the 64-bit Philox key word for a (seed, context tag) pair.

    Distinct tags give independent stream families for the same master seed;
    the hash is pinned (sha256) so results are reproducible across runs and
    platforms.
    """
    digest = hashlib.sha256(f"{int(master_seed)}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def _mulhilo(a: np.uint64, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo = a * b
    a_lo = a & _MASK32
    a_hi = a >> np.uint64(32)
    b_lo = b & _MASK32
    b_hi = b >> np.uint64(32)
    t = a_lo * b_lo
    mid = a_hi * b_lo + (t >> np.uint64(32))
    mid2 = a_lo * b_hi + (mid & _MASK32)
    hi = a_hi * b_hi + (mid >> np.uint64(32)) + (mid2 >> np.uint64(32))
    return lo, hi


def philox4x64(c0, c1, c2, c3, k0, k1) -> tuple[np.ndarray, ...]:
    """Philox4x64-10 block function, vectorized over the counter/key arrays.

    Matches numpy's ``np.random.Philox`` keystream bit for bit (numpy
    advances the counter before the first block; this function encrypts the
    counter it is given).
    """
    with np.errstate(over="ignore"):
        c0 = np.asarray(c0, dtype=np.uint64)
        shape = np.broadcast_shapes(
            c0.shape,
            np.shape(c1) or (),
            np.shape(c2) or (),
            np.shape(c3) or (),
            np.shape(k0) or (),
            np.shape(k1) or (),
        )
        c0 = np.broadcast_to(c0, shape).copy()
        c1 = np.broadcast_to(np.asarray(c1, dtype=np.uint64), shape).copy()
        c2 = np.broadcast_to(np.asarray(c2, dtype=np.uint64), shape).copy()
        c3 = np.broadcast_to(np.asarray(c3, dtype=np.uint64), shape).copy()
        k0 = np.broadcast_to(np.asarray(k0, dtype=np.uint64), shape).copy()
        k1 = np.broadcast_to(np.asarray(k1, dtype=np.uint64), shape).copy()
        for _ in range(_ROUNDS):
            lo0, hi0 = _mulhilo(_M0, c0)
            lo1, hi1 = _mulhilo(_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
            k0 = k0 + _W0
            k1 = k1 + _W1
    return c0, c1, c2, c3


def uniform_blocks(key0: int, path_keys, step: int, block: int, n_blocks: int = 1):
    """Uniforms in (0,1) for every path at a given (step, block) position.

    Returns an array of shape ``(len(path_keys), 4 * n_blocks)``; block ``b``
    of path ``i`` at step ``n`` is always the same four numbers.
    """
    path_keys = np.asarray(path_keys, dtype=np.uint64)
    k0 = np.uint64(key0)
    out = np.empty((path_keys.size, 4 * n_blocks))
    for b in range(n_blocks):
        words = philox4x64(
            np.uint64(block + b),
            np.uint64(step),
            np.uint64(0),
            np.uint64(0),
            k0,
            path_keys,
        )
        for w in range(4):
            out[:, 4 * b + w] = (
                (words[w] >> np.uint64(11)).astype(np.float64) + 0.5
            ) * _INV53
    return out


class PathStream:
    """Scalar view of the counter-based stream for a single path.

    Used by the per-path operations (single chain step, single SDE path);
    the vectorized ensemble code calls :func:`uniform_blocks` directly with
    the same layout, so both produce bit-identical variates.
    """

    def __init__(self, master_seed: int, tag: str, path_index: int = 0):
        self.key0 = context_key(master_seed, tag)
        self.path_index = int(path_index)
        self._key_arr = np.array([self.path_index], dtype=np.uint64)

    def uniforms(self, step: int, block: int, n_blocks: int = 1) -> np.ndarray:
        return uniform_blocks(self.key0, self._key_arr, step, block, n_blocks)[0]


def normals_from_uniforms(u: np.ndarray) -> np.ndarray:
    return ndtri(u)


def binomial_from_uniforms(u, n, p) -> np.ndarray:
    """Binomial(n, p) by exact inverse transform; ``n`` may be an array."""
    n = np.asarray(n)
    if np.all(n == 0) or p <= 0.0:
        return np.zeros(np.broadcast_shapes(np.shape(u), n.shape), dtype=np.int64)
    if p >= 1.0:
        return (np.zeros_like(np.asarray(u)) + n).astype(np.int64)
    return stats.binom.ppf(u, n, p).astype(np.int64)


def poisson_from_uniforms(u, mu) -> np.ndarray:
    """Poisson(mu) by exact inverse transform; ``mu`` may be an array."""
    mu = np.asarray(mu, dtype=np.float64)
    out = np.zeros(np.broadcast_shapes(np.shape(u), mu.shape), dtype=np.int64)
    pos = mu > 0.0
    if np.any(pos):
        u_b = np.broadcast_to(np.asarray(u), out.shape)
        out[pos] = stats.poisson.ppf(u_b[pos], mu[pos]).astype(np.int64)
    return out
