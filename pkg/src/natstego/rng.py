"""Counter-based random streams.

Every random number used during embedding is a pure function of
``(seed, stage, row, col, draw)``, computed with the Philox4x32-10 block
function. Results therefore do not depend on traversal order, chunking or
thread count.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)

# Stage identifiers. Lattice-based schemes offset these by 16 * lattice.
STAGE_CHANGE = 1
STAGE_LATENT = 2
STAGE_SITES = 3
STAGE_FREE_NOISE = 4


def philox4x32(counter, key, rounds: int = 10):
    """Vectorized Philox4x32 block function.

    ``counter`` is a sequence of four uint32-valued arrays (broadcastable),
    ``key`` a pair of ints. Returns four uint64 arrays holding 32-bit words.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK for c in counter)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    k0 = np.uint64(int(key[0]) & 0xFFFFFFFF)
    k1 = np.uint64(int(key[1]) & 0xFFFFFFFF)
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _SHIFT) ^ c1 ^ k0,
            p1 & _MASK,
            (p0 >> _SHIFT) ^ c3 ^ k1,
            p0 & _MASK,
        )
    return c0, c1, c2, c3


def _key(seed: int) -> tuple[int, int]:
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return seed & 0xFFFFFFFF, seed >> 32


def uniforms(seed: int, stage: int, rows, cols, draw=0) -> np.ndarray:
    """Uniform variates in the open interval (0, 1), 53-bit resolution."""
    w0, w1, _, _ = philox4x32((cols, rows, stage, draw), _key(seed))
    hi = w0 >> np.uint64(5)  # 27 bits
    lo = w1 >> np.uint64(6)  # 26 bits
    bits = (hi << np.uint64(26)) | lo
    return (bits.astype(np.float64) + 0.5) * 2.0**-53


def normals(seed: int, stage: int, rows, cols, draw=0) -> np.ndarray:
    """Standard normal variates by inversion of :func:`uniforms`."""
    return ndtri(uniforms(seed, stage, rows, cols, draw))


def grid_indices(shape: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Row and column index arrays for a 2-D grid."""
    ii, jj = np.indices(shape)
    return ii, jj
