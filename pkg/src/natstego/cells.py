"""Gaussian mass of quantization cells and draws restricted to a cell.

A stego sample ``y ~ N(center, sigma^2)`` is quantized to code
``clip(round(y / delta), 0, max_code)``. Relative to the cover code the
change ``k`` lies in ``[-K, K]``; the mass beyond ``+-K`` is folded into
the extreme bins and codes outside ``[0, max_code]`` collapse onto the end
codes, exactly as the clipping quantizer does.
"""

from __future__ import annotations

import numpy as np
from scipy.special import entr, ndtr
from scipy.stats import truncnorm

from . import rng

REJECTION_CAP = 10_000


def quantize(x, delta: float, max_code: int = 255) -> np.ndarray:
    """Round-to-nearest (ties to even) quantizer clipped to the code range."""
    q = np.rint(np.asarray(x, dtype=np.float64) / delta)
    return np.clip(q, 0, max_code).astype(np.int64)


def safe_support(sigma_max: float, delta: float, max_code: int = 255) -> int:
    """Smallest ``K`` keeping folded tail mass below ``Phi(-6)`` per pixel."""
    k = int(np.ceil(6.0 * float(sigma_max) / delta)) + 1
    return int(min(max(k, 1), max_code))


def cell_probs(center, sigma, codes, K: int, delta: float, max_code: int = 255) -> np.ndarray:
    """Probabilities of ``k = -K..K`` for every pixel, shape ``(..., 2K+1)``.

    ``sigma`` must be positive where this is evaluated; callers handle
    deterministic pixels separately.
    """
    center = np.asarray(center, dtype=np.float64)[..., None]
    sigma = np.asarray(sigma, dtype=np.float64)[..., None]
    codes = np.asarray(codes, dtype=np.int64)[..., None]
    j = np.arange(-K + 1, K + 1)
    edge_codes = codes + j
    z = ((edge_codes - 0.5) * delta - center) / sigma
    F = ndtr(z)
    F = np.where(edge_codes <= 0, 0.0, F)
    F = np.where(edge_codes >= max_code + 1, 1.0, F)
    shape = F.shape[:-1] + (1,)
    F = np.concatenate([np.zeros(shape), F, np.ones(shape)], axis=-1)
    return np.diff(F, axis=-1)


def cell_bounds(codes, k, K: int, delta: float, max_code: int = 255):
    """Continuous interval ``[lo, hi)`` quantizing to change ``k``."""
    v = np.asarray(codes, dtype=np.int64) + np.asarray(k, dtype=np.int64)
    k = np.asarray(k)
    lo = np.where((k <= -K) | (v <= 0), -np.inf, (v - 0.5) * delta)
    hi = np.where((k >= K) | (v >= max_code), np.inf, (v + 0.5) * delta)
    return lo, hi


def entropy_bits(probs: np.ndarray) -> np.ndarray:
    """Per-pixel entropy in bits over the last axis (0 log 0 = 0)."""
    return entr(probs).sum(axis=-1) / np.log(2.0)


def sample_changes(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw of ``k`` from per-pixel distributions given uniforms."""
    K = (probs.shape[-1] - 1) // 2
    cum = np.cumsum(probs, axis=-1)
    idx = (cum < u[..., None]).sum(axis=-1)
    return np.minimum(idx, 2 * K) - K


def sample_truncated(
    center,
    sigma,
    lo,
    hi,
    seed: int,
    stage: int,
    rows,
    cols,
    cap: int = REJECTION_CAP,
):
    """Draw ``N(center, sigma^2)`` restricted to ``[lo, hi)``.

    Rejection from the unrestricted Gaussian, attempt ``t`` using counter
    ``draw=t``; after ``cap`` attempts the remaining pixels fall back to
    inverse-CDF sampling of the truncated law. Returns ``(values, n_fallback)``.
    Pixels with zero ``sigma`` return ``center``.
    """
    center, sigma, lo, hi, rows, cols = (
        np.asarray(a) for a in np.broadcast_arrays(center, sigma, lo, hi, rows, cols)
    )
    center = center.astype(np.float64)
    sigma = sigma.astype(np.float64)
    out = center.copy()
    pending = np.flatnonzero(sigma.ravel() > 0)
    c, s = center.ravel(), sigma.ravel()
    l, h = lo.ravel(), hi.ravel()
    r, q = rows.ravel(), cols.ravel()
    flat = out.ravel()

    t = 0
    batch = 4
    while pending.size and t < cap:
        nb = min(batch, cap - t)
        draws = np.arange(t, t + nb)[:, None]
        z = rng.normals(seed, stage, r[pending][None, :], q[pending][None, :], draws)
        y = c[pending] + s[pending] * z
        ok = (y >= l[pending]) & (y < h[pending])
        hit = ok.any(axis=0)
        first = ok.argmax(axis=0)
        done = pending[hit]
        flat[done] = y[first[hit], np.flatnonzero(hit)]
        pending = pending[~hit]
        t += nb
        batch = min(batch * 2, 256)

    n_fallback = int(pending.size)
    if n_fallback:
        u = rng.uniforms(seed, stage, r[pending], q[pending], cap)
        a = (l[pending] - c[pending]) / s[pending]
        b = (h[pending] - c[pending]) / s[pending]
        z = truncnorm.ppf(u, a, b)
        flat[pending] = np.clip(c[pending] + s[pending] * z, l[pending], np.nextafter(h[pending], -np.inf))
    return flat.reshape(center.shape), n_fallback


def conditional_sites(weights, site_var, target, z):
    """Split a weighted sum ``target`` over independent Gaussian sites.

    Given unconditional draws ``z`` (shape ``(..., n)``) of sites with
    variances ``site_var``, returns values distributed as the sites
    conditioned on ``sum(weights * sites) == target``.
    """
    wv = weights * site_var
    denom = (weights * wv).sum(axis=-1, keepdims=True)
    denom = np.where(denom > 0, denom, 1.0)
    resid = target[..., None] - (weights * z).sum(axis=-1, keepdims=True)
    return z + wv * resid / denom
