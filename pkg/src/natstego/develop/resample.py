"""Sub-sampling, box and tent down-sampling, and integer up-sampling.

Box down-sampling averages disjoint ``c x c`` blocks, so the stego signal
stays independent with its variance divided by ``c**2``.

Tent down-sampling uses the ``(2c - 1)``-tap triangle ``(c - |m|) / c**2``
in each direction, centered on photo-site ``c * I + c // 2``. Neighboring
developed pixels share photo-sites, so pixels are embedded lattice by
lattice (row parity, column parity) = (0,0), (0,1), (1,0), (1,1). Each
pixel's stego value is Gaussian given the photo-site values already drawn
by earlier lattices; after its change is chosen, the still-free photo-sites
of its footprint are drawn conditionally on the selected cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import cells, rng
from ..raster_io import Raster16
from ..stego_core import (
    MAX_CODE,
    ChangeProbMap,
    StegoError,
    StegoParams,
    build_prob_map,
    payload_entropy,
    sample_map,
    stego_sigma2,
)

__all__ = [
    "downsample_sub",
    "box_mean",
    "downsample_box_probs",
    "downsample_box_embed",
    "tent_kernel",
    "tent_downsample",
    "tent_footprint_covariance",
    "TentEmbedding",
    "downsample_tent_embed",
    "upsample",
    "upsample_raster",
]

LATTICES = ((0, 0), (0, 1), (1, 0), (1, 1))


def _check_cover(cover: Raster16, p: StegoParams):
    if cover.channels != 1:
        raise StegoError("down-sampling expects a single-channel cover")
    if cover.bit_depth != p.bit_depth_in:
        raise StegoError("cover bit depth does not match parameters")


def downsample_sub(cover: Raster16, c: int) -> Raster16:
    """Keep every ``c``-th sample of every ``c``-th row, starting at (0, 0)."""
    if c < 1:
        raise ValueError("factor must be >= 1")
    if cover.height < c or cover.width < c:
        raise ValueError("image smaller than the sub-sampling factor")
    return Raster16(cover.samples[::c, ::c].copy(), bit_depth=cover.bit_depth)


# ---------------------------------------------------------------------------
# Box
# ---------------------------------------------------------------------------


def box_mean(x: np.ndarray, c: int) -> np.ndarray:
    h, w = x.shape
    if h % c or w % c:
        raise StegoError(f"dimensions {w}x{h} not divisible by {c}")
    return x.reshape(h // c, c, w // c, c).mean(axis=(1, 3))


def downsample_box_probs(
    cover: Raster16, p: StegoParams, c: int, K: int | None = None, threads: int | None = 1
) -> ChangeProbMap:
    """Change probabilities on the ``c``-fold box-averaged grid."""
    _check_cover(cover, p)
    xbar = box_mean(cover.as_float(), c)
    s2 = stego_sigma2(xbar, p) / (c * c)
    codes = cells.quantize(xbar, p.quant_step, MAX_CODE)
    return build_prob_map(xbar, s2, codes, p, K=K, threads=threads)


def downsample_box_embed(
    cover: Raster16, p: StegoParams, c: int, seed: int, K: int | None = None, threads: int | None = 1
) -> tuple[Raster16, np.ndarray, ChangeProbMap]:
    m = downsample_box_probs(cover, p, c, K=K, threads=threads)
    k = sample_map(m, seed, threads=threads)
    return Raster16((m.codes + k).astype(np.uint16), bit_depth=8), k, m


# ---------------------------------------------------------------------------
# Tent
# ---------------------------------------------------------------------------


def tent_kernel(c: int) -> np.ndarray:
    """1-D triangle taps for factor ``c``; ``[1, 2, 1] / 4`` for ``c = 2``."""
    m = np.arange(-(c - 1), c)
    return (c - np.abs(m)) / float(c * c)


def _tent_geometry(shape, c):
    h, w = shape
    nr, nc = h // c, w // c
    if nr < 1 or nc < 1:
        raise StegoError("image smaller than the down-sampling factor")
    phase = c // 2
    I, J = np.indices((nr, nc))
    ci, cj = c * I + phase, c * J + phase
    reach = c - 1
    border = (ci - reach < 0) | (ci + reach >= h) | (cj - reach < 0) | (cj + reach >= w)
    return nr, nc, phase, ci, cj, border


def _correlate_at(field_, taps, ci, cj, pad_mode):
    """Separable tent sum of ``field_`` evaluated at centers ``(ci, cj)``."""
    r = len(taps) // 2
    padded = np.pad(field_, r, mode=pad_mode)
    out = np.zeros(ci.shape)
    for a, ta in enumerate(taps):
        for b, tb in enumerate(taps):
            out += ta * tb * padded[ci + a, cj + b]
    return out


def tent_downsample(x: np.ndarray, c: int) -> np.ndarray:
    """Tent-filtered values at developed centers, mirror-padded at borders."""
    _, _, _, ci, cj, _ = _tent_geometry(x.shape, c)
    return _correlate_at(np.asarray(x, dtype=np.float64), tent_kernel(c), ci, cj, "reflect")


def tent_footprint_covariance(c: int, lag: int = 0) -> float:
    """Covariance factor between developed pixels ``lag`` apart along a row.

    Multiply by the photo-site variance for flat, i.i.d. photo-site noise.
    """
    t = tent_kernel(c)
    t2 = float((t * t).sum())
    shift = lag * c
    if shift >= len(t):
        return 0.0
    cross = float((t[shift:] * t[: len(t) - shift]).sum()) if shift else t2
    return t2 * cross


@dataclass(eq=False)
class TentEmbedding:
    """Result of sequential tent down-sampling embedding.

    ``lattice_maps`` holds one :class:`ChangeProbMap` per lattice on its own
    sub-grid (rows ``p::2``, columns ``q::2`` of the developed grid), with
    realized conditional distributions. ``signal`` is the continuous
    developed stego signal and ``photosite_signal`` the photo-site field.
    """

    stego: Raster16
    k: np.ndarray
    lattice_maps: list
    lattice_bits: list
    payload_bits: float
    bpp: float
    signal: np.ndarray
    photosite_signal: np.ndarray
    developed_cover: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def lattice_bpp(self) -> list[float]:
        return [b / max(m.width * m.height, 1) for b, m in zip(self.lattice_bits, self.lattice_maps)]


def _free_offsets(parity, c):
    reach = np.arange(-(c - 1), c)
    rows = reach if parity[0] == 0 else np.array([0])
    cols = reach if parity[1] == 0 else np.array([0])
    dr, dc = np.meshgrid(rows, cols, indexing="ij")
    return dr.ravel(), dc.ravel()


def downsample_tent_embed(
    cover: Raster16,
    p: StegoParams,
    c: int,
    seed: int,
    K: int | None = None,
    threads: int | None = 1,
) -> TentEmbedding:
    """Embed into a tent down-sampled image with the four-lattice schedule.

    Border developed pixels (footprint leaving the image) are wet and their
    photo-sites receive no stego signal. Wet interior pixels keep their
    cover code and their free photo-sites stay at zero.
    """
    _check_cover(cover, p)
    x = cover.as_float()
    h, w = x.shape
    taps = tent_kernel(c)
    nr, nc, phase, ci, cj, border = _tent_geometry((h, w), c)
    site_var = stego_sigma2(x, p)
    xbar = _correlate_at(x, taps, ci, cj, "reflect")
    codes_all = cells.quantize(xbar, p.quant_step, MAX_CODE)

    dark_wet = np.zeros((nr, nc), dtype=bool)
    if p.wet_dark:
        dark_wet = codes_all == codes_all.min()
    if K is None:
        full_var = _correlate_at(site_var, taps * taps, ci, cj, "reflect")
        live = ~(border | dark_wet | (codes_all <= 0) | (codes_all >= MAX_CODE))
        smax = np.sqrt(full_var[live].max()) if live.any() else 0.0
        K = cells.safe_support(smax, p.quant_step, MAX_CODE)

    S = np.zeros((h, w))
    k_all = np.zeros((nr, nc), dtype=np.int64)
    maps, bits = [], []
    fallback = 0
    for li, parity in enumerate(LATTICES):
        sel = (slice(parity[0], None, 2), slice(parity[1], None, 2))
        I, J = np.indices((nr, nc))
        I, J = I[sel], J[sel]
        if I.size == 0:
            continue
        pci, pcj = ci[sel], cj[sel]
        pborder = border[sel]
        ibi, ibj = np.where(pborder, 0, pci), np.where(pborder, 0, pcj)

        dr, dc = _free_offsets(parity, c)
        wts = taps[dr + c - 1] * taps[dc + c - 1]
        sr = np.clip(ibi[..., None] + dr, 0, h - 1)
        sc = np.clip(ibj[..., None] + dc, 0, w - 1)
        fvar = site_var[sr, sc]

        # already-drawn photo-sites enter through the mean; free ones are still zero
        mu = np.where(pborder, 0.0, _correlate_at(S, taps, ibi, ibj, "constant"))
        cvar = np.where(pborder, 0.0, (wts * wts * fvar).sum(axis=-1))
        center = xbar[sel] + mu
        codes = codes_all[sel]
        stage = 16 * li
        m = build_prob_map(center, cvar, codes, p.replace(wet_dark=False), K=K, wet=pborder | dark_wet[sel], threads=threads)
        k = sample_map(m, seed, threads=threads, stage=rng.STAGE_CHANGE + stage, rows=I, cols=J)

        lo, hi = cells.cell_bounds(codes, k, m.K, m.delta, MAX_CODE)
        v, nfb = cells.sample_truncated(center, m.sigma, lo, hi, seed, rng.STAGE_LATENT + stage, I, J)
        fallback += nfb
        target = np.where(m.wet, 0.0, v - center)
        z = np.sqrt(fvar) * rng.normals(seed, rng.STAGE_SITES + stage, sr, sc)
        free = cells.conditional_sites(wts, fvar, target, z)
        free = np.where(m.wet[..., None], 0.0, free)
        valid = ~pborder[..., None] & np.ones_like(free, dtype=bool)
        S[sr[valid], sc[valid]] = free[valid]

        k_all[sel] = k
        maps.append(m)
        bits.append(payload_entropy(m)[0])

    signal = _correlate_at(S, taps, np.where(border, 0, ci), np.where(border, 0, cj), "constant")
    signal = np.where(border, 0.0, signal)
    stego = Raster16((codes_all + k_all).astype(np.uint16), bit_depth=8)
    total = float(sum(bits))
    return TentEmbedding(
        stego=stego,
        k=k_all,
        lattice_maps=maps,
        lattice_bits=bits,
        payload_bits=total,
        bpp=total / (nr * nc),
        signal=signal,
        photosite_signal=S,
        developed_cover=xbar,
        diagnostics={"K": K, "border": int(border.sum()), "latent_fallback": fallback},
    )


# ---------------------------------------------------------------------------
# Up-sampling
# ---------------------------------------------------------------------------


def upsample_raster(r: Raster16, c: int) -> Raster16:
    """Nearest-neighbor duplication by an integer factor."""
    if c < 1:
        raise ValueError("factor must be >= 1")
    s = np.repeat(np.repeat(r.samples, c, axis=0), c, axis=1)
    return Raster16(s, bit_depth=r.bit_depth)


def upsample(stego: Raster16, m: ChangeProbMap, c: int) -> tuple[Raster16, ChangeProbMap]:
    """Up-sample a stego image together with its map.

    Only the original lattice ``(c*i, c*j)`` carries payload; interpolated
    positions are flagged wet with a deterministic no-change distribution.
    """
    if (stego.height, stego.width) != (m.height, m.width):
        raise StegoError("map does not match the image")
    up = upsample_raster(stego, c)
    h, w = m.height * c, m.width * c
    probs = np.zeros((h, w, 2 * m.K + 1))
    probs[..., m.K] = 1.0
    probs[::c, ::c] = m.probs
    wet = np.ones((h, w), dtype=bool)
    wet[::c, ::c] = m.wet
    codes = np.repeat(np.repeat(m.codes, c, axis=0), c, axis=1)
    center = np.repeat(np.repeat(m.center, c, axis=0), c, axis=1)
    sigma = np.zeros((h, w))
    sigma[::c, ::c] = m.sigma
    out = ChangeProbMap(probs, wet, m.K, codes, center, sigma, m.delta, m.max_code, {"carrier_stride": c})
    return up, out
