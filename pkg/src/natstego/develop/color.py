"""Bayer mosaics: bilinear demosaicing and embedding through a color matrix.

With a diagonal (white-balance only) matrix every photo-site carries
payload on its own recorded channel. With a general matrix, only green
photo-sites carry payload, on the output channel with the largest
``|c_i2|``; red and blue photo-sites receive free stego noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate

from .. import cells, rng
from ..raster_io import Raster16
from ..stego_core import MAX_CODE, ChangeProbMap, StegoError, StegoParams, build_prob_map, payload_entropy, sample_map, stego_sigma2
from .plan import CFA_PATTERNS

__all__ = [
    "cfa_masks",
    "bilinear_planes",
    "demosaic_bilinear",
    "ColorEmbedding",
    "embed_color_mosaic",
    "decode_color_payload",
    "SELECT_THRESHOLD",
]

SELECT_THRESHOLD = 1e-6

_K_GREEN = np.array([[0, 1, 0], [1, 4, 1], [0, 1, 0]]) / 4.0
_K_RB = np.array([[1, 2, 1], [2, 4, 2], [1, 2, 1]]) / 4.0


def cfa_masks(shape, cfa: str = "RGGB") -> np.ndarray:
    """Channel index (0=R, 1=G, 2=B) recorded at every photo-site."""
    if cfa not in CFA_PATTERNS:
        raise StegoError(f"unknown CFA pattern {cfa!r}")
    lut = {"R": 0, "G": 1, "B": 2}
    tile_ = np.array([[lut[cfa[0]], lut[cfa[1]]], [lut[cfa[2]], lut[cfa[3]]]])
    h, w = shape
    return np.tile(tile_, ((h + 1) // 2, (w + 1) // 2))[:h, :w]


def bilinear_planes(mosaic: np.ndarray, cfa: str = "RGGB") -> np.ndarray:
    """Float bilinear demosaic; recorded values pass through unchanged."""
    mosaic = np.asarray(mosaic, dtype=np.float64)
    h, w = mosaic.shape
    if h % 2 or w % 2:
        raise StegoError("mosaic dimensions must be even")
    chan = cfa_masks((h, w), cfa)
    out = np.empty((h, w, 3))
    for ch in range(3):
        plane = np.where(chan == ch, mosaic, 0.0)
        kern = _K_GREEN if ch == 1 else _K_RB
        out[..., ch] = correlate(plane, kern, mode="mirror")
    return out


def demosaic_bilinear(mosaic: Raster16, cfa: str = "RGGB") -> Raster16:
    if mosaic.channels != 1:
        raise StegoError("demosaicing expects a single-channel mosaic")
    planes = bilinear_planes(mosaic.samples, cfa)
    out = np.clip(np.rint(planes), 0, mosaic.maxval).astype(np.uint16)
    return Raster16(out, bit_depth=mosaic.bit_depth)


@dataclass(eq=False)
class ColorEmbedding:
    """Developed 3-channel stego image and the embedding bookkeeping.

    ``carrier`` marks photo-sites whose ``channel`` carries payload;
    ``symbols`` are the drawn 8-bit values there (cover code plus change).
    ``signal`` is the continuous developed stego signal (all channels).
    """

    stego: Raster16
    probs: ChangeProbMap
    k: np.ndarray
    carrier: np.ndarray
    channel: np.ndarray
    symbols: np.ndarray
    payload_bits: float
    signal: np.ndarray
    developed_cover: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def bpp(self) -> float:
        return self.payload_bits / (self.carrier.shape[0] * self.carrier.shape[1])


def embed_color_mosaic(
    mosaic: Raster16,
    p: StegoParams,
    cmatrix,
    seed: int,
    cfa: str = "RGGB",
    K: int | None = None,
    threads: int | None = 1,
) -> ColorEmbedding:
    """Embed into a mosaic developed by bilinear demosaicing and ``cmatrix``."""
    if mosaic.channels != 1:
        raise StegoError("expected a single-channel Bayer mosaic")
    if mosaic.bit_depth != p.bit_depth_in:
        raise StegoError("mosaic bit depth does not match parameters")
    C = np.asarray(cmatrix, dtype=np.float64).reshape(3, 3)
    if not np.all(np.isfinite(C)):
        raise StegoError("color matrix must be finite")
    x = mosaic.as_float()
    h, w = x.shape
    chan = cfa_masks((h, w), cfa)
    rows, cols = np.indices((h, w))
    site_var = stego_sigma2(x, p)
    cover_rgb = bilinear_planes(x, cfa)
    developed = cover_rgb @ C.T
    delta = p.quant_step

    diagonal = np.all(C[~np.eye(3, dtype=bool)] == 0)
    s = np.zeros((h, w))
    if diagonal:
        gain = C[chan, chan]
        carrier = np.abs(gain) >= SELECT_THRESHOLD
        channel = np.where(carrier, chan, -1)
        free = ~carrier
        s[free] = np.sqrt(site_var[free]) * rng.normals(seed, rng.STAGE_FREE_NOISE, rows[free], cols[free])
        center = np.take_along_axis(developed, chan[..., None], axis=-1)[..., 0]
        sigma2 = gain * gain * site_var
    else:
        col = np.abs(C[:, 1])
        if col.max() < SELECT_THRESHOLD:
            raise StegoError("no output channel depends on the green photo-sites")
        cmax_ch = int(np.argmax(col))
        cmax = C[cmax_ch, 1]
        gain = np.full((h, w), cmax)
        carrier = chan == 1
        channel = np.where(carrier, cmax_ch, -1)
        free = ~carrier
        # step 1: free noise on red/blue photo-sites
        s[free] = np.sqrt(site_var[free]) * rng.normals(seed, rng.STAGE_FREE_NOISE, rows[free], cols[free])
        # steps 2-3: their interpolated contribution at green sites
        partial = bilinear_planes(s, cfa) @ C.T
        center = developed[..., cmax_ch] + partial[..., cmax_ch]
        sigma2 = cmax * cmax * site_var

    ref = np.where(carrier, np.maximum(channel, 0), 0)
    cover_codes = cells.quantize(np.take_along_axis(developed, ref[..., None], axis=-1)[..., 0], delta, MAX_CODE)
    wet_extra = ~carrier
    if p.wet_dark:
        for ch in np.unique(channel[carrier]):
            sel = carrier & (channel == ch)
            wet_extra |= sel & (cover_codes == cover_codes[sel].min())
    # step 4: change probabilities and draws on carrier sites
    m = build_prob_map(center, np.where(carrier, sigma2, 0.0), cover_codes, p.replace(wet_dark=False), K=K, wet=wet_extra, threads=threads)
    k = sample_map(m, seed, threads=threads)
    # step 5: latent value inside the chosen cell
    lo, hi = cells.cell_bounds(cover_codes, k, m.K, delta, MAX_CODE)
    v, nfb = cells.sample_truncated(center, m.sigma, lo, hi, seed, rng.STAGE_LATENT, rows, cols)
    live = carrier & ~m.wet
    s[live] = (v[live] - center[live]) / gain[live]
    # steps 6-7: remaining components from the same latent draw, then develop
    stego_rgb = (cover_rgb + bilinear_planes(s, cfa)) @ C.T
    out = cells.quantize(stego_rgb, delta, MAX_CODE)
    symbols = cover_codes + k
    ci, cj = np.nonzero(carrier)
    out[ci, cj, channel[ci, cj]] = symbols[ci, cj]

    return ColorEmbedding(
        stego=Raster16(out.astype(np.uint16), bit_depth=8),
        probs=m,
        k=k,
        carrier=carrier,
        channel=channel,
        symbols=np.where(carrier, symbols, -1),
        payload_bits=payload_entropy(m)[0],
        signal=stego_rgb - developed,
        developed_cover=developed,
        diagnostics={"diagonal": bool(diagonal), "latent_fallback": nfb, "carriers": int(carrier.sum())},
    )


def decode_color_payload(stego: Raster16, carrier: np.ndarray, channel: np.ndarray) -> np.ndarray:
    """Read carried symbols back from the developed image (-1 elsewhere)."""
    out = np.full(carrier.shape, -1, dtype=np.int64)
    ci, cj = np.nonzero(carrier)
    out[ci, cj] = stego.samples[ci, cj, channel[ci, cj]]
    return out
