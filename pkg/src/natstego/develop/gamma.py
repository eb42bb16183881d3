"""Embedding through a gamma correction ``y = ymax * (x / ymax) ** (1 / gamma)``.

The stego signal is propagated with the first-order expansion of the
curve around the cover sample: it stays Gaussian with its standard
deviation scaled by the local slope. The developed cover itself uses the
exact curve.
"""

from __future__ import annotations

import numpy as np

from .. import cells, rng
from ..raster_io import Raster16
from ..stego_core import (
    MAX_CODE,
    ChangeProbMap,
    StegoError,
    StegoParams,
    build_prob_map,
    change_probs,
    sample_map,
    stego_sigma2,
)


def gamma_curve(x, gamma: float, ymax: float = 65535.0):
    x = np.asarray(x, dtype=np.float64)
    if gamma == 1:
        return x.copy()
    return ymax * np.power(np.clip(x, 0, None) / ymax, 1.0 / gamma)


def gamma_slope(x, gamma: float, ymax: float = 65535.0):
    """Derivative of the gamma curve, ``(x / ymax) ** (1/gamma - 1) / gamma``."""
    x = np.asarray(x, dtype=np.float64)
    if gamma == 1:
        return np.ones_like(x)
    with np.errstate(divide="ignore"):
        return np.power(np.clip(x, 0, None) / ymax, 1.0 / gamma - 1.0) / gamma


def gamma_sigma2(x, p: StegoParams, gamma: float):
    """Linearized stego variance after the gamma curve."""
    x = np.asarray(x, dtype=np.float64)
    alpha = gamma_slope(x, gamma, p.input_max)
    s2 = stego_sigma2(x, p)
    with np.errstate(invalid="ignore"):
        out = alpha * alpha * s2
    return np.where(np.isfinite(out), out, 0.0)


def gamma_probs(
    cover: Raster16, p: StegoParams, gamma: float, K: int | None = None, threads: int | None = 1
) -> ChangeProbMap:
    """Change probabilities for a cover developed by gamma then quantization."""
    if not gamma > 0:
        raise StegoError("gamma must be positive")
    if gamma == 1:
        return change_probs(cover, p, K=K, threads=threads)
    if cover.channels != 1:
        raise StegoError("gamma_probs expects a single-channel cover")
    if cover.bit_depth != p.bit_depth_in:
        raise StegoError("cover bit depth does not match parameters")
    x = cover.as_float()
    ymax = float(p.input_max)
    developed = gamma_curve(x, gamma, ymax)
    clamped = developed > ymax
    developed = np.minimum(developed, ymax)
    codes = cells.quantize(developed, p.quant_step, MAX_CODE)
    s2 = gamma_sigma2(x, p, gamma)
    m = build_prob_map(developed, s2, codes, p, K=K, wet=clamped | (x <= 0), threads=threads)
    m.diagnostics["clamped"] = int(clamped.sum())
    return m


def gamma_embed(
    cover: Raster16,
    p: StegoParams,
    gamma: float,
    seed: int,
    K: int | None = None,
    threads: int | None = 1,
) -> tuple[Raster16, np.ndarray, ChangeProbMap]:
    m = gamma_probs(cover, p, gamma, K=K, threads=threads)
    k = sample_map(m, seed, threads=threads, stage=rng.STAGE_CHANGE)
    return Raster16((m.codes + k).astype(np.uint16), bit_depth=8), k, m
