"""Heteroscedastic sensor-noise model ``var = a * mu + b`` and its estimation.

Intensities are normalized to [0, 1] by the sensor full scale. The dark
signal variance, quantization noise and spatial non-uniformities are folded
into the intercept ``b``; only the linear form is modeled.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .raster_io import Raster16

__all__ = [
    "NoiseModel",
    "BinStats",
    "NoiseModelError",
    "bin_photosites",
    "fit_noise_model",
    "diff_model",
    "estimate_noise_model",
    "save_model",
    "load_model",
]


class NoiseModelError(ValueError):
    """Estimation failure or a model violating its positivity constraints."""


@dataclass(frozen=True)
class NoiseModel:
    a: float
    b: float
    iso_label: str = ""

    def __post_init__(self):
        if not np.isfinite(self.a) or not np.isfinite(self.b):
            raise NoiseModelError("non-finite model coefficients")
        if self.a <= 0:
            raise NoiseModelError(f"slope must be positive, got a={self.a!r}")
        if self.b < 0:
            raise NoiseModelError(f"intercept must be non-negative, got b={self.b!r}")

    def variance(self, mu):
        """Noise variance at normalized intensity ``mu``."""
        return self.a * np.asarray(mu, dtype=np.float64) + self.b


@dataclass(frozen=True)
class BinStats:
    bin_index: int
    mean: float
    variance: float
    population: int


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _as_stack(stack: Sequence[Raster16]) -> tuple[np.ndarray, int]:
    if len(stack) < 2:
        raise NoiseModelError("need at least 2 frames")
    first = stack[0]
    for r in stack:
        if r.channels != 1:
            raise NoiseModelError("noise estimation needs single-channel frames")
        if r.shape != first.shape:
            raise NoiseModelError("frames have mismatched dimensions")
        if r.bit_depth != first.bit_depth:
            raise NoiseModelError("frames have mismatched bit depths")
    return np.stack([r.samples for r in stack]).astype(np.float64), first.maxval


def bin_photosites(
    stack: Sequence[Raster16], delta: float, variance: str = "pooled"
) -> list[BinStats]:
    """Group photo-sites by their across-stack mean and measure each group.

    Each site is normalized by the full-scale value, then assigned to bin
    ``round(mean / delta)`` (half away from zero). Sites that touch 0 or full
    scale in any frame are dropped.

    ``variance="pooled"`` (default) pools squared deviations of every sample
    from its own site mean, with ``N - 1`` degrees of freedom per site. This is
    unbiased for the noise variance even though sites are selected by their
    sample mean. ``variance="bin"`` uses the plain unbiased variance of all
    samples in the bin about the bin mean, which underestimates the noise
    variance by a factor ``(N - 1) / N`` when ``delta`` is small.
    """
    if not delta > 0:
        raise NoiseModelError("delta must be positive")
    if variance not in ("pooled", "bin"):
        raise ValueError(f"unknown variance estimator {variance!r}")
    frames, ymax = _as_stack(stack)
    n = frames.shape[0]
    frames = frames.reshape(n, -1)

    saturated = np.any((frames == 0) | (frames == ymax), axis=0)
    y = frames[:, ~saturated] / ymax
    if y.shape[1] == 0:
        return []
    eta = y.mean(axis=0)
    idx = _round_half_away(eta / delta).astype(np.int64)
    labels, inverse = np.unique(idx, return_inverse=True)
    nb = labels.size

    sites = np.bincount(inverse, minlength=nb)
    population = sites * n
    mean = np.bincount(inverse, weights=eta, minlength=nb) / sites
    if variance == "pooled":
        ss = np.bincount(inverse, weights=((y - eta) ** 2).sum(axis=0), minlength=nb)
        dof = sites * (n - 1)
    else:
        ss = np.bincount(inverse, weights=((y - mean[inverse]) ** 2).sum(axis=0), minlength=nb)
        dof = population - 1

    out = []
    for lab, m, s, d, pop in zip(labels, mean, ss, dof, population):
        if pop < 2 or d < 1:
            continue
        out.append(BinStats(int(lab), float(m), float(s / d), int(pop)))
    return out


def fit_noise_model(bins: Sequence[BinStats], iso_label: str = "") -> NoiseModel:
    """Population-weighted least squares of bin variance on bin mean."""
    usable = [b for b in bins if b.population >= 2]
    if len(usable) < 2:
        raise NoiseModelError("fewer than 2 usable bins")
    mu = np.array([b.mean for b in usable])
    var = np.array([b.variance for b in usable])
    w = np.array([b.population for b in usable], dtype=np.float64)

    sw = w.sum()
    mu_bar = (w * mu).sum() / sw
    var_bar = (w * var).sum() / sw
    sxx = (w * (mu - mu_bar) ** 2).sum()
    if sxx <= 0 or np.ptp(mu) == 0:
        raise NoiseModelError("all bin means are equal; slope is undetermined")
    a = (w * (mu - mu_bar) * (var - var_bar)).sum() / sxx
    b = var_bar - a * mu_bar
    if a <= 0 or b < 0:
        raise NoiseModelError(f"fitted model violates positivity: a={a:.6g}, b={b:.6g}")
    return NoiseModel(float(a), float(b), iso_label)


def estimate_noise_model(
    stack: Sequence[Raster16], delta: float = 5e-5, iso_label: str = "", variance: str = "pooled"
) -> NoiseModel:
    return fit_noise_model(bin_photosites(stack, delta, variance=variance), iso_label)


def diff_model(m1: NoiseModel, m2: NoiseModel, bit_depth: int = 16):
    """Stego-signal parameters that move a capture from ``m1`` to ``m2``.

    The normalized difference ``(a2 - a1, b2 - b1)`` is rescaled to sample
    units of a ``bit_depth`` image: slope by ``2**bit_depth - 1`` and
    intercept by its square.
    """
    from .stego_core import StegoParams

    if bit_depth not in (8, 16):
        raise ValueError("bit_depth must be 8 or 16")
    da = m2.a - m1.a
    db = m2.b - m1.b
    if da <= 0 or db < 0:
        raise NoiseModelError(
            "target model must be noisier than the source model "
            f"(a2 - a1 = {da:.6g}, b2 - b1 = {db:.6g})"
        )
    scale = float((1 << bit_depth) - 1)
    return StegoParams(a_dd=da * scale, b_dd=db * scale * scale, bit_depth_in=bit_depth)


# ---------------------------------------------------------------------------
# Text serialization
# ---------------------------------------------------------------------------


def save_model(m: NoiseModel, path) -> None:
    text = f"a={m.a:.17g}\nb={m.b:.17g}\niso={m.iso_label}\n"
    with open(path, "w") as fh:
        fh.write(text)


def _read_kv(path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{os.fspath(path)}: malformed line {line!r}")
            out[key.strip()] = value.strip()
    return out


def load_model(path) -> NoiseModel:
    kv = _read_kv(path)
    try:
        return NoiseModel(float(kv["a"]), float(kv["b"]), kv.get("iso", ""))
    except KeyError as exc:
        raise ValueError(f"{os.fspath(path)}: missing key {exc}") from None
