"""Statistical checks that stego output matches the target sensor model.

These stand in for feature-based steganalysis: rather than training a
detector, the noise model is re-estimated on stego stacks and compared with
the source the embedding is meant to imitate.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .develop.pipeline import plan_payload
from .develop.plan import DevelopPlan, format_plan
from .noise_model import NoiseModel, NoiseModelError, bin_photosites, estimate_noise_model, fit_noise_model
from .raster_io import Raster16
from .stego_core import StegoParams, change_probs, draw_latent, latent_raster, sample_map

log = logging.getLogger(__name__)

__all__ = [
    "MimicryReport",
    "PayloadReport",
    "synth_flat_stack",
    "gradient_field",
    "embed_stack",
    "naive_noise_stack",
    "mimicry_check",
    "payload_sweep",
    "k_histogram_test",
    "write_summary",
]


@dataclass
class MimicryReport:
    recovered_model: NoiseModel
    target_model: NoiseModel
    relative_errors: tuple[float, float]
    bins_used: int
    verdict: str
    cover_model: NoiseModel | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_text(self) -> str:
        r, t = self.recovered_model, self.target_model
        lines = [
            f"recovered_a={r.a:.12g}",
            f"recovered_b={r.b:.12g}",
            f"target_a={t.a:.12g}",
            f"target_b={t.b:.12g}",
            f"rel_err_a={self.relative_errors[0]:.6g}",
            f"rel_err_b={self.relative_errors[1]:.6g}",
            f"bins_used={self.bins_used}",
            f"verdict={self.verdict}",
        ]
        return "\n".join(lines) + "\n"


@dataclass
class PayloadReport:
    plan: str
    rates: list
    mean: float
    min: float
    max: float
    histogram: list = field(default_factory=list)
    bin_edges: list = field(default_factory=list)

    @classmethod
    def from_rates(cls, plan: str, rates: Sequence[float], bins: int = 10) -> "PayloadReport":
        r = np.asarray(rates, dtype=np.float64)
        hist, edges = np.histogram(r, bins=bins)
        return cls(plan, r.tolist(), float(r.mean()), float(r.min()), float(r.max()), hist.tolist(), edges.tolist())

    def to_text(self) -> str:
        plan = self.plan.strip().replace("\n", "; ")
        lines = [f"plan={plan}", f"images={len(self.rates)}", f"mean_bpp={self.mean:.6f}",
                 f"min_bpp={self.min:.6f}", f"max_bpp={self.max:.6f}"]
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Synthetic captures
# ---------------------------------------------------------------------------


def gradient_field(height: int, width: int, lo: float = 0.02, hi: float = 0.98, bit_depth: int = 16) -> np.ndarray:
    """Horizontal ramp of expected values, a stand-in for a printed gradient target."""
    ymax = (1 << bit_depth) - 1
    row = np.linspace(lo, hi, width) * ymax
    return np.broadcast_to(row, (height, width)).copy()


def synth_flat_stack(
    mu_field,
    model,
    n: int,
    seed: int,
    shape: tuple[int, int] | None = None,
    bit_depth: int = 16,
    return_clamped: bool = False,
):
    """Frames ``round(mu + N(0, (a * mu / ymax + b) * ymax**2))``.

    ``mu_field`` is an array or raster of expected values in sample units, or
    a scalar together with ``shape``. ``model`` is a :class:`NoiseModel` or a
    plain ``(a, b)`` pair, which may be zero. Samples outside the range are
    clipped and counted.
    """
    if n < 2:
        raise ValueError("need at least 2 frames")
    ymax = float((1 << bit_depth) - 1)
    if isinstance(mu_field, Raster16):
        mu = mu_field.as_float()
    elif np.ndim(mu_field) == 0:
        if shape is None:
            raise ValueError("shape required for a constant field")
        mu = np.full(shape, float(mu_field))
    else:
        mu = np.asarray(mu_field, dtype=np.float64)
    a, b = (model.a, model.b) if isinstance(model, NoiseModel) else (float(model[0]), float(model[1]))
    var = (a * mu / ymax + b) * ymax * ymax
    if np.any(var < 0):
        raise NoiseModelError("model yields negative variance")
    sd = np.sqrt(var)
    gen = np.random.default_rng(seed)
    frames, clamped = [], 0
    for _ in range(n):
        y = np.rint(mu + sd * gen.standard_normal(mu.shape))
        out = (y < 0) | (y > ymax)
        clamped += int(out.sum())
        frames.append(Raster16(np.clip(y, 0, ymax).astype(np.uint16), bit_depth=bit_depth))
    if clamped:
        log.info("synth_flat_stack: %d samples clipped", clamped)
    return (frames, clamped) if return_clamped else frames


def embed_stack(
    covers: Sequence[Raster16], p: StegoParams, seed: int, threads: int | None = 1
) -> tuple[list[Raster16], list[Raster16]]:
    """Embed each frame with its own seed; returns (latent 16-bit, 8-bit) stacks.

    The latent stack holds the continuous stego samples drawn inside the
    selected quantization cells, rounded to the input bit depth.
    """
    latent, stego8 = [], []
    for i, cov in enumerate(covers):
        s = (int(seed) + 0x9E3779B97F4A7C15 * (i + 1)) & 0xFFFFFFFFFFFFFFFF
        m = change_probs(cov, p, threads=threads)
        k = sample_map(m, s, threads=threads)
        v = draw_latent(m, k, s, threads=threads)
        latent.append(latent_raster(v, cov.bit_depth))
        stego8.append(Raster16((m.codes + k).astype(np.uint16), bit_depth=8))
    return latent, stego8


def naive_noise_stack(covers: Sequence[Raster16], variance: float, seed: int) -> list[Raster16]:
    """Control: add constant-variance Gaussian noise regardless of intensity."""
    gen = np.random.default_rng(seed)
    out = []
    for cov in covers:
        y = cov.as_float() + np.sqrt(variance) * gen.standard_normal(cov.shape)
        out.append(latent_raster(y, cov.bit_depth))
    return out


def mimicry_check(
    cover_stack: Sequence[Raster16],
    stego_stack: Sequence[Raster16],
    target: NoiseModel,
    tol: float = 0.03,
    tol_b: float | None = None,
    delta: float = 5e-5,
) -> MimicryReport:
    """Estimate the noise model of ``stego_stack`` and compare it with ``target``."""
    if len(cover_stack) != len(stego_stack):
        raise ValueError("stacks differ in length")
    if any(c.shape != s.shape for c, s in zip(cover_stack, stego_stack)):
        raise ValueError("stacks are not registered (shape mismatch)")
    tol_b = tol if tol_b is None else tol_b
    bins = bin_photosites(stego_stack, delta)
    recovered = fit_noise_model(bins, iso_label="stego")
    try:
        cover_model = estimate_noise_model(cover_stack, delta, iso_label="cover")
    except NoiseModelError:
        cover_model = None
    ea = abs(recovered.a - target.a) / target.a
    eb = abs(recovered.b - target.b) / target.b if target.b > 0 else abs(recovered.b)
    verdict = "pass" if (ea <= tol and eb <= tol_b) else "fail"
    return MimicryReport(recovered, target, (ea, eb), len(bins), verdict, cover_model)


# ---------------------------------------------------------------------------
# Payload analytics
# ---------------------------------------------------------------------------


def payload_sweep(
    cover,
    p: StegoParams,
    plans: Sequence[DevelopPlan],
    seed: int = 0,
    threads: int | None = 1,
) -> list[PayloadReport]:
    """Embedding rate of every plan on one cover or a list of covers."""
    covers = [cover] if isinstance(cover, Raster16) else list(cover)
    reports = []
    for plan in plans:
        rates = [plan_payload(c, p, plan, seed=seed, threads=threads)[1] for c in covers]
        reports.append(PayloadReport.from_rates(format_plan(plan), rates))
    return reports


def write_summary(path, reports: Sequence, extra: dict | None = None) -> None:
    """Machine-readable JSON summary of reports."""

    def conv(r):
        if isinstance(r, MimicryReport):
            d = asdict(r)
            d["passed"] = r.passed
            return d
        return asdict(r)

    doc = {"reports": [conv(r) for r in reports]}
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=float)


def k_histogram_test(k: np.ndarray, probs: np.ndarray, alpha: float = 0.01, min_expected: float = 5.0):
    """Chi-square goodness of fit of drawn changes against one distribution.

    Cells with small expected counts are pooled into their neighbors.
    Returns ``(statistic, p_value, passed)``.
    """
    K = (len(probs) - 1) // 2
    n = k.size
    observed = np.bincount(np.asarray(k).ravel() + K, minlength=2 * K + 1).astype(float)
    expected = np.asarray(probs, dtype=float) * n
    obs_p, exp_p = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_p.append(acc_o)
            exp_p.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_p:
            obs_p[-1] += acc_o
            exp_p[-1] += acc_e
        else:
            obs_p.append(acc_o)
            exp_p.append(acc_e)
    if len(exp_p) < 2:
        return 0.0, 1.0, True
    obs_p, exp_p = np.array(obs_p), np.array(exp_p)
    exp_p *= obs_p.sum() / exp_p.sum()
    stat, pval = stats.chisquare(obs_p, exp_p)
    return float(stat), float(pval), bool(pval > alpha)
