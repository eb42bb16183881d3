"""Embedding-change probabilities, payload, costs and simulated embedding.

The stego signal added to a cover sample ``x`` (input scale) is
``N(0, a_dd * x + b_dd)``. After quantization with step ``delta`` the
change ``k`` of the 8-bit code follows the Gaussian mass of the
quantization cells around ``x``.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import cells, rng
from ._parallel import map_rows
from .raster_io import Raster16

__all__ = [
    "StegoParams",
    "ChangeProbMap",
    "CostMap",
    "StegoError",
    "stego_sigma2",
    "build_prob_map",
    "change_probs",
    "payload_entropy",
    "probs_to_costs",
    "change_cost",
    "simulate_embedding",
    "draw_latent",
    "latent_raster",
    "perturbation_params",
    "save_params",
    "load_params",
    "save_prob_map",
    "load_prob_map",
    "save_cost_map",
    "load_cost_map",
]

MAX_CODE = 255


class StegoError(ValueError):
    """Parameters or inputs that cannot produce a valid embedding."""


@dataclass(frozen=True)
class StegoParams:
    """Stego-signal model in sample units of the input image.

    ``a_dd`` and ``b_dd`` are the slope and intercept of the stego variance
    for an input of ``bit_depth_in`` bits (normalized values scaled by
    ``2**bit_depth_in - 1`` and its square). ``perturbation`` marks the
    intercept-free variant that perturbs rather than switches the source.
    """

    a_dd: float
    b_dd: float
    bit_depth_in: int = 16
    perturbation: bool = False
    wet_dark: bool = False

    def __post_init__(self):
        if self.bit_depth_in not in (8, 16):
            raise StegoError("bit_depth_in must be 8 or 16")
        if not (np.isfinite(self.a_dd) and np.isfinite(self.b_dd)):
            raise StegoError("non-finite stego parameters")
        if self.a_dd < 0 or self.b_dd < 0:
            raise StegoError("stego parameters must be non-negative")
        if self.perturbation and (self.b_dd != 0 or self.a_dd <= 0):
            raise StegoError("perturbation mode needs a_dd > 0 and b_dd == 0")

    @property
    def quant_step(self) -> int:
        return 1 << (self.bit_depth_in - 8)

    @property
    def input_max(self) -> int:
        return (1 << self.bit_depth_in) - 1

    def replace(self, **kw) -> "StegoParams":
        from dataclasses import replace

        return replace(self, **kw)


@dataclass(eq=False)
class ChangeProbMap:
    """Per-pixel distribution of the code change ``k`` in ``[-K, K]``.

    Besides the probabilities, the map keeps what is needed to sample from
    it: the cover code, the continuous center and spread of the stego
    sample, and the quantization step.
    """

    probs: np.ndarray
    wet: np.ndarray
    K: int
    codes: np.ndarray
    center: np.ndarray
    sigma: np.ndarray
    delta: float
    max_code: int = MAX_CODE
    diagnostics: dict = field(default_factory=dict)

    @property
    def height(self) -> int:
        return self.probs.shape[0]

    @property
    def width(self) -> int:
        return self.probs.shape[1]

    @property
    def support(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def check(self, tol: float = 1e-10) -> None:
        if np.any(self.probs < 0):
            raise StegoError("negative probability")
        err = np.abs(self.probs.sum(axis=-1) - 1.0).max(initial=0.0)
        if err > tol:
            raise StegoError(f"probabilities not normalized (max error {err:.3g})")
        if np.any(self.probs[self.wet][:, self.K] != 1.0):
            raise StegoError("wet pixel with non-zero change probability")


@dataclass(eq=False)
class CostMap:
    rho: np.ndarray
    wet: np.ndarray

    @property
    def height(self) -> int:
        return self.rho.shape[0]

    @property
    def width(self) -> int:
        return self.rho.shape[1]


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------


def stego_sigma2(x, p: StegoParams):
    """Stego-signal variance ``a_dd * x + b_dd`` at input-scale sample ``x``."""
    x = np.asarray(x, dtype=np.float64)
    v = p.a_dd * x + p.b_dd
    if np.any(v < 0):
        raise StegoError("negative stego variance; check the input scale")
    return v if v.ndim else float(v)


def build_prob_map(
    center,
    sigma2,
    codes,
    p: StegoParams,
    K: int | None = None,
    wet=None,
    delta: float | None = None,
    threads: int | None = 1,
) -> ChangeProbMap:
    """Assemble a :class:`ChangeProbMap` from per-pixel Gaussian models.

    Wet pixels are those coded 0 or 255, those at the image's lowest code
    when ``p.wet_dark``, zero-variance pixels, and any in ``wet``.
    """
    center = np.asarray(center, dtype=np.float64)
    sigma2 = np.asarray(sigma2, dtype=np.float64)
    codes = np.asarray(codes, dtype=np.int64)
    delta = float(p.quant_step if delta is None else delta)

    wet_mask = (codes <= 0) | (codes >= MAX_CODE)
    if p.wet_dark and codes.size:
        wet_mask |= codes == codes.min()
    if wet is not None:
        wet_mask |= np.asarray(wet, dtype=bool)
    zero_var = ~(sigma2 > 0)
    if p.perturbation and np.any(zero_var & ~wet_mask):
        raise StegoError("zero stego variance at a non-wet pixel in perturbation mode")
    wet_mask |= zero_var

    sigma = np.sqrt(np.where(wet_mask, 0.0, sigma2))
    if K is None:
        K = cells.safe_support(sigma.max(initial=0.0), delta, MAX_CODE)
    K = int(K)
    if K < 1:
        raise StegoError("support K must be >= 1")

    h, w = codes.shape
    probs = np.zeros((h, w, 2 * K + 1))

    def work(rs):
        live = ~wet_mask[rs]
        block = np.zeros((rs.stop - rs.start, w, 2 * K + 1))
        block[live] = cells.cell_probs(center[rs][live], sigma[rs][live], codes[rs][live], K, delta, MAX_CODE)
        block[~live, K] = 1.0
        return rs, block

    for rs, block in map_rows(work, h, threads):
        probs[rs] = block

    return ChangeProbMap(
        probs=probs,
        wet=wet_mask,
        K=K,
        codes=codes,
        center=center,
        sigma=sigma,
        delta=delta,
        diagnostics={"wet": int(wet_mask.sum())},
    )


def change_probs(cover: Raster16, p: StegoParams, K: int | None = None, threads: int | None = 1) -> ChangeProbMap:
    """Change probabilities for a cover developed by quantization alone."""
    if cover.channels != 1:
        raise StegoError("change_probs expects a single-channel cover")
    if cover.bit_depth != p.bit_depth_in:
        raise StegoError(f"cover is {cover.bit_depth}-bit but parameters expect {p.bit_depth_in}-bit input")
    x = cover.as_float()
    codes = cells.quantize(x, p.quant_step, MAX_CODE)
    return build_prob_map(x, stego_sigma2(x, p), codes, p, K=K, threads=threads)


def payload_entropy(m: ChangeProbMap) -> tuple[float, float]:
    """Total entropy in bits and bits per pixel (wet pixels count in the denominator)."""
    h = cells.entropy_bits(m.probs)
    bits = math.fsum(h.ravel().tolist())
    n = m.width * m.height
    return bits, (bits / n if n else 0.0)


def change_cost(p_change):
    """Cost ``ln(pt / (1 - pt))`` with ``pt = max(p, 1 - p)``."""
    p_change = np.asarray(p_change, dtype=np.float64)
    pt = np.maximum(p_change, 1.0 - p_change)
    with np.errstate(divide="ignore"):
        rho = np.log(pt) - np.log1p(-pt)
    return np.where(pt >= 1.0, np.inf, rho)


def probs_to_costs(m: ChangeProbMap) -> CostMap:
    """Binary (change vs no change) costs; wet pixels get ``inf``."""
    p_change = m.probs[..., : m.K].sum(axis=-1) + m.probs[..., m.K + 1 :].sum(axis=-1)
    rho = change_cost(p_change)
    rho = np.where(m.wet, np.inf, rho)
    return CostMap(rho=rho, wet=m.wet.copy())


def simulate_embedding(
    cover: Raster16,
    m: ChangeProbMap,
    seed: int,
    threads: int | None = 1,
    stage: int = rng.STAGE_CHANGE,
) -> tuple[Raster16, np.ndarray]:
    """Sample changes from ``m``; returns the 8-bit stego image and ``k``."""
    if (cover.height, cover.width) != (m.height, m.width):
        raise StegoError("probability map does not match the cover")
    k = sample_map(m, seed, threads=threads, stage=stage)
    stego = (m.codes + k).astype(np.uint16)
    return Raster16(stego, bit_depth=8), k


def sample_map(m: ChangeProbMap, seed: int, threads: int | None = 1, stage: int = rng.STAGE_CHANGE, rows=None, cols=None):
    """Draw ``k`` for every pixel of ``m`` from counter-based uniforms."""
    h, w = m.height, m.width
    if rows is None:
        rows, cols = np.indices((h, w))

    def work(rs):
        u = rng.uniforms(seed, stage, rows[rs], cols[rs])
        return cells.sample_changes(m.probs[rs], u)

    parts = map_rows(work, h, threads)
    return np.concatenate(parts, axis=0) if parts else np.zeros((0, w), dtype=np.int64)


def draw_latent(
    m: ChangeProbMap,
    k: np.ndarray,
    seed: int,
    threads: int | None = 1,
    stage: int = rng.STAGE_LATENT,
    rows=None,
    cols=None,
) -> np.ndarray:
    """Continuous stego samples consistent with the drawn changes.

    Each value is ``N(center, sigma^2)`` restricted to the cell of code
    ``codes + k``, so it quantizes back to the stego code. Wet pixels keep
    their center.
    """
    h, w = m.height, m.width
    if rows is None:
        rows, cols = np.indices((h, w))
    lo, hi = cells.cell_bounds(m.codes, k, m.K, m.delta, m.max_code)
    sigma = np.where(m.wet, 0.0, m.sigma)

    def work(rs):
        return cells.sample_truncated(m.center[rs], sigma[rs], lo[rs], hi[rs], seed, stage, rows[rs], cols[rs])

    parts = map_rows(work, h, threads)
    m.diagnostics["latent_fallback"] = sum(n for _, n in parts)
    return np.concatenate([v for v, _ in parts], axis=0)


def latent_raster(values: np.ndarray, bit_depth: int = 16) -> Raster16:
    """Round continuous samples to an integer raster, clipping to range."""
    top = (1 << bit_depth) - 1
    return Raster16(np.clip(np.rint(values), 0, top).astype(np.uint16), bit_depth=bit_depth)


def perturbation_params(a: float, bit_depth: int = 16, wet_dark: bool = False) -> StegoParams:
    """Intercept-free parameters from a normalized slope ``a``."""
    if not a > 0:
        raise StegoError("perturbation slope must be positive")
    scale = float((1 << bit_depth) - 1)
    return StegoParams(a_dd=a * scale, b_dd=0.0, bit_depth_in=bit_depth, perturbation=True, wet_dark=wet_dark)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def save_params(p: StegoParams, path) -> None:
    lines = [
        f"a_dd={p.a_dd:.17g}",
        f"b_dd={p.b_dd:.17g}",
        f"bit_depth={p.bit_depth_in}",
        f"perturbation={str(p.perturbation).lower()}",
        f"wet_dark={str(p.wet_dark).lower()}",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_bool(s: str) -> bool:
    s = s.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def load_params(path) -> StegoParams:
    from .noise_model import _read_kv

    kv = _read_kv(path)
    try:
        return StegoParams(
            a_dd=float(kv["a_dd"]),
            b_dd=float(kv["b_dd"]),
            bit_depth_in=int(kv.get("bit_depth", "16")),
            perturbation=_parse_bool(kv.get("perturbation", "false")),
            wet_dark=_parse_bool(kv.get("wet_dark", "false")),
        )
    except KeyError as exc:
        raise ValueError(f"missing key {exc} in parameter file") from None


# Binary interchange containers. All integers are little-endian uint32.
#   probability map: b"NSPROB01", height, width, K, 0,
#                    float64[h*w*(2K+1)] (row-major, k fastest),
#                    uint8[h*w] wet flags, uint16[h*w] cover codes
#   cost map:        b"NSCOST01", height, width, 0, 0,
#                    float64[h*w] costs (inf for wet), uint8[h*w] wet flags
_PROB_MAGIC = b"NSPROB01"
_COST_MAGIC = b"NSCOST01"
_HEAD = struct.Struct("<8s4I")


def save_prob_map(m: ChangeProbMap, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(_PROB_MAGIC, m.height, m.width, m.K, 0))
        fh.write(m.probs.astype("<f8").tobytes())
        fh.write(m.wet.astype(np.uint8).tobytes())
        fh.write(m.codes.astype("<u2").tobytes())


def _read_head(data: bytes, magic: bytes):
    if len(data) < _HEAD.size:
        raise ValueError("truncated container")
    mg, h, w, K, _ = _HEAD.unpack_from(data)
    if mg != magic:
        raise ValueError(f"bad magic {mg!r}")
    return h, w, K


def load_prob_map(path, delta: float = 256.0) -> ChangeProbMap:
    """Read a probability container; centers and spreads are not stored."""
    with open(path, "rb") as fh:
        data = fh.read()
    h, w, K = _read_head(data, _PROB_MAGIC)
    off = _HEAD.size
    n = h * w
    need = off + n * (2 * K + 1) * 8 + n + 2 * n
    if len(data) < need:
        raise ValueError("truncated container")
    probs = np.frombuffer(data, "<f8", n * (2 * K + 1), off).reshape(h, w, 2 * K + 1).astype(np.float64)
    off += n * (2 * K + 1) * 8
    wet = np.frombuffer(data, np.uint8, n, off).reshape(h, w).astype(bool)
    off += n
    codes = np.frombuffer(data, "<u2", n, off).reshape(h, w).astype(np.int64)
    nan = np.full((h, w), np.nan)
    return ChangeProbMap(probs, wet, K, codes, nan, nan.copy(), delta)


def save_cost_map(c: CostMap, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(_COST_MAGIC, c.height, c.width, 0, 0))
        fh.write(c.rho.astype("<f8").tobytes())
        fh.write(c.wet.astype(np.uint8).tobytes())


def load_cost_map(path) -> CostMap:
    with open(path, "rb") as fh:
        data = fh.read()
    h, w, _ = _read_head(data, _COST_MAGIC)
    n = h * w
    if len(data) < _HEAD.size + 9 * n:
        raise ValueError("truncated container")
    rho = np.frombuffer(data, "<f8", n, _HEAD.size).reshape(h, w).astype(np.float64)
    wet = np.frombuffer(data, np.uint8, n, _HEAD.size + 8 * n).reshape(h, w).astype(bool)
    return CostMap(rho, wet)
