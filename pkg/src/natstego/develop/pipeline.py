"""Run a :class:`DevelopPlan` on a cover: probabilities, payload and stego.

Supported plans are an optional ``downsample sub`` first, then at most one
modeled stage (``gamma``, ``downsample box``, ``downsample tent``, or
``demosaic`` with an optional ``colormatrix``), then an optional
``upsample`` and ``quantize8``. An empty plan is plain quantization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..raster_io import Raster16
from ..stego_core import ChangeProbMap, StegoParams, change_probs, payload_entropy, simulate_embedding
from .color import embed_color_mosaic
from .gamma import gamma_embed
from .plan import ColorMatrix, Demosaic, DevelopPlan, Downsample, Gamma, PlanError, Quantize8, Upsample
from .resample import downsample_box_embed, downsample_sub, downsample_tent_embed, upsample

__all__ = ["EmbedOutcome", "run_plan", "plan_payload", "plan_structure"]


@dataclass(eq=False)
class EmbedOutcome:
    stego: Raster16
    maps: list
    payload_bits: float
    bpp: float
    k: np.ndarray
    detail: object = None
    diagnostics: dict = field(default_factory=dict)


def plan_structure(plan: DevelopPlan):
    """Split a plan into ``(sub_factor, core_stages, up_factor)``."""
    stages = [s for s in plan.stages if not isinstance(s, Quantize8)]
    sub = None
    if stages and isinstance(stages[0], Downsample) and stages[0].kind == "sub":
        sub = stages.pop(0).factor
    up = None
    if stages and isinstance(stages[-1], Upsample):
        up = stages.pop().factor
    core = tuple(stages)
    if not core:
        return sub, core, up
    head = core[0]
    if len(core) == 1 and isinstance(head, (Gamma, Demosaic)):
        pass
    elif len(core) == 1 and isinstance(head, Downsample) and head.kind in ("box", "tent"):
        pass
    elif len(core) == 2 and isinstance(head, Demosaic) and isinstance(core[1], ColorMatrix):
        pass
    else:
        raise PlanError(f"unsupported stage combination: {[type(s).__name__ for s in core]}")
    if sub is not None and isinstance(head, Demosaic):
        raise PlanError("sub-sampling before demosaicing breaks the CFA layout")
    return sub, core, up


def run_plan(
    cover: Raster16,
    p: StegoParams,
    plan: DevelopPlan,
    seed: int,
    K: int | None = None,
    threads: int | None = 1,
) -> EmbedOutcome:
    """Develop ``cover`` with embedding according to ``plan``.

    Box down-sampling first crops the cover to a multiple of the factor
    (top-left anchored).
    """
    sub, core, up = plan_structure(plan)
    if sub is not None:
        cover = downsample_sub(cover, sub)
    detail = None
    head = core[0] if core else None

    if head is None or (isinstance(head, Gamma) and head.gamma == 1):
        m = change_probs(cover, p, K=K, threads=threads)
        stego, k = simulate_embedding(cover, m, seed, threads=threads)
        maps = [m]
    elif isinstance(head, Gamma):
        stego, k, m = gamma_embed(cover, p, head.gamma, seed, K=K, threads=threads)
        maps = [m]
    elif isinstance(head, Downsample) and head.kind == "box":
        c = head.factor
        hh, ww = cover.height // c * c, cover.width // c * c
        if (hh, ww) != (cover.height, cover.width):
            cover = Raster16(cover.samples[:hh, :ww], bit_depth=cover.bit_depth)
        stego, k, m = downsample_box_embed(cover, p, c, seed, K=K, threads=threads)
        maps = [m]
    elif isinstance(head, Downsample):
        detail = downsample_tent_embed(cover, p, head.factor, seed, K=K, threads=threads)
        stego, k, maps = detail.stego, detail.k, detail.lattice_maps
    else:
        matrix = core[1].matrix if len(core) == 2 else np.eye(3)
        detail = embed_color_mosaic(cover, p, matrix, seed, cfa=head.cfa, K=K, threads=threads)
        stego, k, maps = detail.stego, detail.k, [detail.probs]

    bits = float(sum(payload_entropy(m)[0] for m in maps))
    if up is not None:
        if len(maps) != 1:
            raise PlanError("up-sampling after tent down-sampling is not supported")
        if stego.channels != 1:
            raise PlanError("up-sampling is supported for single-channel output only")
        stego, m_up = upsample(stego, maps[0], up)
        maps = [m_up]
        k = np.repeat(np.repeat(k, up, axis=0), up, axis=1) * _carrier_mask(k.shape, up)
    n = stego.width * stego.height
    return EmbedOutcome(stego, maps, bits, bits / n if n else 0.0, k, detail)


def _carrier_mask(shape, c):
    mask = np.zeros((shape[0] * c, shape[1] * c), dtype=np.int64)
    mask[::c, ::c] = 1
    return mask


def plan_payload(
    cover: Raster16,
    p: StegoParams,
    plan: DevelopPlan,
    seed: int = 0,
    K: int | None = None,
    threads: int | None = 1,
) -> tuple[float, float]:
    """Payload ``(bits, bpp)`` of ``plan`` on ``cover``.

    Tent payloads are realized conditional entropies and depend on ``seed``.
    """
    out = run_plan(cover, p, plan, seed, K=K, threads=threads)
    return out.payload_bits, out.bpp
