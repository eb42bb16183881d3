"""Stego-signal propagation through developing stages."""

from .color import ColorEmbedding, decode_color_payload, demosaic_bilinear, embed_color_mosaic
from .gamma import gamma_curve, gamma_embed, gamma_probs, gamma_sigma2, gamma_slope
from .pipeline import EmbedOutcome, plan_payload, run_plan
from .plan import (
    ColorMatrix,
    Demosaic,
    DevelopPlan,
    Downsample,
    Gamma,
    PlanError,
    Quantize8,
    Upsample,
    format_plan,
    parse_plan,
    read_plan,
)
from .resample import (
    TentEmbedding,
    downsample_box_embed,
    downsample_box_probs,
    downsample_sub,
    downsample_tent_embed,
    tent_footprint_covariance,
    tent_kernel,
    upsample,
    upsample_raster,
)

__all__ = [
    "ColorEmbedding",
    "ColorMatrix",
    "Demosaic",
    "DevelopPlan",
    "Downsample",
    "EmbedOutcome",
    "Gamma",
    "PlanError",
    "Quantize8",
    "TentEmbedding",
    "Upsample",
    "decode_color_payload",
    "demosaic_bilinear",
    "downsample_box_embed",
    "downsample_box_probs",
    "downsample_sub",
    "downsample_tent_embed",
    "embed_color_mosaic",
    "format_plan",
    "gamma_curve",
    "gamma_embed",
    "gamma_probs",
    "gamma_sigma2",
    "gamma_slope",
    "parse_plan",
    "plan_payload",
    "read_plan",
    "run_plan",
    "tent_footprint_covariance",
    "tent_kernel",
    "upsample",
    "upsample_raster",
]
