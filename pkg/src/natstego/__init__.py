"""Natural steganography by cover-source switching.

A stego signal shaped like the extra sensor noise of a higher ISO setting
is synthesized and pushed through the developing pipeline, so the stego
image looks like a capture from the noisier source.
"""

from .noise_model import (
    BinStats,
    NoiseModel,
    NoiseModelError,
    bin_photosites,
    diff_model,
    estimate_noise_model,
    fit_noise_model,
    load_model,
    save_model,
)
from .raster_io import Raster16, RasterFormatError, TileSpec, read_raster, tile, untile, write_raster
from .stego_core import (
    ChangeProbMap,
    CostMap,
    StegoError,
    StegoParams,
    change_cost,
    change_probs,
    load_params,
    payload_entropy,
    perturbation_params,
    probs_to_costs,
    save_params,
    simulate_embedding,
)

__version__ = "0.1.0"
