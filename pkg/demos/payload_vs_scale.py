"""How developing steps change the embedding rate.

The stego signal is defined on photo-sites. Developing operations that mix
photo-sites (box or tent down-sampling) shrink its variance at the output,
so less payload fits per developed pixel. Sub-sampling only drops pixels
and leaves the per-pixel rate alone.
"""

import numpy as np

from natstego import Raster16, StegoParams
from natstego.develop import downsample_tent_embed, parse_plan
from natstego.stats_eval import payload_sweep

# normalized (a', b') = (2.1e-5, 8.4e-7) scaled to 16-bit samples
p = StegoParams(2.1e-5 * 65535, 8.4e-7 * 65535**2)
cover = Raster16(np.random.default_rng(0).integers(0, 65536, (512, 512)).astype(np.uint16))

# %% Embedding rate against the scaling factor
for kind in ("sub", "box", "tent"):
    plans = [parse_plan(f"downsample {kind} {c}; quantize8") for c in range(1, 6)]
    rates = [r.mean for r in payload_sweep(cover, p, plans, seed=0)]
    print(f"{kind:>4}: " + "  ".join(f"c={c}: {r:.3f}" for c, r in enumerate(rates, 1)))

# %% Tent down-sampling embeds four interleaved lattices one after another.
# Later lattices see more of their photo-sites already fixed, so they carry less.
e = downsample_tent_embed(cover, p, 2, seed=0)
for name, rate in zip(("E1 (even, even)", "E2 (even, odd)", "E3 (odd, even)", "E4 (odd, odd)"), e.lattice_bpp()):
    print(f"  {name}: {rate:.3f} bpp")
print(f"  total {e.bpp:.3f} bpp, {e.diagnostics['border']} border pixels kept wet")
