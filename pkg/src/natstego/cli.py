"""Command-line front end: ``natstego <command> [options]``.

Exit status: 0 success, 2 bad arguments or plan, 3 I/O or file format,
4 model violation, 5 verification failure. Failures print a single line
``error: category=<name> message=<text>`` on stderr.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from ._parallel import ENV_THREADS, resolve_threads
from .develop.pipeline import plan_structure, run_plan
from .develop.plan import DevelopPlan, Downsample, PlanError, format_plan, parse_plan
from .noise_model import NoiseModelError, diff_model, estimate_noise_model, load_model, save_model
from .raster_io import RasterFormatError, TileSpec, read_raster, tile, write_raster
from .stats_eval import mimicry_check, payload_sweep, write_summary
from .stego_core import (
    StegoError,
    load_params,
    perturbation_params,
    probs_to_costs,
    save_cost_map,
    save_params,
    save_prob_map,
)

log = logging.getLogger("natstego")

EXIT_OK, EXIT_PARSE, EXIT_IO, EXIT_MODEL, EXIT_VERIFY = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, category: str, message: str, code: int):
        super().__init__(message)
        self.category = category
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("parse", message, EXIT_PARSE)


# ---------------------------------------------------------------------------
# Input helpers
# ---------------------------------------------------------------------------


def _load(kind: str, fn, path):
    try:
        return fn(path)
    except (OSError, RasterFormatError) as exc:
        raise CliError("io", f"{kind} {path}: {exc}", EXIT_IO) from exc
    except (NoiseModelError, StegoError) as exc:
        raise CliError("model", f"{kind} {path}: {exc}", EXIT_MODEL) from exc
    except ValueError as exc:
        raise CliError("io", f"{kind} {path}: {exc}", EXIT_IO) from exc


def _expand(patterns: list[str]) -> list[str]:
    paths = []
    for pat in patterns:
        hits = sorted(glob.glob(pat))
        if not hits:
            raise CliError("io", f"no files match {pat!r}", EXIT_IO)
        paths.extend(hits)
    return paths


def _plan(arg: str) -> DevelopPlan:
    """Recipe file if ``arg`` names an existing file, inline text otherwise."""
    if os.path.isfile(arg):
        try:
            text = Path(arg).read_text()
        except OSError as exc:
            raise CliError("io", f"plan {arg}: {exc}", EXIT_IO) from exc
    else:
        text = arg
    plan = parse_plan(text)
    plan_structure(plan)
    return plan


def _needs_seed(plan: DevelopPlan) -> bool:
    return any(isinstance(s, Downsample) and s.kind == "tent" for s in plan.stages)


def _lattice_path(path: str, i: int) -> str:
    stem, ext = os.path.splitext(path)
    return f"{stem}.lattice{i}{ext}"


def _print_kv(pairs: dict, stream=None) -> None:
    stream = stream or sys.stdout
    for k, v in pairs.items():
        if isinstance(v, float):
            v = f"{v:.12g}"
        print(f"{k}={v}", file=stream)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_estimate_noise(args) -> int:
    paths = _expand(args.stack)
    stack = [_load("raster", read_raster, p) for p in paths]
    model = estimate_noise_model(stack, args.delta, iso_label=args.iso, variance=args.variance)
    save_model(model, args.out)
    _print_kv({"frames": len(stack), "a": model.a, "b": model.b, "iso": model.iso_label})
    return EXIT_OK


def cmd_diff_model(args) -> int:
    if args.perturbation is not None:
        if args.model1 or args.model2:
            raise CliError("parse", "--perturbation excludes --model1/--model2", EXIT_PARSE)
        p = perturbation_params(args.perturbation, args.bit_depth, wet_dark=args.wet_dark)
    else:
        if not (args.model1 and args.model2):
            raise CliError("parse", "--model1 and --model2 are required", EXIT_PARSE)
        m1 = _load("model", load_model, args.model1)
        m2 = _load("model", load_model, args.model2)
        p = diff_model(m1, m2, args.bit_depth).replace(wet_dark=args.wet_dark)
    save_params(p, args.out)
    _print_kv({"a_dd": p.a_dd, "b_dd": p.b_dd, "bit_depth": p.bit_depth_in, "perturbation": int(p.perturbation)})
    return EXIT_OK


def cmd_embed(args) -> int:
    cover = _load("raster", read_raster, args.cover)
    p = _load("params", load_params, args.params)
    if args.wet_dark:
        p = p.replace(wet_dark=True)
    plan = _plan(args.plan)
    out = run_plan(cover, p, plan, args.seed, K=args.K, threads=args.threads)
    write_raster(out.stego, args.out)
    if args.out_probs:
        if len(out.maps) == 1:
            save_prob_map(out.maps[0], args.out_probs)
        else:
            for i, m in enumerate(out.maps):
                save_prob_map(m, _lattice_path(args.out_probs, i))
    if args.out_costs:
        if len(out.maps) == 1:
            save_cost_map(probs_to_costs(out.maps[0]), args.out_costs)
        else:
            for i, m in enumerate(out.maps):
                save_cost_map(probs_to_costs(m), _lattice_path(args.out_costs, i))
    _print_kv({
        "width": out.stego.width,
        "height": out.stego.height,
        "channels": out.stego.channels,
        "payload_bits": out.payload_bits,
        "bpp": out.bpp,
    })
    return EXIT_OK


def cmd_payload(args) -> int:
    cover = _load("raster", read_raster, args.cover)
    p = _load("params", load_params, args.params)
    plan = _plan(args.plan)
    if args.seed is None and _needs_seed(plan):
        raise CliError("parse", "tent plans are randomized; --seed is required", EXIT_PARSE)
    report = payload_sweep(cover, p, [plan], seed=args.seed or 0, threads=args.threads)[0]
    text = report.to_text()
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    covers = [_load("raster", read_raster, c) for c in _expand(args.cover)]
    p = _load("params", load_params, args.params)
    plans = [_plan(a) for a in args.plan]
    if args.seed is None and any(_needs_seed(pl) for pl in plans):
        raise CliError("parse", "tent plans are randomized; --seed is required", EXIT_PARSE)
    reports = payload_sweep(covers, p, plans, seed=args.seed or 0, threads=args.threads)
    for r in reports:
        sys.stdout.write(r.to_text())
        print()
    if args.json:
        write_summary(args.json, reports)
    return EXIT_OK


def _parse_tile_spec(text: str) -> TileSpec:
    # WxH:COLSxROWS
    try:
        size, grid = text.lower().split(":")
        tw, th = (int(v) for v in size.split("x"))
        gc, gr = (int(v) for v in grid.split("x"))
        return TileSpec(tw, th, gc, gr)
    except ValueError as exc:
        raise CliError("parse", f"bad tile spec {text!r} (expected WxH:COLSxROWS)", EXIT_PARSE) from exc


def cmd_tile(args) -> int:
    spec = _parse_tile_spec(args.spec)
    r = _load("raster", read_raster, args.input)
    try:
        tiles = tile(r, spec)
    except ValueError as exc:
        raise CliError("parse", str(exc), EXIT_PARSE) from exc
    os.makedirs(args.out_dir, exist_ok=True)
    stem = Path(args.input).stem
    ext = ".ppm" if r.channels == 3 else ".pgm"
    for i, t in enumerate(tiles):
        row, col = divmod(i, spec.grid_cols)
        write_raster(t, os.path.join(args.out_dir, f"{stem}_r{row:02d}_c{col:02d}{ext}"))
    _print_kv({"tiles": len(tiles)})
    return EXIT_OK


def cmd_mimicry(args) -> int:
    covers = [_load("raster", read_raster, p) for p in _expand(args.cover_stack)]
    stegos = [_load("raster", read_raster, p) for p in _expand(args.stego_stack)]
    target = _load("model", load_model, args.target)
    try:
        rep = mimicry_check(covers, stegos, target, tol=args.tol, tol_b=args.tol_b, delta=args.delta)
    except ValueError as exc:
        if isinstance(exc, NoiseModelError):
            raise
        raise CliError("parse", str(exc), EXIT_PARSE) from exc
    sys.stdout.write(rep.to_text())
    if args.json:
        write_summary(args.json, [rep])
    if not rep.passed:
        raise CliError("verification", f"stego model differs from target (rel_err_a={rep.relative_errors[0]:.4g}, "
                       f"rel_err_b={rep.relative_errors[1]:.4g})", EXIT_VERIFY)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default: ${ENV_THREADS} or 1); outputs do not depend on it")
    common.add_argument("--print-config", action="store_true", help="print the resolved configuration and exit")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = _Parser(prog="natstego", description="Natural steganography toolkit.")
    ap.add_argument("--version", action="version", version=f"natstego {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("estimate-noise", parents=[common], help="fit a noise model to flat-field captures")
    s.add_argument("--stack", nargs="+", required=True, help="glob(s) of registered captures")
    s.add_argument("--delta", type=float, default=5e-5, help="bin width on the normalized scale")
    s.add_argument("--iso", default="", help="label stored in the model file")
    s.add_argument("--variance", choices=("pooled", "bin"), default="pooled")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_estimate_noise)

    s = sub.add_parser("diff-model", parents=[common], help="stego parameters from two noise models")
    s.add_argument("--model1")
    s.add_argument("--model2")
    s.add_argument("--perturbation", type=float, metavar="A",
                   help="cover-source perturbation with normalized slope A (no second model)")
    s.add_argument("--bit-depth", type=int, choices=(8, 16), default=16)
    s.add_argument("--wet-dark", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_diff_model)

    s = sub.add_parser("embed", parents=[common], help="simulate embedding through a developing plan")
    s.add_argument("--cover", required=True)
    s.add_argument("--params", required=True)
    s.add_argument("--plan", default="quantize8", help="recipe file or inline ';'-separated stages")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--K", type=int, default=None, help="change support (default: from the largest sigma)")
    s.add_argument("--wet-dark", action="store_true")
    s.add_argument("--out", required=True)
    s.add_argument("--out-probs")
    s.add_argument("--out-costs")
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("payload", parents=[common], help="embedding rate of a plan on one cover")
    s.add_argument("--cover", required=True)
    s.add_argument("--params", required=True)
    s.add_argument("--plan", default="quantize8")
    s.add_argument("--seed", type=int, default=None, help="required for tent plans")
    s.add_argument("--out")
    s.set_defaults(func=cmd_payload)

    s = sub.add_parser("sweep", parents=[common], help="embedding rates of several plans")
    s.add_argument("--cover", nargs="+", required=True)
    s.add_argument("--params", required=True)
    s.add_argument("--plan", action="append", required=True, help="repeat for each plan")
    s.add_argument("--seed", type=int, default=None, help="required for tent plans")
    s.add_argument("--json")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("tile", parents=[common], help="crop a capture into a grid of tiles")
    s.add_argument("--input", required=True)
    s.add_argument("--spec", required=True, help="WxH:COLSxROWS, e.g. 512x512:6x10")
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_tile)

    s = sub.add_parser("mimicry", parents=[common], help="check a stego stack against a target model")
    s.add_argument("--cover-stack", nargs="+", required=True)
    s.add_argument("--stego-stack", nargs="+", required=True)
    s.add_argument("--target", required=True)
    s.add_argument("--tol", type=float, default=0.03)
    s.add_argument("--tol-b", type=float, default=None)
    s.add_argument("--delta", type=float, default=5e-5)
    s.add_argument("--json")
    s.set_defaults(func=cmd_mimicry)
    return ap


def resolved_config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("func", "print_config", "verbose")}
    cfg["threads"] = resolve_threads(args.threads)
    if isinstance(cfg.get("plan"), str):
        cfg["plan"] = format_plan(_plan(cfg["plan"])).strip().replace("\n", "; ")
    elif isinstance(cfg.get("plan"), list):
        cfg["plan"] = [format_plan(_plan(a)).strip().replace("\n", "; ") for a in cfg["plan"]]
    return cfg


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
        if args.print_config:
            print(json.dumps(resolved_config(args), indent=2, sort_keys=True))
            return EXIT_OK
        return args.func(args)
    except CliError as exc:
        err = exc
    except PlanError as exc:
        err = CliError("parse", str(exc), EXIT_PARSE)
    except (NoiseModelError, StegoError) as exc:
        err = CliError("model", str(exc), EXIT_MODEL)
    except OSError as exc:
        err = CliError("io", str(exc), EXIT_IO)
    msg = " ".join(str(err).split())
    print(f"error: category={err.category} message={msg}", file=sys.stderr)
    return err.code


if __name__ == "__main__":
    sys.exit(main())
