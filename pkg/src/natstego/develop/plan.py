"""Developing plans and their line-oriented text recipe.

Recipe grammar, one stage per line (or ``;``-separated inline)::

    gamma 2.2
    demosaic bilinear RGGB
    colormatrix c11 c12 c13 c21 c22 c23 c31 c32 c33
    downsample sub|box|tent 2
    upsample 2
    quantize8

Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

__all__ = [
    "Gamma",
    "Demosaic",
    "ColorMatrix",
    "Downsample",
    "Upsample",
    "Quantize8",
    "DevelopPlan",
    "PlanError",
    "parse_plan",
    "format_plan",
    "read_plan",
]

CFA_PATTERNS = ("RGGB", "BGGR", "GRBG", "GBRG")


class PlanError(ValueError):
    """Invalid or unsupported developing plan."""


@dataclass(frozen=True)
class Gamma:
    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise PlanError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class Demosaic:
    kind: str = "bilinear"
    cfa: str = "RGGB"

    def __post_init__(self):
        if self.kind != "bilinear":
            raise PlanError(f"unsupported demosaicing {self.kind!r}; only bilinear")
        if self.cfa not in CFA_PATTERNS:
            raise PlanError(f"unknown CFA pattern {self.cfa!r}")


@dataclass(frozen=True)
class ColorMatrix:
    matrix: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        m = tuple(tuple(float(v) for v in row) for row in self.matrix)
        if len(m) != 3 or any(len(r) != 3 for r in m):
            raise PlanError("color matrix must be 3x3")
        if not all(math.isfinite(v) for r in m for v in r):
            raise PlanError("color matrix entries must be finite")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class Downsample:
    kind: str
    factor: int

    def __post_init__(self):
        if self.kind not in ("sub", "box", "tent"):
            raise PlanError(f"unknown downsampling kind {self.kind!r}")
        if int(self.factor) != self.factor or self.factor < 1:
            raise PlanError("downsampling factor must be a positive integer")


@dataclass(frozen=True)
class Upsample:
    factor: int

    def __post_init__(self):
        if int(self.factor) != self.factor or self.factor < 1:
            raise PlanError("upsampling factor must be a positive integer")


@dataclass(frozen=True)
class Quantize8:
    pass


Stage = Union[Gamma, Demosaic, ColorMatrix, Downsample, Upsample, Quantize8]


@dataclass(frozen=True)
class DevelopPlan:
    stages: tuple = ()

    def __post_init__(self):
        stages = tuple(self.stages)
        object.__setattr__(self, "stages", stages)
        q = [i for i, s in enumerate(stages) if isinstance(s, Quantize8)]
        if len(q) > 1:
            raise PlanError("at most one quantize8 stage")
        if q and q[0] != len(stages) - 1:
            raise PlanError("quantize8 must be the last stage")

    def __str__(self):
        return format_plan(self)


def _parse_line(line: str) -> Stage:
    words = line.split()
    op, args = words[0].lower(), words[1:]
    try:
        if op == "gamma" and len(args) == 1:
            return Gamma(float(args[0]))
        if op == "demosaic" and len(args) in (1, 2):
            return Demosaic(args[0].lower(), args[1].upper() if len(args) == 2 else "RGGB")
        if op == "colormatrix" and len(args) == 9:
            v = [float(a) for a in args]
            return ColorMatrix((tuple(v[0:3]), tuple(v[3:6]), tuple(v[6:9])))
        if op == "downsample" and len(args) == 2:
            return Downsample(args[0].lower(), int(args[1]))
        if op == "upsample" and len(args) == 1:
            return Upsample(int(args[0]))
        if op == "quantize8" and not args:
            return Quantize8()
    except ValueError as exc:
        if isinstance(exc, PlanError):
            raise
        raise PlanError(f"bad arguments in stage {line!r}") from exc
    raise PlanError(f"unrecognized stage {line!r}")


def parse_plan(text: str) -> DevelopPlan:
    """Parse a recipe; inline ``;``-separated text is accepted too."""
    stages = []
    for raw in text.replace(";", "\n").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            stages.append(_parse_line(line))
    return DevelopPlan(tuple(stages))


def read_plan(path) -> DevelopPlan:
    with open(path) as fh:
        return parse_plan(fh.read())


def _fmt(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def format_plan(plan: DevelopPlan) -> str:
    lines = []
    for s in plan.stages:
        if isinstance(s, Gamma):
            lines.append(f"gamma {_fmt(s.gamma)}")
        elif isinstance(s, Demosaic):
            lines.append(f"demosaic {s.kind} {s.cfa}")
        elif isinstance(s, ColorMatrix):
            lines.append("colormatrix " + " ".join(_fmt(v) for r in s.matrix for v in r))
        elif isinstance(s, Downsample):
            lines.append(f"downsample {s.kind} {s.factor}")
        elif isinstance(s, Upsample):
            lines.append(f"upsample {s.factor}")
        elif isinstance(s, Quantize8):
            lines.append("quantize8")
    return "\n".join(lines) + ("\n" if lines else "")
