"""PGM/PPM reading and writing, and grid tiling of large captures."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Raster16",
    "TileSpec",
    "RasterFormatError",
    "read_raster",
    "write_raster",
    "tile",
    "untile",
]


class RasterFormatError(ValueError):
    """Malformed or unsupported PNM content."""


@dataclass(frozen=True, eq=False)
class Raster16:
    """A 1- or 3-channel integer image with 8- or 16-bit content.

    ``samples`` has shape ``(height, width)`` or ``(height, width, 3)`` and
    dtype uint16. 8-bit content is stored widened.
    """

    samples: np.ndarray
    bit_depth: int = 16

    def __post_init__(self):
        s = np.asarray(self.samples)
        if self.bit_depth not in (8, 16):
            raise ValueError(f"bit_depth must be 8 or 16, got {self.bit_depth}")
        if s.ndim == 3 and s.shape[2] == 1:
            s = s[:, :, 0]
        if s.ndim not in (2, 3) or (s.ndim == 3 and s.shape[2] != 3):
            raise ValueError(f"samples must be (h, w) or (h, w, 3), got {s.shape}")
        if s.dtype != np.uint16:
            if np.issubdtype(s.dtype, np.integer) or s.dtype == bool:
                if s.size and (s.min() < 0 or s.max() > 0xFFFF):
                    raise ValueError("samples outside [0, 65535]")
            else:
                if s.size and not np.all(s == np.round(s)):
                    raise ValueError("samples must be integers")
            s = s.astype(np.uint16)
        if s.size and int(s.max()) > self.maxval:
            raise ValueError(f"sample {int(s.max())} exceeds maxval {self.maxval}")
        s = np.ascontiguousarray(s)
        s.flags.writeable = False
        object.__setattr__(self, "samples", s)

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.samples.ndim == 2 else 3

    @property
    def maxval(self) -> int:
        return (1 << self.bit_depth) - 1

    @property
    def shape(self) -> tuple[int, ...]:
        return self.samples.shape

    def as_float(self) -> np.ndarray:
        return self.samples.astype(np.float64)

    def __eq__(self, other):
        if not isinstance(other, Raster16):
            return NotImplemented
        return (
            self.bit_depth == other.bit_depth
            and self.samples.shape == other.samples.shape
            and np.array_equal(self.samples, other.samples)
        )

    def __repr__(self):
        return (
            f"Raster16({self.width}x{self.height}, channels={self.channels}, "
            f"bit_depth={self.bit_depth})"
        )


@dataclass(frozen=True)
class TileSpec:
    tile_w: int
    tile_h: int
    grid_cols: int
    grid_rows: int

    def __post_init__(self):
        for name in ("tile_w", "tile_h", "grid_cols", "grid_rows"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


# ---------------------------------------------------------------------------
# PNM codec
# ---------------------------------------------------------------------------

_MAGICS = {b"P2": (1, False), b"P3": (3, False), b"P5": (1, True), b"P6": (3, True)}


def _header_tokens(data: bytes):
    """Yield (token, end_offset) pairs from a PNM header, skipping comments."""
    pos, n = 0, len(data)
    while pos < n:
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            start = pos
            while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
                pos += 1
            yield data[start:pos], pos


def _parse_header(data: bytes):
    tokens = _header_tokens(data)
    values = []
    end = 0
    for tok, end in tokens:
        values.append(tok)
        if len(values) == 4:
            break
    if len(values) < 4:
        raise RasterFormatError("truncated header")
    magic = values[0]
    if magic not in _MAGICS:
        raise RasterFormatError(f"unsupported magic {magic!r}")
    try:
        width, height, maxval = (int(v) for v in values[1:])
    except ValueError as exc:
        raise RasterFormatError("malformed header") from exc
    if width < 1 or height < 1:
        raise RasterFormatError("malformed header: non-positive dimensions")
    if maxval not in (255, 65535):
        raise RasterFormatError(f"maxval unsupported: {maxval}")
    return magic, width, height, maxval, end


def read_raster(path) -> Raster16:
    """Read a P2/P3/P5/P6 file with maxval 255 or 65535."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, width, height, maxval, end = _parse_header(data)
    channels, binary = _MAGICS[magic]
    count = width * height * channels
    if binary:
        # exactly one whitespace byte separates header and raster
        if end >= len(data) or not data[end : end + 1].isspace():
            raise RasterFormatError("truncated payload")
        offset = end + 1
        dtype = np.dtype(">u2") if maxval == 65535 else np.dtype("u1")
        nbytes = count * dtype.itemsize
        if len(data) - offset < nbytes:
            raise RasterFormatError("truncated payload")
        flat = np.frombuffer(data, dtype=dtype, count=count, offset=offset)
    else:
        fields = data[end:].split()
        if len(fields) < count:
            raise RasterFormatError("truncated payload")
        try:
            flat = np.array([int(f) for f in fields[:count]], dtype=np.int64)
        except ValueError as exc:
            raise RasterFormatError("non-integer sample in ASCII payload") from exc
        if flat.size and flat.min() < 0:
            raise RasterFormatError("sample out of declared range")
    if flat.size and int(flat.max()) > maxval:
        raise RasterFormatError("sample out of declared range")
    shape = (height, width) if channels == 1 else (height, width, 3)
    samples = flat.astype(np.uint16).reshape(shape)
    return Raster16(samples, bit_depth=8 if maxval == 255 else 16)


def write_raster(r: Raster16, path) -> None:
    """Write ``r`` as binary P5 (1 channel) or P6 (3 channels)."""
    magic = b"P5" if r.channels == 1 else b"P6"
    header = b"%s\n%d %d\n%d\n" % (magic, r.width, r.height, r.maxval)
    if r.bit_depth == 16:
        payload = r.samples.astype(">u2").tobytes()
    else:
        payload = r.samples.astype(np.uint8).tobytes()
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(payload)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Tiling
# ---------------------------------------------------------------------------


def tile(r: Raster16, spec: TileSpec) -> list[Raster16]:
    """Cut ``grid_rows x grid_cols`` tiles from the top-left corner, row-major.

    Right and bottom margins that do not fill a whole tile are discarded.
    """
    if spec.grid_cols * spec.tile_w > r.width or spec.grid_rows * spec.tile_h > r.height:
        raise ValueError(
            f"tile grid {spec.grid_cols}x{spec.tile_w} by {spec.grid_rows}x{spec.tile_h} "
            f"exceeds {r.width}x{r.height} source"
        )
    tiles = []
    for gr in range(spec.grid_rows):
        for gc in range(spec.grid_cols):
            y0, x0 = gr * spec.tile_h, gc * spec.tile_w
            window = r.samples[y0 : y0 + spec.tile_h, x0 : x0 + spec.tile_w]
            tiles.append(Raster16(window.copy(), bit_depth=r.bit_depth))
    return tiles


def untile(tiles: list[Raster16], spec: TileSpec) -> Raster16:
    """Reassemble tiles produced by :func:`tile` into the cropped region."""
    if len(tiles) != spec.grid_rows * spec.grid_cols:
        raise ValueError("tile count does not match spec")
    rows = [
        np.concatenate([t.samples for t in tiles[gr * spec.grid_cols : (gr + 1) * spec.grid_cols]], axis=1)
        for gr in range(spec.grid_rows)
    ]
    return Raster16(np.concatenate(rows, axis=0), bit_depth=tiles[0].bit_depth)
