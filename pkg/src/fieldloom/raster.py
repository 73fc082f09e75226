"""Portable graymap (PGM) raster I/O and the binary-mask container.

Reads both the ASCII (P2) and binary (P5) encodings with maxval up to 255;
grayscale values above 127 binarize to foreground. Writes are always P5.
"""

import os
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .validation import round_half_up

BINARIZE_ABOVE = 127


@dataclass
class BinaryRaster:
    """Bit raster stored row-major, row 0 at the top."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError("raster must be a 2-D array with positive dimensions")
        if not np.all((values == 0) | (values == 1)):
            raise ValueError("raster values must be 0 or 1")
        self.values = values.astype(np.uint8)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def _read_header_tokens(data: bytes):
    """Magic, width, height, maxval; '#' comments allowed between tokens.
    Returns the offset just past the single whitespace after maxval."""
    tokens = []
    i = 0
    while len(tokens) < 4:
        if i >= len(data):
            raise DataError("truncated graymap header")
        c = data[i:i + 1]
        if c == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    if i >= len(data) or not data[i:i + 1].isspace():
        raise DataError("malformed graymap header")
    return tokens, i + 1


def read_graymap(path) -> np.ndarray:
    """Read a P2/P5 graymap into a (height, width) uint8 array."""
    if not os.path.exists(path):
        raise DataError(f"raster file not found: {path}")
    with open(path, "rb") as fh:
        data = fh.read()
    tokens, offset = _read_header_tokens(data)
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise DataError(f"unsupported graymap magic {magic!r} in {path}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise DataError(f"malformed graymap header in {path}") from None
    if width < 1 or height < 1 or not 0 < maxval <= 255:
        raise DataError(f"unsupported graymap dimensions or maxval in {path}")
    n = width * height
    if magic == b"P5":
        payload = data[offset:offset + n]
        if len(payload) < n:
            raise DataError(f"truncated graymap payload in {path}")
        grid = np.frombuffer(payload, dtype=np.uint8, count=n)
    else:
        try:
            vals = [int(t) for t in data[offset - 1:].split()]
        except ValueError:
            raise DataError(f"non-numeric sample in {path}") from None
        if len(vals) < n:
            raise DataError(f"truncated graymap payload in {path}")
        grid = np.asarray(vals[:n], dtype=np.uint8)
    return grid.reshape(height, width)


def read_raster(path) -> BinaryRaster:
    """Read a graymap and binarize it: value > 127 becomes foreground."""
    gray = read_graymap(path)
    return BinaryRaster((gray > BINARIZE_ABOVE).astype(np.uint8))


def write_raster(obj, path):
    """Write a raster as binary graymap (P5, maxval 255).

    Binary rasters are written as 0/255; anything float-valued in [0, 1]
    (e.g. a 2-D probability field) is scaled to 0..255 with half-up
    rounding, so probability 0.5 maps to gray 128.
    """
    if isinstance(obj, BinaryRaster):
        gray = obj.values.astype(np.uint8) * 255
    else:
        arr = np.asarray(getattr(obj, "values", obj), dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("only 2-D arrays can be written as graymaps")
        if arr.min(initial=0.0) < 0.0 or arr.max(initial=0.0) > 1.0:
            raise ValueError("float rasters must hold values in [0, 1]")
        gray = round_half_up(arr * 255.0).astype(np.uint8)
    h, w = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())
