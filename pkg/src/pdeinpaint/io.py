"""Netpbm image/mask files and plain-text CSV for tonal data and operators."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .grid import as_image, as_mask


class FormatError(ValueError):
    """Raised for malformed or unsupported files."""


_TOKEN = re.compile(rb"\s*(#[^\n]*\n\s*)*(\S+)")


def _header(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping comments.

    Returns the tokens and the offset just past the single whitespace byte
    that terminates the last token.
    """
    tokens = []
    pos = 0
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise FormatError("malformed header")
        tokens.append(m.group(2))
        pos = m.end()
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        # a raster must follow exactly one whitespace byte; plain formats may end here
        return tokens, pos
    return tokens, pos + 1


def _dims(tokens: list[bytes]) -> tuple[int, int]:
    try:
        width, height = int(tokens[1]), int(tokens[2])
    except ValueError as exc:
        raise FormatError("malformed header") from exc
    if width <= 0 or height <= 0:
        raise FormatError("malformed header: nonpositive dimensions")
    return width, height


def read_pgm(path) -> np.ndarray:
    """Read a P2 or P5 greymap with maxval <= 255 as floats in [0, 255]."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"not a P2/P5 file (magic {magic!r})")
    tokens, pos = _header(data, 4)
    width, height = _dims(tokens)
    try:
        maxval = int(tokens[3])
    except ValueError as exc:
        raise FormatError("malformed header") from exc
    if not 0 < maxval <= 255:
        raise FormatError(f"unsupported maxval {maxval}")
    n = width * height
    if magic == b"P5":
        payload = data[pos : pos + n]
        if len(payload) < n:
            raise FormatError("truncated payload")
        values = np.frombuffer(payload, dtype=np.uint8).astype(float)
    else:
        fields = data[pos:].split()
        if len(fields) < n:
            raise FormatError("truncated payload")
        try:
            values = np.array([int(x) for x in fields[:n]], dtype=float)
        except ValueError as exc:
            raise FormatError("malformed payload") from exc
    if values.max(initial=0) > maxval:
        raise FormatError("sample exceeds maxval")
    values = values.reshape(height, width)
    if maxval != 255:
        values = values * (255.0 / maxval)
    return values


def write_pgm(image, path, binary: bool = True) -> None:
    """Write an image as 8-bit PGM, rounding to nearest and clamping to [0, 255]."""
    f = as_image(image)
    height, width = f.shape
    q = np.clip(np.floor(f + 0.5), 0, 255).astype(np.uint8)
    if binary:
        Path(path).write_bytes(b"P5\n%d %d\n255\n" % (width, height) + q.tobytes())
    else:
        rows = "\n".join(" ".join(str(v) for v in row) for row in q)
        Path(path).write_text(f"P2\n{width} {height}\n255\n{rows}\n")


def read_pbm(path) -> np.ndarray:
    """Read a P4 (or P1) bitmap; set bits become ``True`` mask pixels."""
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic not in (b"P4", b"P1"):
        raise FormatError(f"not a P1/P4 file (magic {magic!r})")
    tokens, pos = _header(data, 3)
    width, height = _dims(tokens)
    if magic == b"P4":
        row_bytes = (width + 7) // 8
        payload = data[pos : pos + row_bytes * height]
        if len(payload) < row_bytes * height:
            raise FormatError("truncated payload")
        packed = np.frombuffer(payload, dtype=np.uint8).reshape(height, row_bytes)
        bits = np.unpackbits(packed, axis=1)[:, :width]
    else:
        digits = re.sub(rb"#[^\n]*\n|\s", b"", data[pos:])
        if len(digits) < width * height:
            raise FormatError("truncated payload")
        bits = np.frombuffer(digits[: width * height], dtype=np.uint8) - ord("0")
        if np.any(bits > 1):
            raise FormatError("malformed payload")
        bits = bits.reshape(height, width)
    return bits.astype(bool)


def write_pbm(mask, path) -> None:
    """Write a mask as P4; rows are padded with zero bits to whole bytes."""
    c = as_mask(mask)
    height, width = c.shape
    packed = np.packbits(c.astype(np.uint8), axis=1)
    Path(path).write_bytes(b"P4\n%d %d\n" % (width, height) + packed.tobytes())


def write_tonal_csv(values, mask, path) -> None:
    """Store grey values at mask pixels as ``index,value`` lines (17 significant digits)."""
    g = np.asarray(values, dtype=float).ravel()
    idx = np.flatnonzero(as_mask(mask).ravel())
    lines = ["index,value"] + [f"{i},{g[i]:.17g}" for i in idx]
    Path(path).write_text("\n".join(lines) + "\n")


def read_tonal_csv(path, shape) -> np.ndarray:
    """Inverse of :func:`write_tonal_csv`; pixels not listed are 0."""
    g = np.zeros(int(np.prod(shape)))
    lines = Path(path).read_text().splitlines()
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.lower().startswith("index"):
            continue
        try:
            i, v = line.split(",")
            g[int(i)] = float(v)
        except (ValueError, IndexError) as exc:
            raise FormatError(f"line {lineno}: malformed tonal entry {line!r}") from exc
    return g.reshape(shape)


def write_operator_csv(op, path) -> None:
    """Debug dump of a sparse operator as ``row,col,value`` sorted by (row, col)."""
    coo = sp.coo_matrix(op)
    order = np.lexsort((coo.col, coo.row))
    lines = ["row,col,value"] + [
        f"{coo.row[k]},{coo.col[k]},{coo.data[k]:.17g}" for k in order
    ]
    Path(path).write_text("\n".join(lines) + "\n")
