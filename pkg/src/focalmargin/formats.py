"""File formats: the plain-text grid format and 8-bit binary PGM masks.

Grid text format::

    H W
    v00 v01 ... v0(W-1)
    ...
    v(H-1)0 ...

Blank lines are not allowed between rows; trailing whitespace is ignored.
"""

from __future__ import annotations

import os
import re

import numpy as np

from .errors import FormatError
from .grid import as_grid, as_mask


def parse_grid_text(text: str, path=None) -> np.ndarray:
    lines = text.splitlines()
    # a single trailing newline is normal; anything beyond the declared rows is an error
    if not lines:
        raise FormatError("empty grid file, expected header 'H W'", path, 1)
    header = lines[0].split()
    if len(header) != 2:
        raise FormatError(f"header must be 'H W', got {lines[0]!r}", path, 1)
    try:
        height, width = int(header[0]), int(header[1])
    except ValueError:
        raise FormatError(f"header must hold two integers, got {lines[0]!r}", path, 1) from None
    if height < 1 or width < 1:
        raise FormatError(f"grid dimensions must be positive, got {height}x{width}", path, 1)

    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != height:
        line = min(len(body), height) + 2
        raise FormatError(f"expected {height} rows, found {len(body)}", path, line)

    data = np.empty((height, width), dtype=np.float64)
    for r, row in enumerate(body):
        lineno = r + 2
        tokens = row.split()
        if len(tokens) != width:
            raise FormatError(f"expected {width} values, found {len(tokens)}", path, lineno)
        for c, tok in enumerate(tokens):
            try:
                v = float(tok)
            except ValueError:
                raise FormatError(f"not a number: {tok!r}", path, lineno) from None
            if not np.isfinite(v):
                raise FormatError(f"non-finite value: {tok!r}", path, lineno)
            data[r, c] = v
    return data


def format_grid_text(grid) -> str:
    g = as_grid(grid)
    out = [f"{g.shape[0]} {g.shape[1]}"]
    for row in g:
        out.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(out) + "\n"


def read_grid(path) -> np.ndarray:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise FormatError(f"not a text file ({exc.reason})", os.fspath(path)) from None
    return parse_grid_text(text, os.fspath(path))


def write_grid(path, grid) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_grid_text(grid))


_PNM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def parse_pgm(data: bytes, path=None) -> np.ndarray:
    """Decode a binary (P5) 8-bit PGM holding only 0 and 255 into a 0/1 mask."""
    pos = 0
    tokens = []
    for _ in range(4):
        m = _PNM_TOKEN.match(data, pos)
        if m is None:
            raise FormatError("truncated PGM header", path)
        tokens.append(m.group(1))
        pos = m.end()
    if tokens[0] != b"P5":
        raise FormatError(f"expected binary PGM magic 'P5', got {tokens[0][:8]!r}", path)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise FormatError("PGM header fields must be integers", path) from None
    if width < 1 or height < 1:
        raise FormatError(f"PGM dimensions must be positive, got {width}x{height}", path)
    if not 0 < maxval <= 255:
        raise FormatError(f"only 8-bit PGM is supported, maxval={maxval}", path)
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(data) or data[pos : pos + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise FormatError("missing whitespace after PGM maxval", path)
    raster = data[pos + 1 :]
    n = width * height
    if len(raster) < n:
        raise FormatError(f"PGM raster too short: {len(raster)} of {n} bytes", path)
    pix = np.frombuffer(raster[:n], dtype=np.uint8).reshape(height, width)
    bad = (pix != 0) & (pix != 255)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise FormatError(
            f"mask pixel ({r}, {c}) has value {pix[r, c]}, only 0 and 255 allowed", path
        )
    return (pix == 255).astype(np.float64)


def format_pgm(mask) -> bytes:
    m = as_mask(mask)
    h, w = m.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + (m * 255).astype(np.uint8).tobytes()


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read(), os.fspath(path))


def write_pgm(path, mask) -> None:
    with open(path, "wb") as fh:
        fh.write(format_pgm(mask))
