"""Binary PGM (P5) reading and writing, 8- and 16-bit."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from evpix.errors import BadFrameFormat

_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*([^\s#]+)")


def _parse(buf: bytes, pos: int):
    fields = []
    for _ in range(4):
        m = _TOKEN.match(buf, pos)
        if not m:
            raise BadFrameFormat("truncated PGM header")
        fields.append(m.group(1))
        pos = m.end()
    magic, w, h, maxval = fields
    if magic != b"P5":
        raise BadFrameFormat(f"not a binary PGM (magic {magic!r})")
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise BadFrameFormat("non-integer PGM header field") from exc
    if w <= 0 or h <= 0 or not 0 < maxval < 65536:
        raise BadFrameFormat(f"bad PGM geometry {w}x{h} maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    n = w * h * dtype.itemsize
    if len(buf) < pos + n:
        raise BadFrameFormat("truncated PGM raster")
    img = np.frombuffer(buf, dtype=dtype, count=w * h, offset=pos).reshape(h, w)
    return img.astype(np.uint16 if dtype.itemsize == 2 else np.uint8), pos + n


def read_pgm_all(path) -> list[np.ndarray]:
    """All images in a (possibly multi-image) P5 file."""
    buf = Path(path).read_bytes()
    images, pos = [], 0
    while pos < len(buf) and buf[pos:].strip():
        img, pos = _parse(buf, pos)
        images.append(img)
    if not images:
        raise BadFrameFormat(f"{path}: no image data")
    return images


def read_pgm(path) -> np.ndarray:
    return read_pgm_all(path)[0]


def write_pgm(path, img) -> None:
    img = np.asarray(img)
    if img.ndim != 2:
        raise BadFrameFormat("PGM images are 2-D")
    if img.dtype == np.uint8:
        maxval, raw = 255, img.tobytes()
    else:
        if img.min() < 0 or img.max() > 65535:
            raise BadFrameFormat("pixel values out of 16-bit range")
        maxval, raw = 65535, img.astype(">u2").tobytes()
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n%d\n" % (w, h, maxval))
        f.write(raw)
