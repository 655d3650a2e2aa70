"""Event-stream files, accumulation images and per-step trace dumps.

Binary layout, all little-endian: an 8-byte ``EVPX0001`` magic, u32 width,
u32 height, then one 16-byte record per event (u64 t_us, u16 x, u16 y,
i8 polarity, 3 pad bytes).
"""

from __future__ import annotations

import csv
import logging
import struct
from pathlib import Path

import numpy as np

from evpix.array import EVENT_DTYPE, EventStream
from evpix.errors import BadFrameFormat, ConfigError

logger = logging.getLogger(__name__)

MAGIC = b"EVPX0001"
_HEADER = struct.Struct("<8sII")
CSV_HEADER = ["t_us", "x", "y", "polarity"]


def write_binary(path, stream: EventStream) -> None:
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, stream.width, stream.height))
        f.write(np.ascontiguousarray(stream.events, dtype=EVENT_DTYPE).tobytes())


def read_binary(path) -> EventStream:
    buf = Path(path).read_bytes()
    if len(buf) < _HEADER.size:
        raise BadFrameFormat(f"{path}: truncated header")
    magic, width, height = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise BadFrameFormat(f"{path}: bad magic {magic!r}")
    body = len(buf) - _HEADER.size
    if body % EVENT_DTYPE.itemsize:
        raise BadFrameFormat(f"{path}: {body} bytes is not a whole number of records")
    ev = np.frombuffer(buf, dtype=EVENT_DTYPE, offset=_HEADER.size).copy()
    return EventStream(ev, width, height)


def write_csv(path, stream: EventStream) -> None:
    """CSV with a ``t_us,x,y,polarity`` header. Geometry goes in a leading comment."""
    e = stream.events
    with open(path, "w", newline="") as f:
        f.write(f"# width={stream.width} height={stream.height}\n")
        w = csv.writer(f)
        w.writerow(CSV_HEADER)
        w.writerows(zip(e["t"].tolist(), e["x"].tolist(), e["y"].tolist(), e["p"].tolist()))


def read_csv(path, width=None, height=None) -> EventStream:
    with open(path, newline="") as f:
        first = f.readline()
        if first.startswith("#"):
            meta = dict(kv.split("=") for kv in first[1:].split())
            width = int(meta.get("width", width or 0))
            height = int(meta.get("height", height or 0))
            first = f.readline()
        if first.strip().split(",") != CSV_HEADER:
            raise BadFrameFormat(f"{path}: expected header {','.join(CSV_HEADER)}")
        rows = list(csv.reader(f))
    data = np.array(rows, dtype=np.int64).reshape(-1, 4)
    if width is None or height is None:
        width = int(data[:, 1].max()) + 1 if len(data) else 1
        height = int(data[:, 2].max()) + 1 if len(data) else 1
    if len(data) and not np.isin(data[:, 3], (1, -1)).all():
        raise BadFrameFormat(f"{path}: polarity must be 1 or -1")
    ev = np.zeros(len(data), dtype=EVENT_DTYPE)
    ev["t"], ev["x"], ev["y"], ev["p"] = data.T
    return EventStream(ev, width, height)


def write_events(path, stream: EventStream) -> None:
    (write_csv if str(path).endswith(".csv") else write_binary)(path, stream)


def read_events(path) -> EventStream:
    return (read_csv if str(path).endswith(".csv") else read_binary)(path)


def render_accumulation(stream: EventStream, t0: float, window: float, full_scale: int = 3) -> np.ndarray:
    """Signed event sum over [t0, t0 + window) as an 8-bit gray image.

    Gray 128 is no net change; ``full_scale`` net ON events give 255 and as
    many OFF events give 1.
    """
    if not window > 0:
        raise ConfigError("window must be positive")
    if full_scale < 1:
        raise ConfigError("full_scale must be >= 1")
    e = stream.events
    lo, hi = round(t0 * 1e6), round((t0 + window) * 1e6)
    sel = e[(e["t"] >= lo) & (e["t"] < hi)]
    acc = np.zeros((stream.height, stream.width), dtype=np.int64)
    if len(sel) == 0:
        logger.warning("no events in [%g, %g) s; rendering uniform gray", t0, t0 + window)
    else:
        np.add.at(acc, (sel["y"].astype(np.intp), sel["x"].astype(np.intp)), sel["p"].astype(np.int64))
    img = 128 + np.clip(acc, -full_scale, full_scale) * (127 / full_scale)
    return np.rint(img).astype(np.uint8)


def window_starts(stream: EventStream, window: float, t_end: float | None = None) -> np.ndarray:
    if t_end is None:
        t_end = (int(stream.events["t"].max()) + 1) / 1e6 if len(stream) else window
    return np.arange(0.0, t_end, window)


TRACE_HEADER = ["t", "e_lux", "v_pr", "v_sf", "v_diff", "event"]


def write_trace(path, rows) -> None:
    """Rows of (t, e_lux, v_pr, v_sf, v_diff, event) with event in {1, 0, -1}."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(TRACE_HEADER)
        for t, e, vpr, vsf, vd, ev in rows:
            w.writerow([f"{t:.6f}", f"{e:.6g}", f"{vpr:.6f}", f"{vsf:.6f}", f"{vd:.6f}", int(ev)])
