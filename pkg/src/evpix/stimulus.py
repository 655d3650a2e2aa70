"""Time-varying illuminance fields.

A :class:`Stimulus` is immutable; ``sample`` gives one pixel's illuminance
in lux and ``field`` evaluates a block of rows at once for the array
simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from evpix.errors import BadFrameFormat, ConfigError, InconsistentDimensions, InvalidGeometry, OutOfBounds
from evpix.pgm import read_pgm_all

KINDS = ("constant", "log_sine", "log_ramp", "log_step", "log_square", "log_pwl", "rotating_disk", "frames")


@dataclass(frozen=True)
class Dot:
    radius_px: float
    angular_pos: float  # radians at t = 0
    dot_radius_px: float
    contrast_log_e: float


@dataclass(frozen=True, eq=False)
class Stimulus:
    kind: str
    width: int
    height: int
    duration: float
    base_lux: float = 1.0
    params: dict = dc_field(default_factory=dict)
    frames: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown stimulus kind {self.kind!r}")
        if self.width < 1 or self.height < 1:
            raise InvalidGeometry("stimulus needs at least one pixel")
        if not self.duration > 0:
            raise ConfigError("stimulus duration must be positive")
        if self.base_lux < 0:
            raise ConfigError("base_lux must be >= 0")

    # -- evaluation -------------------------------------------------------

    @property
    def is_static(self) -> bool:
        return self.kind == "constant"

    @property
    def is_uniform(self) -> bool:
        """Same illuminance at every pixel (only time varies)."""
        return self.kind not in ("rotating_disk", "frames")

    def log_gain(self, t):
        """ln(E / base_lux) for the spatially uniform kinds."""
        p = self.params
        t = np.asarray(t, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(t)
        if self.kind == "log_sine":
            return 0.5 * p["contrast"] * np.sin(2 * np.pi * p["freq"] * t + p.get("phase", 0.0))
        if self.kind == "log_ramp":
            return p["slope"] * np.maximum(t - p.get("t0", 0.0), 0.0)
        if self.kind == "log_step":
            return np.where(t >= p["t0"], p["k"], 0.0)
        if self.kind == "log_square":
            phase = np.mod(t * p["freq"], 1.0)
            return np.where(phase < 0.5, 0.5, -0.5) * p["contrast"]
        if self.kind == "log_pwl":
            return np.interp(t, p["times"], p["levels"])
        raise ValueError(f"{self.kind} is not spatially uniform")

    def uniform_lux(self, t):
        return self.base_lux * np.exp(self.log_gain(t))

    def field(self, t: float, rows: slice | None = None) -> np.ndarray:
        """Illuminance over rows (default all) as an (h, width) array."""
        rows = rows or slice(0, self.height)
        ys = np.arange(self.height)[rows]
        if self.is_uniform:
            return np.full((len(ys), self.width), float(self.uniform_lux(t)))
        if self.kind == "rotating_disk":
            xs = np.arange(self.width)
            return self._disk(xs[None, :], ys[:, None], t)
        return self._frame_at(t)[rows]

    def sample(self, x: int, y: int, t: float) -> float:
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise OutOfBounds(f"pixel ({x}, {y}) outside {self.width}x{self.height}")
        if not 0 <= t <= self.duration:
            raise OutOfBounds(f"t={t} outside [0, {self.duration}]")
        if self.is_uniform:
            return float(self.uniform_lux(t))
        if self.kind == "rotating_disk":
            return float(self._disk(np.asarray(x), np.asarray(y), t))
        return float(self._frame_at(t)[y, x])

    def max_lux(self) -> float:
        p = self.params
        if self.kind == "constant":
            g = 0.0
        elif self.kind in ("log_sine", "log_square"):
            g = 0.5 * abs(p["contrast"])
        elif self.kind == "log_ramp":
            g = max(0.0, p["slope"] * (self.duration - p.get("t0", 0.0)))
        elif self.kind == "log_step":
            g = max(0.0, p["k"])
        elif self.kind == "log_pwl":
            g = max(0.0, max(p["levels"]))
        elif self.kind == "rotating_disk":
            g = max([0.0] + [d.contrast_log_e for d in p["dots"]])
        else:
            return float(self.frames.max())
        return self.base_lux * math.exp(g)

    # -- kind-specific ----------------------------------------------------

    def _disk(self, x, y, t):
        p = self.params
        cx, cy = (self.width - 1) / 2.0, (self.height - 1) / 2.0
        turns = math.fmod(t * p["rpm"] / 60.0, 1.0)
        gain = np.zeros(np.broadcast(x, y).shape)
        for d in p["dots"]:
            ang = d.angular_pos + 2 * math.pi * turns
            dist = np.hypot(x - (cx + d.radius_px * math.cos(ang)), y - (cy + d.radius_px * math.sin(ang)))
            if p.get("smooth_edges", False):
                # 1-px smoothstep across the nominal edge
                s = np.clip(d.dot_radius_px + 0.5 - dist, 0.0, 1.0)
                gain = gain + d.contrast_log_e * s * s * (3 - 2 * s)
            else:
                gain = gain + np.where(dist <= d.dot_radius_px, d.contrast_log_e, 0.0)
        return self.base_lux * np.exp(gain)

    def _frame_at(self, t):
        p = self.params
        pos = t * p["fps"]
        n = len(self.frames)
        i = min(int(math.floor(pos)), n - 1)
        if not p.get("interpolate", False) or i >= n - 1:
            return self.frames[i]
        w = pos - i
        return (1 - w) * self.frames[i] + w * self.frames[i + 1]

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        if self.kind == "frames":
            raise ConfigError("frame stimuli are described by their source path, not inline")
        params = dict(self.params)
        if "dots" in params:
            params["dots"] = [[d.radius_px, d.angular_pos, d.dot_radius_px, d.contrast_log_e] for d in params["dots"]]
        return {
            "kind": self.kind,
            "width": self.width,
            "height": self.height,
            "duration": self.duration,
            "base_lux": self.base_lux,
            "params": params,
        }

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "Stimulus":
        d = dict(d)
        kind = d.get("kind")
        params = dict(d.get("params", {}))
        if kind == "rotating_disk":
            return rotating_disk(
                d["width"], d["height"], params["rpm"], params["dots"], d.get("base_lux", 1.0),
                duration=d.get("duration"), smooth_edges=params.get("smooth_edges", False),
            )
        if kind == "frames":
            src = Path(params["source"])
            if base_dir is not None and not src.is_absolute():
                src = Path(base_dir) / src
            return frames_stimulus(src, params["fps"], params["lux_per_dn"], params.get("interpolate", False))
        unknown = set(d) - {"kind", "width", "height", "duration", "base_lux", "params"}
        if unknown:
            raise ConfigError(f"unknown stimulus keys: {sorted(unknown)}")
        return cls(kind, int(d["width"]), int(d["height"]), float(d["duration"]), float(d.get("base_lux", 1.0)), params)


# -- constructors ---------------------------------------------------------


def constant(width, height, duration, base_lux) -> Stimulus:
    return Stimulus("constant", width, height, duration, base_lux)


def log_sine(width, height, duration, base_lux, freq, contrast, phase=0.0) -> Stimulus:
    """``contrast`` is peak-to-peak in log-e units."""
    return Stimulus("log_sine", width, height, duration, base_lux, {"freq": freq, "contrast": contrast, "phase": phase})


def log_ramp(width, height, duration, base_lux, slope, t0=0.0) -> Stimulus:
    return Stimulus("log_ramp", width, height, duration, base_lux, {"slope": slope, "t0": t0})


def log_step(width, height, duration, base_lux, t0, k) -> Stimulus:
    return Stimulus("log_step", width, height, duration, base_lux, {"t0": t0, "k": k})


def log_square(width, height, duration, base_lux, freq, contrast) -> Stimulus:
    return Stimulus("log_square", width, height, duration, base_lux, {"freq": freq, "contrast": contrast})


def log_pwl(width, height, base_lux, times, levels) -> Stimulus:
    """Piecewise-linear log illuminance through (times, levels) knots."""
    times = [float(v) for v in times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigError("log_pwl knot times must increase")
    return Stimulus("log_pwl", width, height, times[-1], base_lux, {"times": times, "levels": [float(v) for v in levels]})


def rotating_disk(width, height, rpm, dot_spec, base_lux, duration=None, smooth_edges=False) -> Stimulus:
    """Disk of dots turning at ``rpm`` about the frame center.

    ``dot_spec`` entries are (radius_px, angular_pos, dot_radius_px,
    contrast_log_e). The default duration is one revolution.
    """
    if not rpm > 0:
        raise InvalidGeometry("rpm must be positive")
    dots = [d if isinstance(d, Dot) else Dot(*map(float, d)) for d in dot_spec]
    half = min(width - 1, height - 1) / 2.0
    for d in dots:
        if d.radius_px < 0 or d.dot_radius_px <= 0 or d.radius_px + d.dot_radius_px > half:
            raise InvalidGeometry(f"dot {d} does not fit in a {width}x{height} frame")
    period = 60.0 / rpm
    return Stimulus(
        "rotating_disk", width, height, duration or period, base_lux,
        {"rpm": float(rpm), "dots": dots, "smooth_edges": bool(smooth_edges)},
    )


def edge_speed_px_s(rpm, radius_px) -> float:
    return 2 * math.pi * rpm / 60.0 * radius_px


def frames_stimulus(frame_dir_or_file, fps, lux_per_dn, interpolate=False) -> Stimulus:
    """Frames from a directory of .pgm files (name order) or one multi-image PGM."""
    src = Path(frame_dir_or_file)
    if src.is_dir():
        files = sorted(src.glob("*.pgm"))
        if not files:
            raise BadFrameFormat(f"{src}: no .pgm frames")
        images = [img for f in files for img in read_pgm_all(f)]
    else:
        images = read_pgm_all(src)
    shapes = {img.shape for img in images}
    if len(shapes) != 1:
        raise InconsistentDimensions(f"frames have differing shapes {sorted(shapes)}")
    if not fps > 0:
        raise ConfigError("fps must be positive")
    lux = np.stack(images).astype(float) * lux_per_dn
    h, w = lux.shape[1:]
    return Stimulus(
        "frames", w, h, len(images) / fps, lux_per_dn,
        {"fps": float(fps), "lux_per_dn": float(lux_per_dn), "interpolate": bool(interpolate), "source": str(src)},
        frames=lux,
    )
