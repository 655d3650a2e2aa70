"""Array-level simulation: the pixel kernel over a W x H grid with
per-pixel mismatch, merged into one time-ordered event stream."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from evpix import rng
from evpix.bias import DerivedPixelParams, derive
from evpix.errors import ConfigMismatch, SamplingTooCoarse
from evpix.params import BiasConfig, PixelParams
from evpix.pixel import (
    PixelState,
    kernel_count,
    kernel_run,
    kernel_step,
    bandwidth_poles,
    check_dt,
    floor_us,
    leak_rate,
    max_dt,
    noise_step_std,
    photoreceptor_voltage,
    pole_alpha,
)
from evpix.stimulus import Stimulus

logger = logging.getLogger(__name__)

EVENT_DTYPE = np.dtype(
    {"names": ["t", "x", "y", "p"], "formats": ["<u8", "<u2", "<u2", "i1"], "offsets": [0, 8, 10, 12], "itemsize": 16}
)
QUANTILES = (5, 25, 50, 75, 95)


@dataclass(frozen=True)
class ArrayConfig:
    width: int = 346
    height: int = 260
    seed: int = 0
    mismatch_enabled: bool = True
    dt: float | None = None  # None: largest step the sampling guard allows
    bias: BiasConfig = field(default_factory=BiasConfig)
    params: PixelParams = field(default_factory=PixelParams)
    noise_enabled: bool = True
    leak_enabled: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigMismatch("array needs at least one pixel")
        if self.width > 65535 or self.height > 65535:
            raise ConfigMismatch("array dimensions must fit in 16 bits")


@dataclass(frozen=True)
class MismatchField:
    """Per-pixel multiplicative factors, regenerated from (seed, x, y)."""

    theta_on: np.ndarray
    theta_off: np.ndarray
    leak: np.ndarray

    @classmethod
    def generate(cls, seed, width, height, params: PixelParams, enabled=True, rows=slice(None)) -> "MismatchField":
        ys = np.arange(height)[rows]
        xs = np.arange(width)
        x, y = np.meshgrid(xs, ys)
        if not enabled:
            ones = np.ones(x.shape)
            return cls(ones, ones.copy(), ones.copy())
        s_th, s_lk = params.mismatch_sigma_theta, params.mismatch_sigma_leak
        return cls(
            rng.lognormal_factors(seed, x, y, rng.STREAM_THETA_ON, s_th),
            rng.lognormal_factors(seed, x, y, rng.STREAM_THETA_OFF, s_th),
            rng.lognormal_factors(seed, x, y, rng.STREAM_LEAK, s_lk),
        )


@dataclass(eq=False)
class EventStream:
    events: np.ndarray
    width: int
    height: int

    def __post_init__(self):
        self.events = np.asarray(self.events, dtype=EVENT_DTYPE)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        from evpix.pixel import Event

        for e in self.events:
            yield Event(int(e["x"]), int(e["y"]), int(e["t"]), int(e["p"]))

    def __eq__(self, other):
        return (
            isinstance(other, EventStream)
            and (self.width, self.height) == (other.width, other.height)
            and np.array_equal(self.events, other.events)
        )

    @classmethod
    def from_columns(cls, t, x, y, p, width, height, sort=True) -> "EventStream":
        ev = np.zeros(len(t), dtype=EVENT_DTYPE)
        ev["t"], ev["x"], ev["y"], ev["p"] = t, x, y, p
        s = cls(ev, width, height)
        return s.sorted() if sort else s

    def sorted(self) -> "EventStream":
        e = self.events
        # time, then row, then column, ON before OFF
        order = np.lexsort((-e["p"].astype(np.int16), e["x"], e["y"], e["t"]))
        return EventStream(e[order], self.width, self.height)

    def pixel(self, x, y) -> np.ndarray:
        e = self.events
        return e[(e["x"] == x) & (e["y"] == y)]


def choose_dt(stim: Stimulus, cfg: ArrayConfig) -> float:
    f1, f2 = bandwidth_poles(stim.max_lux(), cfg.bias, cfg.params)
    limit = max_dt(f1, f2)
    if cfg.dt is None:
        # round down to a whole number of microseconds where possible
        return math.floor(limit * 1e6) / 1e6 if limit >= 1e-6 else limit
    check_dt(cfg.dt, f1, f2)
    return cfg.dt


def _simulate_rows(stim, cfg, derived, rows, nsteps, dt, t0, counts_only=False):
    p, bias = cfg.params, cfg.bias
    ys = np.arange(cfg.height)[rows]
    x, y = (g.ravel() for g in np.meshgrid(np.arange(cfg.width), ys))
    mm = MismatchField.generate(cfg.seed, cfg.width, cfg.height, p, cfg.mismatch_enabled, rows)
    theta_on = (derived.theta_on * mm.theta_on).ravel()
    theta_off = (derived.theta_off * mm.theta_off).ravel()
    leak_factor = mm.leak.ravel()

    def lux(t):
        return float(stim.uniform_lux(t)) if stim.is_uniform else stim.field(t, rows).ravel()

    def inputs(e):
        f1, _ = bandwidth_poles(e, bias, p)
        a1 = pole_alpha(f1, dt)
        std = noise_step_std(e, a1, bias, p) if cfg.noise_enabled else 0.0
        lk = leak_rate(e, p) * leak_factor if cfg.leak_enabled else 0.0
        return photoreceptor_voltage(e, p), a1, std, lk

    e = lux(t0)
    state = PixelState.initial(e, p, seed=cfg.seed, x=x, y=y, t0=t0)
    _, f2 = bandwidth_poles(0.0, bias, p)
    a2 = float(pole_alpha(f2, dt))
    target, a1, std, lk = inputs(e)
    if stim.is_static and counts_only:
        return kernel_count(
            state, target, a1, std, a2, t0, dt, 1, nsteps, theta_on, theta_off, lk, derived.refractory_s,
            p.log_scale, cfg.noise_enabled,
        )
    if stim.is_static:
        steps, idx, pol = kernel_run(
            state, target, a1, std, a2, t0, dt, 1, nsteps, theta_on, theta_off, lk, derived.refractory_s,
            p.log_scale, cfg.noise_enabled,
        )
        return [floor_us(t0 + steps * dt), x[idx], y[idx], pol]
    fired = np.zeros(len(x), dtype=np.int8)
    out_t, out_i, out_p = [], [], []
    for n in range(1, nsteps + 1):
        t = t0 + n * dt
        if not stim.is_static:
            target, a1, std, lk = inputs(lux(t))
        kernel_step(
            state, target, a1, std, a2, t, theta_on, theta_off, lk, derived.refractory_s, p.log_scale,
            cfg.noise_enabled, fired,
        )
        if fired.any():
            idx = np.flatnonzero(fired)
            out_t.append(np.full(len(idx), floor_us(t)))
            out_i.append(idx)
            out_p.append(fired[idx].copy())
    if counts_only:
        idx = np.concatenate(out_i) if out_i else np.zeros(0, np.int64)
        pol = np.concatenate(out_p) if out_p else np.zeros(0, np.int8)
        return (np.bincount(idx[pol > 0], minlength=len(x)), np.bincount(idx[pol < 0], minlength=len(x)))
    if not out_t:
        return [np.zeros(0, dtype=np.int64)] * 4
    idx = np.concatenate(out_i)
    return [np.concatenate(out_t), x[idx], y[idx], np.concatenate(out_p)]


def _run(stim, cfg, duration, t0, counts_only):
    if (stim.width, stim.height) != (cfg.width, cfg.height):
        raise ConfigMismatch(f"stimulus is {stim.width}x{stim.height}, array is {cfg.width}x{cfg.height}")
    derived = derive(cfg.bias, cfg.params)
    if derived.refractory_warning:
        logger.warning("refractory period %.3g s is below 100 us; real pixels misbehave there", derived.refractory_s)
    dt = choose_dt(stim, cfg)
    duration = stim.duration if duration is None else duration
    nsteps = int(math.floor(duration / dt + 1e-9))
    if nsteps < 1:
        raise SamplingTooCoarse("duration shorter than one integration step")
    nblocks = max(1, min(cfg.workers, cfg.height))
    bounds = np.linspace(0, cfg.height, nblocks + 1).astype(int)
    blocks = [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]

    def work(rows):
        return _simulate_rows(stim, cfg, derived, rows, nsteps, dt, t0, counts_only)

    if nblocks == 1:
        return [work(blocks[0])]
    with ThreadPoolExecutor(nblocks) as pool:
        return list(pool.map(work, blocks))


def simulate(stim: Stimulus, cfg: ArrayConfig, duration: float | None = None, t0: float = 0.0) -> EventStream:
    """Simulate every pixel over ``duration`` (default: the stimulus's).

    Rows are split into ``cfg.workers`` contiguous blocks. Each pixel's
    arithmetic and noise stream are independent of the split, so output
    is bit-identical for any worker count.
    """
    parts = _run(stim, cfg, duration, t0, False)
    cols = [np.concatenate([part[i] for part in parts]) for i in range(4)]
    return EventStream.from_columns(*cols, cfg.width, cfg.height)


def event_counts(stim: Stimulus, cfg: ArrayConfig, duration: float | None = None, t0: float = 0.0):
    """Per-pixel (ON, OFF) event counts, shape (height, width), without building the stream.

    Same simulation as :func:`simulate`; cheaper when only rates are needed.
    """
    parts = _run(stim, cfg, duration, t0, True)
    shape = (cfg.height, cfg.width)
    return tuple(np.concatenate([part[i] for part in parts]).reshape(shape) for i in range(2))


@dataclass(frozen=True)
class RateSummary:
    on_rate: np.ndarray  # (height, width) Hz
    off_rate: np.ndarray
    on_quantiles: dict
    off_quantiles: dict

    @property
    def on_median(self) -> float:
        return self.on_quantiles[50]

    @property
    def off_median(self) -> float:
        return self.off_quantiles[50]


def per_pixel_rates(stream: EventStream, duration: float) -> RateSummary:
    e = stream.events
    shape = (stream.height, stream.width)
    counts = []
    for pol in (1, -1):
        sel = e[e["p"] == pol]
        c = np.zeros(shape)
        np.add.at(c, (sel["y"].astype(np.intp), sel["x"].astype(np.intp)), 1)
        counts.append(c)
    return rates_from_counts(*counts, duration)


def rates_from_counts(on_counts, off_counts, duration: float) -> RateSummary:
    if not duration > 0:
        raise ValueError("duration must be positive")
    rates = [np.asarray(c, dtype=float) / duration for c in (on_counts, off_counts)]
    quant = [dict(zip(QUANTILES, (float(v) for v in np.percentile(r, QUANTILES)))) for r in rates]
    return RateSummary(rates[0], rates[1], quant[0], quant[1])


def derived_for(cfg: ArrayConfig) -> DerivedPixelParams:
    return derive(cfg.bias, cfg.params)
