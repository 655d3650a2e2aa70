"""Characterization sweeps: background-activity rate against illuminance,
photoreceptor bias and threshold tweak, plus the closed-form refractory and
threshold tables.

Each sweep returns a :class:`SweepTable` that writes CSV (optionally as a
whitespace-separated gnuplot data block).
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from evpix.array import QUANTILES, ArrayConfig, event_counts, rates_from_counts
from evpix.bias import (
    MIN_FIRING_RATE_TWEAK,
    REFRACTORY_WARN_S,
    apply_threshold_tweak,
    derive,
    refractory_from_tweak,
    thresholds_from_biases,
)
from evpix.errors import PixelInoperative
from evpix.params import BiasConfig, PixelParams
from evpix.pixel import leak_rate
from evpix.stimulus import constant

logger = logging.getLogger(__name__)

MIN_DURATION_S = 30.0
MIN_EXPECTED_EVENTS = 100


@dataclass
class SweepTable:
    variable: str
    rows: list[dict]
    meta: dict = field(default_factory=dict)

    @property
    def columns(self) -> list[str]:
        return list(self.rows[0]) if self.rows else [self.variable]

    def column(self, name) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def write_csv(self, path, gnuplot=False) -> None:
        with open(path, "w", newline="") as f:
            for k, v in self.meta.items():
                f.write(f"# {k}: {v}\n")
            if gnuplot:
                f.write("# " + " ".join(self.columns) + "\n")
                for r in self.rows:
                    f.write(" ".join(f"{r[c]:.6g}" for c in self.columns) + "\n")
            else:
                w = csv.DictWriter(f, self.columns)
                w.writeheader()
                w.writerows(self.rows)


def sweep_duration(expected_rate_hz: float | None) -> float:
    """Long enough for ~100 events per pixel at the expected rate, at least 30 s."""
    if not expected_rate_hz or expected_rate_hz <= 0:
        return MIN_DURATION_S
    return max(MIN_DURATION_S, MIN_EXPECTED_EVENTS / expected_rate_hz)


def _quantile_cols(prefix, q: dict) -> dict:
    return {f"{prefix}_q{k}": q[k] for k in QUANTILES}


def _run_constant(cfg: ArrayConfig, lux: float, duration: float):
    on, off = event_counts(constant(cfg.width, cfg.height, duration, lux), cfg)
    return rates_from_counts(on, off, duration)


def sweep_defaults(bias: BiasConfig, **kw) -> ArrayConfig:
    """64 x 64 array, everything on."""
    return ArrayConfig(width=64, height=64, bias=bias, **kw)


def sweep_noise_vs_illuminance(cfg: ArrayConfig | None = None, lux_grid=None, duration=MIN_DURATION_S) -> SweepTable:
    if cfg is None:
        cfg = sweep_defaults(BiasConfig(i_pr=30e-12, i_sf=15e-12))
    if lux_grid is None:
        lux_grid = np.logspace(-4, 3, 8)
    rows = []
    for lux in lux_grid:
        r = _run_constant(cfg, float(lux), duration)
        rows.append({"lux": float(lux), **_quantile_cols("on", r.on_quantiles), **_quantile_cols("off", r.off_quantiles)})
        logger.info("%.3g lux: ON %.3g Hz, OFF %.3g Hz", lux, r.on_median, r.off_median)
    return SweepTable("lux", rows, _meta(cfg, duration))


def sweep_noise_vs_ipr(cfg: ArrayConfig | None = None, ipr_grid=None, fixed_lux=0.04, duration=MIN_DURATION_S) -> SweepTable:
    """Median per-pixel noise rate (ON + OFF) against i_pr.

    ``meta`` gets the argmax i_pr and the mean of the top-decade medians.
    """
    if cfg is None:
        cfg = sweep_defaults(BiasConfig(i_sf=30e-12))
    if ipr_grid is None:
        ipr_grid = np.logspace(math.log10(1.6e-12), math.log10(1.6e-9), 7)
    rows = []
    for ipr in ipr_grid:
        c = dataclasses.replace(cfg, bias=cfg.bias.replace(i_pr=float(ipr)))
        r = _run_constant(c, fixed_lux, duration)
        total = float(np.median(r.on_rate + r.off_rate))
        rows.append({"i_pr": float(ipr), "noise_median": total, "on_median": r.on_median, "off_median": r.off_median})
        logger.info("i_pr %.3g A: %.3g Hz", ipr, total)
    table = SweepTable("i_pr", rows, _meta(cfg, duration, fixed_lux=fixed_lux))
    med = table.column("noise_median")
    ipr = table.column("i_pr")
    top = ipr >= ipr.max() / 10 * (1 - 1e-9)
    table.meta["argmax_i_pr"] = float(ipr[int(np.argmax(med))])
    table.meta["plateau_hz"] = float(med[top].mean())
    return table


def sweep_noise_vs_threshold(
    cfg: ArrayConfig | None = None, tweak_grid=None, fixed_lux=0.04, duration=MIN_DURATION_S
) -> SweepTable:
    """Median ON/OFF rates against threshold tweak.

    ``meta`` records a quadratic fit of ln(OFF rate) against theta_off over
    the nonzero points (negative curvature means a Gaussian-like tail) and
    the leak rate the ON median should floor at.
    """
    if cfg is None:
        cfg = sweep_defaults(BiasConfig(i_pr=3e-9, i_sf=15e-12))
    if tweak_grid is None:
        tweak_grid = np.linspace(-0.5, 1.0, 7)
    rows = []
    for tw in tweak_grid:
        c = dataclasses.replace(cfg, bias=cfg.bias.replace(threshold_tweak=float(tw)))
        d = derive(c.bias, c.params)
        r = _run_constant(c, fixed_lux, duration)
        rows.append({
            "threshold_tweak": float(tw), "theta_on": d.theta_on, "theta_off": d.theta_off,
            **_quantile_cols("on", r.on_quantiles), **_quantile_cols("off", r.off_quantiles),
        })
        logger.info("tweak %+.2f: ON %.3g Hz, OFF %.3g Hz", tw, r.on_median, r.off_median)
    table = SweepTable("threshold_tweak", rows, _meta(cfg, duration, fixed_lux=fixed_lux))
    table.meta["leak_rate_hz"] = float(leak_rate(fixed_lux, cfg.params))
    off = table.column("off_q50")
    nz = off > 0
    if nz.sum() >= 3:
        a, b, c0 = np.polyfit(table.column("theta_off")[nz], np.log(off[nz]), 2)
        table.meta["log_rate_curvature"] = float(a)
    return table


def sweep_refractory(tweak_grid, params: PixelParams = PixelParams()) -> SweepTable:
    """Closed-form refractory period per max-firing-rate tweak.

    Tweaks below the inoperative limit raise :class:`PixelInoperative`.
    """
    rows = []
    for tw in tweak_grid:
        if tw < MIN_FIRING_RATE_TWEAK:
            raise PixelInoperative(f"max firing rate tweak {tw} < {MIN_FIRING_RATE_TWEAK}: pixel stuck in reset")
        r = refractory_from_tweak(float(tw), params)
        rows.append({"max_firing_rate_tweak": float(tw), "refractory_s": r, "below_100us": int(r < REFRACTORY_WARN_S)})
    return SweepTable("max_firing_rate_tweak", rows, {"inoperative_below": MIN_FIRING_RATE_TWEAK})


def sweep_threshold(tweak_grid, nominal: BiasConfig = BiasConfig(), params: PixelParams = PixelParams()) -> SweepTable:
    """theta_on and theta_off per threshold tweak; flags where i_off hit its floor."""
    rows = []
    for tw in tweak_grid:
        b = apply_threshold_tweak(float(tw), nominal, params)
        on, off = thresholds_from_biases(b, params)
        clamped = nominal.i_off / math.exp(tw * params.k_tw) < params.i_min_off
        rows.append({"threshold_tweak": float(tw), "theta_on": on, "theta_off": off, "off_clamped": int(clamped)})
    return SweepTable("threshold_tweak", rows)


def _meta(cfg: ArrayConfig, duration, **extra) -> dict:
    b = cfg.bias
    return {
        "array": f"{cfg.width}x{cfg.height}",
        "seed": cfg.seed,
        "duration_s": duration,
        "i_pr": b.i_pr,
        "i_sf": b.i_sf,
        **extra,
    }
