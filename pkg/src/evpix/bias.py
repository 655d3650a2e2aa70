"""Mapping from bias currents and tweaks to event-generation parameters.

Thresholds follow the comparator relations theta_on = c_th ln(i_on / i_d)
and theta_off = c_th ln(i_d / i_off), so they depend on current ratios
only. Each tweak moves its current(s) log-linearly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from evpix.errors import DegenerateThreshold, NonPositiveCurrent, PixelInoperative, TweakOutOfRange
from evpix.params import BiasConfig, PixelParams

MIN_FIRING_RATE_TWEAK = -0.8
REFRACTORY_WARN_S = 100e-6


@dataclass(frozen=True)
class DerivedPixelParams:
    theta_on: float
    theta_off: float
    f_pr_max: float
    f_sf: float
    refractory_s: float
    reset_level: float
    on_level: float
    off_level: float

    def __post_init__(self):
        if not (self.theta_on > 0 and self.theta_off > 0):
            raise DegenerateThreshold(f"thresholds must be positive: {self.theta_on}, {self.theta_off}")
        if not (self.f_pr_max > 0 and self.f_sf > 0 and self.refractory_s > 0):
            raise ValueError("poles and refractory period must be positive")

    @property
    def refractory_warning(self) -> bool:
        """True in the sub-100 us region where real pixels misbehave."""
        return self.refractory_s < REFRACTORY_WARN_S


def _check_tweak(tweak, lo=-1.0, hi=1.0):
    if not lo <= tweak <= hi:
        raise TweakOutOfRange(f"tweak {tweak!r} outside [{lo}, {hi}]")


def thresholds_from_biases(bias: BiasConfig, params: PixelParams = PixelParams()) -> tuple[float, float]:
    """Temporal-contrast thresholds (log-e units) from the raw currents.

    ``i_off`` below ``params.i_min_off`` is raised to the floor, which makes
    theta_off saturate.
    """
    i_on, i_off, i_d = bias.i_on, bias.i_off, bias.i_d
    if min(i_on, i_off, i_d) <= 0:
        raise NonPositiveCurrent("currents must be positive")
    i_off = max(i_off, params.i_min_off)
    if i_on <= i_d or i_off >= i_d:
        raise DegenerateThreshold(f"need i_off < i_d < i_on, got i_off={i_off:g} i_d={i_d:g} i_on={i_on:g}")
    return params.c_th * math.log(i_on / i_d), params.c_th * math.log(i_d / i_off)


def apply_threshold_tweak(tweak: float, nominal: BiasConfig, params: PixelParams = PixelParams()) -> BiasConfig:
    _check_tweak(tweak)
    scale = math.exp(tweak * params.k_tw)
    i_off = max(nominal.i_off / scale, params.i_min_off)
    return nominal.replace(i_on=nominal.i_on * scale, i_off=i_off)


def apply_onoff_balance_tweak(tweak: float, nominal: BiasConfig, params: PixelParams = PixelParams()) -> BiasConfig:
    # Moving i_d shifts the reset level only; theta_on + theta_off is fixed.
    _check_tweak(tweak)
    return nominal.replace(i_d=nominal.i_d * math.exp(tweak * params.k_bal))


def apply_max_firing_rate_tweak(tweak: float, nominal: BiasConfig, params: PixelParams = PixelParams()) -> BiasConfig:
    _check_tweak(tweak)
    if tweak < MIN_FIRING_RATE_TWEAK:
        raise PixelInoperative(f"max firing rate tweak {tweak} < {MIN_FIRING_RATE_TWEAK}: pixel stuck in reset")
    return nominal.replace(i_refr=nominal.i_refr * math.exp(tweak * params.k_refr))


def refractory_from_tweak(tweak: float, params: PixelParams = PixelParams()) -> float:
    """Refractory period in seconds for a max-firing-rate tweak at nominal i_refr."""
    if tweak < MIN_FIRING_RATE_TWEAK:
        raise PixelInoperative(f"max firing rate tweak {tweak} < {MIN_FIRING_RATE_TWEAK}: pixel stuck in reset")
    _check_tweak(tweak)
    return params.refr_nominal_s * math.exp(-tweak * params.k_refr)


def refractory_from_current(i_refr: float, params: PixelParams = PixelParams()) -> float:
    if i_refr <= 0:
        raise NonPositiveCurrent("i_refr must be positive")
    floor = params.i_refr_nominal * math.exp(MIN_FIRING_RATE_TWEAK * params.k_refr)
    if i_refr < floor * (1 - 1e-12):
        raise PixelInoperative(f"i_refr={i_refr:g} A below {floor:g} A: pixel stuck in reset")
    return params.refr_nominal_s * params.i_refr_nominal / i_refr


def effective_bias(bias: BiasConfig, params: PixelParams = PixelParams()) -> BiasConfig:
    """Fold the three tweaks into the currents; returned tweaks are zero."""
    b = apply_threshold_tweak(bias.threshold_tweak, bias, params)
    b = apply_onoff_balance_tweak(bias.onoff_balance_tweak, b, params)
    b = apply_max_firing_rate_tweak(bias.max_firing_rate_tweak, b, params)
    return b.replace(threshold_tweak=0.0, onoff_balance_tweak=0.0, max_firing_rate_tweak=0.0)


def comparator_levels(bias: BiasConfig, params: PixelParams = PixelParams()) -> tuple[float, float, float]:
    """(on_level, reset_level, off_level) in normalized change-amp units.

    Levels are c_th * -ln(I / i_level_ref): the ON trip sits theta_on below
    reset and the OFF trip theta_off above it. Scaling every current by the
    same factor shifts all three levels together.
    """
    i_off = max(bias.i_off, params.i_min_off)

    def level(i):
        return -params.c_th * math.log(i / params.i_level_ref)

    return level(bias.i_on), level(bias.i_d), level(i_off)


def derive(bias: BiasConfig, params: PixelParams = PixelParams()) -> DerivedPixelParams:
    eff = effective_bias(bias, params)
    theta_on, theta_off = thresholds_from_biases(eff, params)
    on_level, reset_level, off_level = comparator_levels(eff, params)
    return DerivedPixelParams(
        theta_on=theta_on,
        theta_off=theta_off,
        f_pr_max=params.f_pr_cap_per_amp * eff.i_pr,
        f_sf=params.f_sf_per_amp * eff.i_sf,
        refractory_s=refractory_from_current(eff.i_refr, params),
        reset_level=reset_level,
        on_level=on_level,
        off_level=off_level,
    )


def currents_for_thresholds(
    theta_on: float, theta_off: float, base: BiasConfig = BiasConfig(), params: PixelParams = PixelParams()
) -> BiasConfig:
    """Inverse of :func:`thresholds_from_biases` keeping ``base.i_d``."""
    i_on = base.i_d * math.exp(theta_on / params.c_th)
    i_off = base.i_d * math.exp(-theta_off / params.c_th)
    if i_off < params.i_min_off:
        raise DegenerateThreshold(f"theta_off={theta_off} needs i_off={i_off:g} A below the floor")
    return base.replace(i_on=i_on, i_off=i_off)


def bias_for_refractory(refractory_s: float, base: BiasConfig = BiasConfig(), params: PixelParams = PixelParams()) -> BiasConfig:
    return base.replace(i_refr=params.refr_nominal_s * params.i_refr_nominal / refractory_s)
