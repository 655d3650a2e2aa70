"""Bias settings and physical/calibration constants of the pixel model."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields

from evpix.errors import ConfigError, NonPositiveCurrent, TweakOutOfRange

Q_ELECTRON = 1.602176634e-19  # C

CURRENT_FIELDS = ("i_pr", "i_sf", "i_d", "i_on", "i_off", "i_refr")
TWEAK_FIELDS = ("threshold_tweak", "onoff_balance_tweak", "max_firing_rate_tweak")


@dataclass(frozen=True)
class BiasConfig:
    """The six pixel bias currents (amperes) and three jAER-style tweaks.

    Tweaks are dimensionless in [-1, 1] and are applied on top of the raw
    currents by :func:`evpix.bias.effective_bias`.
    """

    i_pr: float = 3e-9
    i_sf: float = 15e-12
    i_d: float = 1e-9
    i_on: float = 16e-9
    i_off: float = 62.5e-12
    i_refr: float = 1e-10
    threshold_tweak: float = 0.0
    onoff_balance_tweak: float = 0.0
    max_firing_rate_tweak: float = 0.0

    def __post_init__(self):
        for name in CURRENT_FIELDS:
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise NonPositiveCurrent(f"{name} must be a positive current, got {value!r}")
        for name in TWEAK_FIELDS:
            value = getattr(self, name)
            if not -1.0 <= value <= 1.0:
                raise TweakOutOfRange(f"{name} must lie in [-1, 1], got {value!r}")

    def replace(self, **changes) -> "BiasConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BiasConfig":
        return _from_dict(cls, d)


@dataclass(frozen=True)
class PixelParams:
    """Physical and calibration constants.

    Defaults reproduce a DAVIS346-like pixel: U_T = 25 mV, kappa = 0.75,
    change-amplifier gain 20 and a 2 mlx dark-current floor. The bandwidth
    slopes put the source-follower pole at 100 Hz for i_sf = 15 pA and the
    light-limited photoreceptor pole near 50 Hz at 40 mlx.
    """

    u_t: float = 0.025
    kappa: float = 0.75
    amp_gain: float = 20.0
    e_dark: float = 0.002
    k_lux_to_amps: float = 125e-15
    # log current ratio -> log-e contrast; nominal i_on/i_d = 16 gives 0.25
    c_th: float = 0.25 / math.log(16.0)
    k_tw: float = math.log(4.0)
    k_bal: float = math.log(4.0)
    k_refr: float = math.log(100.0)
    refr_nominal_s: float = 500e-6
    i_refr_nominal: float = 1e-10
    i_min_off: float = 20e-12
    i_level_ref: float = 1e-12
    f_pr_per_amp: float = 1e16
    f_pr_cap_per_amp: float = 1e13
    f_sf_per_amp: float = 100.0 / 15e-12
    # stationary RMS (log-e) of the photoreceptor bias transistor noise
    pr_noise_sigma: float = 0.07
    leak_rate_dark: float = 0.05
    leak_lux_scale: float = 1.0
    mismatch_sigma_theta: float = 0.03
    mismatch_sigma_leak: float = 0.30

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in ("mismatch_sigma_theta", "mismatch_sigma_leak", "pr_noise_sigma", "leak_rate_dark"):
                ok = value >= 0
            else:
                ok = value > 0
            if not (ok and math.isfinite(value)):
                raise ConfigError(f"PixelParams.{f.name} out of range: {value!r}")
        if self.kappa > 1:
            raise ConfigError(f"kappa must lie in (0, 1], got {self.kappa}")

    @property
    def log_scale(self) -> float:
        """Volts per log-e unit at the photoreceptor output (U_T / kappa)."""
        return self.u_t / self.kappa

    def replace(self, **changes) -> "PixelParams":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PixelParams":
        return _from_dict(cls, d)


def _from_dict(cls, d):
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**{k: float(v) for k, v in d.items()})
