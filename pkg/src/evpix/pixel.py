"""Single-pixel signal path: log photoreceptor, two low-pass poles, shot
noise, change detection with leak drift, reset and refractory hold.

One compiled step kernel drives both a single pixel (:func:`step_pixel`)
and flat blocks of the array, so the two paths agree bit for bit.
:func:`advance` is a plain-numpy reference of the same update.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from evpix import _kernel, rng
from evpix.bias import DerivedPixelParams, derive
from evpix.errors import SamplingTooCoarse
from evpix.params import Q_ELECTRON, BiasConfig, PixelParams

ON = 1
OFF = -1

GUARD_FRACTION = 0.1


class Event(NamedTuple):
    x: int
    y: int
    t: int  # microseconds
    polarity: int  # ON = 1, OFF = -1


def photoreceptor_voltage(e_lux, params: PixelParams = PixelParams(), v_p0: float = 0.0):
    """Steady-state photoreceptor output in volts, including the dark floor."""
    return params.log_scale * np.log(np.asarray(e_lux, dtype=float) + params.e_dark) + v_p0


def photocurrent(e_lux, params: PixelParams = PixelParams()):
    return params.k_lux_to_amps * (np.asarray(e_lux, dtype=float) + params.e_dark)


def bandwidth_poles(e_lux, bias: BiasConfig, params: PixelParams = PixelParams()):
    """(f1, f2) in Hz.

    f1 is light-proportional until the photoreceptor bias caps it; f2 is set
    by the source-follower current. The pixel bandwidth is min(f1, f2).
    """
    f1 = np.minimum(params.f_pr_per_amp * photocurrent(e_lux, params), params.f_pr_cap_per_amp * bias.i_pr)
    f2 = params.f_sf_per_amp * bias.i_sf
    return f1, f2


def pixel_bandwidth(e_lux, bias: BiasConfig, params: PixelParams = PixelParams()):
    f1, f2 = bandwidth_poles(e_lux, bias, params)
    return np.minimum(f1, f2)


def shot_noise_sigma(e_lux, bias: BiasConfig, params: PixelParams = PixelParams()):
    """RMS photocurrent shot noise at v_pr in volts: (U_T/kappa) sqrt(2 q f1 / i_p)."""
    f1, _ = bandwidth_poles(e_lux, bias, params)
    return params.log_scale * np.sqrt(2.0 * Q_ELECTRON * f1 / photocurrent(e_lux, params))


def bias_noise_sigma(e_lux, bias: BiasConfig, params: PixelParams = PixelParams()):
    """RMS noise at v_pr in volts from the photoreceptor bias transistor.

    This noise sits near the i_pr-set corner f_ipr, so once the light-limited
    f1 pole falls below that corner it passes only f1 / f_ipr of the
    amplitude. Raising i_pr pushes the noise out of band.
    """
    f1, _ = bandwidth_poles(e_lux, bias, params)
    f_ipr = params.f_pr_cap_per_amp * bias.i_pr
    return params.log_scale * params.pr_noise_sigma * (f1 / f_ipr)


def total_noise_sigma(e_lux, bias: BiasConfig, params: PixelParams = PixelParams()):
    return np.hypot(shot_noise_sigma(e_lux, bias, params), bias_noise_sigma(e_lux, bias, params))


def leak_rate(e_lux, params: PixelParams = PixelParams()):
    return params.leak_rate_dark * (1.0 + np.asarray(e_lux, dtype=float) / params.leak_lux_scale)


def effective_thresholds(tau_since_reset, theta_on, theta_off, leak_rate):
    """Leak seen as threshold drift: ON shrinks and OFF grows linearly in tau.

    The ON value is reported floored at 0. The step kernel compares against
    the unfloored value so that, with noise, a reference memorized on a high
    excursion cannot hold the pixel silent once the drift has passed zero.
    """
    drift = theta_on * leak_rate * tau_since_reset
    return np.maximum(theta_on - drift, 0.0), theta_off + drift


def pole_alpha(f, dt):
    return -np.expm1(-2.0 * np.pi * f * dt)


def max_dt(f1, f2) -> float:
    return GUARD_FRACTION / float(np.max(np.maximum(f1, f2)))


def check_dt(dt, f1, f2):
    limit = max_dt(f1, f2)
    if not dt > 0 or dt > limit * (1 + 1e-9):
        raise SamplingTooCoarse(f"dt={dt:g} s exceeds {limit:g} s (0.1 / fastest pole)")


def noise_step_std(e_lux, alpha1, bias: BiasConfig, params: PixelParams):
    """Per-step white-noise std whose f1-filtered variance is the target."""
    var = total_noise_sigma(e_lux, bias, params) ** 2
    return np.sqrt(var * (2.0 - alpha1) / alpha1)


def floor_us(t):
    return np.floor(np.asarray(t, dtype=float) * 1e6 + 1e-6).astype(np.int64)


@dataclass
class PixelState:
    """Dynamic state for one pixel or a flat block of pixels (1-D arrays)."""

    v_pr: np.ndarray
    v_sf: np.ndarray
    v_sf_at_reset: np.ndarray
    t_last_reset: np.ndarray
    in_refractory_until: np.ndarray
    held: np.ndarray
    rng_key: np.ndarray
    counter: int = 0

    @classmethod
    def initial(cls, e_lux, params: PixelParams = PixelParams(), *, seed=0, x=0, y=0, t0=0.0) -> "PixelState":
        """Settled at the steady state of ``e_lux``, just out of reset at t0."""
        v = np.array(photoreceptor_voltage(e_lux, params), dtype=float, ndmin=1)
        shape = np.broadcast(v, np.asarray(x), np.asarray(y)).shape
        v = np.broadcast_to(v, shape).ravel().copy()
        x = np.broadcast_to(np.asarray(x), shape).ravel()
        y = np.broadcast_to(np.asarray(y), shape).ravel()
        shape = v.shape
        return cls(
            v_pr=v.copy(),
            v_sf=v.copy(),
            v_sf_at_reset=v.copy(),
            t_last_reset=np.full(shape, float(t0)),
            in_refractory_until=np.full(shape, float(t0)),
            held=np.zeros(shape, dtype=bool),
            rng_key=rng.pixel_key(seed, x, y),
        )

    def copy(self) -> "PixelState":
        return dataclasses.replace(
            self, **{f.name: np.copy(getattr(self, f.name)) for f in dataclasses.fields(self) if f.name != "counter"}
        )

    def contrast(self, params: PixelParams):
        """Accumulated log-e change since the last reset."""
        return (self.v_sf - self.v_sf_at_reset) / params.log_scale

    def v_diff(self, derived: DerivedPixelParams, params: PixelParams):
        """Synthetic change-amplifier output in volts (inverting, gain amp_gain)."""
        reset_v = derived.reset_level * params.amp_gain * params.log_scale
        return reset_v - params.amp_gain * (self.v_sf - self.v_sf_at_reset)


def advance(state: PixelState, target, noise, alpha1, alpha2, t, theta_on, theta_off, leak, refractory, log_scale):
    """One integration step in plain numpy, in place; returns (on, off) masks.

    Reference implementation of the compiled kernel used for simulation.

    ``target`` is the noiseless log voltage, ``noise`` the white sample to add
    at the photoreceptor input. Pixels in refractory ignore their input; on
    release the change amplifier memorizes the current v_sf and the leak
    clock restarts at the release instant.
    """
    state.v_pr += alpha1 * (target + noise - state.v_pr)
    state.v_sf += alpha2 * (state.v_pr - state.v_sf)
    state.counter += 1

    held = state.held
    released = held & (t >= state.in_refractory_until)
    if released.any():
        state.v_sf_at_reset = np.where(released, state.v_sf, state.v_sf_at_reset)
        state.t_last_reset = np.where(released, state.in_refractory_until, state.t_last_reset)
        state.held = held = held & ~released
    active = ~(held | released)

    delta = (state.v_sf - state.v_sf_at_reset) / log_scale
    drift = theta_on * leak * (t - state.t_last_reset)
    on = active & (delta >= theta_on - drift)
    off = active & (delta <= -(theta_off + drift)) & ~on
    fired = on | off
    if fired.any():
        state.in_refractory_until = np.where(fired, t + refractory, state.in_refractory_until)
        state.held = held | fired
    return on, off


def _vec(v, n):
    return np.broadcast_to(np.asarray(v, dtype=float), (n,))


def kernel_step(state: PixelState, target, alpha1, noise_std, alpha2, t, theta_on, theta_off, leak, refractory,
                log_scale, noise_on, fired=None):
    """Run the compiled step on a flat block state in place; returns the fired codes."""
    n = state.v_pr.shape[0]
    if fired is None:
        fired = np.zeros(n, dtype=np.int8)
    _kernel.step(
        state.v_pr, state.v_sf, state.v_sf_at_reset, state.t_last_reset, state.in_refractory_until, state.held,
        state.rng_key, state.counter, _vec(target, n), _vec(alpha1, n), _vec(noise_std, n), float(alpha2), float(t),
        _vec(theta_on, n), _vec(theta_off, n), _vec(leak, n), float(refractory), float(log_scale), bool(noise_on),
        fired,
    )
    state.counter += 1
    return fired


def kernel_run(state: PixelState, target, alpha1, noise_std, alpha2, t0, dt, n_first, n_last, theta_on, theta_off,
               leak, refractory, log_scale, noise_on, chunk=1 << 16):
    """Steps ``n_first..n_last`` with fixed inputs, compiled end to end.

    Same arithmetic as calling :func:`kernel_step` at ``t0 + n*dt`` for each
    ``n``. Returns (step, pixel, polarity) arrays of the events fired.
    """
    n = state.v_pr.shape[0]
    fired = np.zeros(n, dtype=np.int8)
    cap = max(chunk, 2 * n)
    buf_n, buf_i, buf_p = np.empty(cap, np.int64), np.empty(cap, np.int64), np.empty(cap, np.int8)
    args = [_vec(v, n) for v in (target, alpha1, noise_std)]
    parts = []
    done = n_first - 1
    while done < n_last:
        first = done + 1
        done, k = _kernel.run(
            state.v_pr, state.v_sf, state.v_sf_at_reset, state.t_last_reset, state.in_refractory_until, state.held,
            state.rng_key, state.counter, *args, float(alpha2), float(t0), float(dt), first, n_last,
            _vec(theta_on, n), _vec(theta_off, n), _vec(leak, n), float(refractory), float(log_scale),
            bool(noise_on), fired, buf_n, buf_i, buf_p,
        )
        state.counter += done - first + 1
        parts.append((buf_n[:k].copy(), buf_i[:k].copy(), buf_p[:k].copy()))
    return tuple(np.concatenate([p[j] for p in parts]) for j in range(3))


def kernel_count(state: PixelState, target, alpha1, noise_std, alpha2, t0, dt, n_first, n_last, theta_on, theta_off,
                 leak, refractory, log_scale, noise_on):
    """:func:`kernel_run` that returns per-pixel (ON, OFF) counts instead of events."""
    n = state.v_pr.shape[0]
    on, off = np.zeros(n, np.int64), np.zeros(n, np.int64)
    _kernel.count(
        state.v_pr, state.v_sf, state.v_sf_at_reset, state.t_last_reset, state.in_refractory_until, state.held,
        state.rng_key, state.counter, *(_vec(v, n) for v in (target, alpha1, noise_std)), float(alpha2), float(t0),
        float(dt), n_first, n_last, _vec(theta_on, n), _vec(theta_off, n), _vec(leak, n), float(refractory),
        float(log_scale), bool(noise_on), np.zeros(n, dtype=np.int8), on, off,
    )
    state.counter += n_last - n_first + 1
    return on, off


def step_pixel(
    state: PixelState,
    e_lux: float,
    t: float,
    dt: float,
    bias: BiasConfig,
    params: PixelParams = PixelParams(),
    pixel_thresholds: tuple[float, float] | None = None,
    leak_rate: float = 0.0,
    noise_enabled: bool = False,
    *,
    derived: DerivedPixelParams | None = None,
    refractory_s: float | None = None,
    x: int = 0,
    y: int = 0,
) -> tuple[PixelState, list[Event]]:
    """Advance one pixel to time ``t`` (the end of a step of length ``dt``).

    Returns the new state and zero or one event. The noise sample is drawn
    from the state's counter-based stream, so repeated runs with the same
    state reproduce exactly.
    """
    if derived is None:
        derived = derive(bias, params)
    if pixel_thresholds is None:
        pixel_thresholds = (derived.theta_on, derived.theta_off)
    if refractory_s is None:
        refractory_s = derived.refractory_s
    f1, f2 = bandwidth_poles(e_lux, bias, params)
    check_dt(dt, f1, f2)
    a1 = pole_alpha(f1, dt)
    std = noise_step_std(e_lux, a1, bias, params) if noise_enabled else 0.0
    new = state.copy()
    fired = kernel_step(
        new, photoreceptor_voltage(e_lux, params), a1, std, pole_alpha(f2, dt), t,
        pixel_thresholds[0], pixel_thresholds[1], leak_rate, refractory_s, params.log_scale, noise_enabled,
    )
    events = [Event(x, y, int(floor_us(t)), int(code)) for code in fired if code]
    return new, events


def log_photoreceptor_gain(params: PixelParams = PixelParams()) -> float:
    """Volts per doubling of illuminance in the bright limit."""
    return params.log_scale * math.log(2.0)
