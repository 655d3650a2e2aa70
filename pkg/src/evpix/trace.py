"""Single-pixel waveform dump: every internal node at every step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from evpix.bias import derive
from evpix.params import BiasConfig, PixelParams
from evpix.pixel import (
    Event,
    PixelState,
    bandwidth_poles,
    check_dt,
    floor_us,
    kernel_step,
    leak_rate,
    max_dt,
    noise_step_std,
    photoreceptor_voltage,
    pole_alpha,
)
from evpix.stimulus import Stimulus


@dataclass
class Trace:
    t: np.ndarray
    e_lux: np.ndarray
    v_pr: np.ndarray
    v_sf: np.ndarray
    v_diff: np.ndarray
    event: np.ndarray  # +1, -1 or 0 per step

    def rows(self):
        return zip(self.t, self.e_lux, self.v_pr, self.v_sf, self.v_diff, self.event)

    def events(self, x=0, y=0) -> list[Event]:
        idx = np.flatnonzero(self.event)
        return [Event(x, y, int(floor_us(self.t[i])), int(self.event[i])) for i in idx]


def trace_pixel(
    stim: Stimulus,
    x: int = 0,
    y: int = 0,
    bias: BiasConfig = BiasConfig(),
    params: PixelParams = PixelParams(),
    *,
    dt: float | None = None,
    duration: float | None = None,
    noise_enabled: bool = False,
    leak_enabled: bool = False,
    seed: int = 0,
) -> Trace:
    """Step one pixel through ``stim`` and record v_pr, v_sf and synthetic v_diff."""
    derived = derive(bias, params)
    f1_max, f2 = bandwidth_poles(stim.max_lux(), bias, params)
    if dt is None:
        dt = max_dt(f1_max, f2)
    check_dt(dt, f1_max, f2)
    duration = stim.duration if duration is None else duration
    n = int(np.floor(duration / dt + 1e-9))
    t = np.arange(1, n + 1) * dt
    e = np.array([stim.sample(x, y, min(ti, stim.duration)) for ti in np.concatenate([[0.0], t])])

    f1, _ = bandwidth_poles(e, bias, params)
    a1 = pole_alpha(f1, dt)
    std = noise_step_std(e, a1, bias, params) if noise_enabled else np.zeros_like(e)
    lk = leak_rate(e, params) if leak_enabled else np.zeros_like(e)
    target = photoreceptor_voltage(e, params)
    a2 = float(pole_alpha(f2, dt))

    state = PixelState.initial(e[0], params, seed=seed, x=x, y=y)
    out = {k: np.empty(n) for k in ("v_pr", "v_sf", "v_diff")}
    event = np.zeros(n, dtype=np.int8)
    fired = np.zeros(1, dtype=np.int8)
    for i in range(n):
        j = i + 1
        kernel_step(
            state, target[j], a1[j], std[j], a2, t[i], derived.theta_on, derived.theta_off, lk[j],
            derived.refractory_s, params.log_scale, noise_enabled, fired,
        )
        out["v_pr"][i] = state.v_pr[0]
        out["v_sf"][i] = state.v_sf[0]
        out["v_diff"][i] = state.v_diff(derived, params)[0]
        event[i] = fired[0]
    return Trace(t, e[1:], out["v_pr"], out["v_sf"], out["v_diff"], event)
