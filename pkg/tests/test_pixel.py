import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evpix import rng
from evpix.bias import bias_for_refractory, derive
from evpix.errors import SamplingTooCoarse
from evpix.params import BiasConfig, PixelParams
from evpix.pixel import (
    OFF,
    ON,
    PixelState,
    advance,
    bandwidth_poles,
    effective_thresholds,
    kernel_step,
    leak_rate,
    log_photoreceptor_gain,
    max_dt,
    noise_step_std,
    photocurrent,
    photoreceptor_voltage,
    pixel_bandwidth,
    pole_alpha,
    shot_noise_sigma,
    step_pixel,
)

P = PixelParams()
B = BiasConfig()


def run_pixel(lux_fn, duration, dt, bias=B, params=P, leak=0.0, noise=False, seed=0):
    """Step one pixel through lux_fn(t) and collect its events."""
    d = derive(bias, params)
    state = PixelState.initial(lux_fn(0.0), params, seed=seed)
    events = []
    for n in range(1, int(round(duration / dt)) + 1):
        t = n * dt
        state, ev = step_pixel(state, lux_fn(t), t, dt, bias, params, leak_rate=leak, noise_enabled=noise, derived=d)
        events += ev
    return events


def test_photoreceptor_voltage_dark():
    assert photoreceptor_voltage(0.0, P) == pytest.approx(math.log(0.002) / 30)
    assert photoreceptor_voltage(0.0, P, v_p0=0.5) == pytest.approx(0.5 + math.log(0.002) / 30)


def test_doubling_gives_23mv():
    dv = photoreceptor_voltage(2000.0, P) - photoreceptor_voltage(1000.0, P)
    assert dv == pytest.approx(0.0231, rel=1e-2)
    assert log_photoreceptor_gain(P) == pytest.approx(math.log(2) / 30)


def test_dark_flattening():
    e = np.logspace(-3, -2, 5)
    slope = np.diff(photoreceptor_voltage(e, P)) / np.diff(np.log(e))
    assert np.all(slope < P.log_scale * 0.95)


def test_photocurrent_affine():
    assert photocurrent(0.0, P) == pytest.approx(P.k_lux_to_amps * P.e_dark)
    p25 = P.replace(k_lux_to_amps=25e-15)
    assert photocurrent(1.0, p25) == pytest.approx(25e-15, rel=0.01)
    i0, i1, i2 = photocurrent([0.0, 3.0, 6.0], P)
    assert i2 - i1 == pytest.approx(i1 - i0)


def test_bandwidth_poles():
    big = BiasConfig(i_pr=1e-6)
    f1a, _ = bandwidth_poles(10.0, big, P)
    f1b, _ = bandwidth_poles(20.0, big, P)
    assert f1b / f1a == pytest.approx((20 + P.e_dark) / (10 + P.e_dark))
    tiny = BiasConfig(i_pr=1e-13)
    assert bandwidth_poles(10.0, tiny, P)[0] == bandwidth_poles(100.0, tiny, P)[0]
    assert bandwidth_poles(1.0, B.replace(i_sf=30e-12), P)[1] == pytest.approx(2 * bandwidth_poles(1.0, B, P)[1])
    assert pixel_bandwidth(1e4, B, P) == pytest.approx(100.0)


def test_shot_noise_regimes():
    tiny = BiasConfig(i_pr=1e-14)
    # capped f1: quadrupling i_p halves sigma (e_dark made negligible)
    p = P.replace(e_dark=1e-9)
    assert shot_noise_sigma(4.0, tiny, p) == pytest.approx(shot_noise_sigma(1.0, tiny, p) / 2, rel=1e-6)
    big = BiasConfig(i_pr=1e-6)
    assert shot_noise_sigma(0.1, big, P) == pytest.approx(shot_noise_sigma(0.2, big, P))


def test_leak_rate():
    assert leak_rate(0.0, P) == P.leak_rate_dark
    assert leak_rate(P.leak_lux_scale, P) == pytest.approx(2 * P.leak_rate_dark)
    assert leak_rate(2e4, P) / leak_rate(1e4, P) == pytest.approx(2.0, rel=0.05)


def test_effective_thresholds():
    assert effective_thresholds(0.0, 0.25, 0.3, 2.0) == (0.25, 0.3)
    on, off = effective_thresholds(0.5, 0.25, 0.3, 2.0)
    assert on == pytest.approx(0.0) and off == pytest.approx(0.55)
    on, _ = effective_thresholds(0.25, 0.25, 0.3, 2.0)
    assert on == pytest.approx(0.125)
    assert effective_thresholds(5.0, 0.25, 0.3, 2.0)[0] == 0.0


def test_sampling_guard():
    f1, f2 = bandwidth_poles(1.0, B, P)
    s = PixelState.initial(1.0, P)
    with pytest.raises(SamplingTooCoarse):
        step_pixel(s, 1.0, 1.0, 2 * max_dt(f1, f2), B, P)


def test_constant_input_is_silent():
    assert run_pixel(lambda t: 0.5, 0.5, 1e-4) == []


@pytest.mark.parametrize("k", [1, 2, 3])
def test_log_step_gives_k_events(k):
    # a 20 ms log ramp is a step as far as the count is concerned, yet
    # slow next to both poles and the 100 us refractory period
    d = derive(B, P)
    bias = bias_for_refractory(1e-4, B)
    size = (k + 0.5) * d.theta_on
    lux = lambda t: 0.5 * math.exp(size * min(max(t - 0.01, 0.0) / 0.02, 1.0))
    ev = run_pixel(lux, 0.1, 50e-6, bias=bias)
    assert [e.polarity for e in ev] == [ON] * k
    assert np.all(np.diff([e.t for e in ev]) >= 100)


def test_leak_events_at_fixed_rate():
    r = 20.0
    bias = bias_for_refractory(1e-4, B)
    ev = run_pixel(lambda t: 0.5, 100 / r * 0.05, 1e-4, bias=bias, leak=r)
    n_expected = (100 / r * 0.05) / (1 / r + 1e-4)
    assert abs(len(ev) - n_expected) <= 1
    assert all(e.polarity == ON for e in ev)


def test_refractory_blocks_events():
    bias = bias_for_refractory(5e-3, B)
    lux = lambda t: 0.02 * math.exp(3.0 * min(t, 0.01) / 0.01)
    ev = run_pixel(lux, 0.05, 20e-6, bias=bias)
    assert np.all(np.diff([e.t for e in ev]) >= 5000)


def test_step_is_reproducible():
    s = PixelState.initial(0.04, P, seed=3, x=1, y=2)
    a, ea = step_pixel(s, 0.04, 1e-3, 1e-3, B, P, noise_enabled=True)
    b, eb = step_pixel(s, 0.04, 1e-3, 1e-3, B, P, noise_enabled=True)
    assert np.array_equal(a.v_pr, b.v_pr) and ea == eb
    assert s.counter == 0 and a.counter == 1


def test_kernel_matches_numpy_reference():
    n = 64
    d = derive(B, P)
    e = np.full(n, 0.04)
    x = np.arange(n)
    f1, f2 = bandwidth_poles(e, B, P)
    dt = 0.5e-3
    a1, a2 = pole_alpha(f1, dt), float(pole_alpha(f2, dt))
    std = noise_step_std(e, a1, B, P)
    theta = np.full(n, 0.08)
    ref = PixelState.initial(e, P, seed=7, x=x, y=0)
    fast = ref.copy()
    target = photoreceptor_voltage(e, P)
    total = 0
    for k in range(1, 2001):
        t = k * dt
        noise = std * rng.normals(ref.rng_key, ref.counter)
        on, off = advance(ref, target, noise, a1, a2, t, theta, theta, 0.5, 2e-3, P.log_scale)
        fired = kernel_step(fast, target, a1, std, a2, t, theta, theta, 0.5, 2e-3, P.log_scale, True)
        assert np.array_equal(fired, on.astype(np.int8) - off.astype(np.int8))
        total += np.count_nonzero(fired)
    assert np.allclose(fast.v_sf, ref.v_sf, rtol=0, atol=1e-12)
    assert total > 50


def test_v_sf_quieter_than_v_pr():
    from evpix.stimulus import constant
    from evpix.trace import trace_pixel

    tr = trace_pixel(constant(1, 1, 0.5, 1.0), bias=B.replace(i_sf=2e-12, i_on=1e-6, i_off=2e-11),
                     noise_enabled=True)
    assert np.std(tr.v_sf[100:]) < np.std(tr.v_pr[100:])


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 1000.0), st.integers(0, 2**32))
def test_initial_state_invariants(lux, seed):
    s = PixelState.initial(lux, P, seed=seed)
    assert np.all(s.in_refractory_until >= s.t_last_reset)
    assert s.v_pr[0] == pytest.approx(float(photoreceptor_voltage(lux, P)))
