"""Fused per-step pixel update, compiled with numba.

Mirrors :func:`evpix.pixel.advance` plus noise generation. Both the
single-pixel and the array paths call this, so they are bit-identical.
"""

import math

import numba as nb
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_GOLDEN2 = np.uint64(0x3C6EF372FE94F82A)  # 2 * golden mod 2**64
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@nb.njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@nb.njit(cache=True, inline="always")
def normal(key, counter):
    base = key + counter * _GOLDEN2
    # 53-bit values fit int64, whose float conversion is cheaper than uint64's
    u1 = (float(np.int64(_mix64(base) >> np.uint64(11))) + 1.0) * 1.1102230246251565e-16
    u2 = (float(np.int64(_mix64(base + _GOLDEN) >> np.uint64(11))) + 1.0) * 1.1102230246251565e-16
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@nb.njit(cache=True)
def normals_block(keys, counter):
    out = np.empty(keys.shape[0])
    for i in range(keys.shape[0]):
        out[i] = normal(keys[i], np.uint64(counter))
    return out


@nb.njit(cache=True)
def step(
    v_pr, v_sf, v_ref, t_reset, until, held, keys, counter,
    target, alpha1, noise_std, alpha2, t, theta_on, theta_off, leak, refractory, log_scale,
    noise_on, fired,
):
    """Advance all pixels one step. ``fired`` receives +1/-1/0; returns count.

    Per-pixel inputs are 1-D arrays (use stride-0 views to broadcast).
    """
    n = v_pr.shape[0]
    count = 0
    c = np.uint64(counter)
    for i in range(n):
        x = target[i]
        if noise_on:
            x += noise_std[i] * normal(keys[i], c)
        v_pr[i] += alpha1[i] * (x - v_pr[i])
        v_sf[i] += alpha2 * (v_pr[i] - v_sf[i])
        fired[i] = 0
        if held[i]:
            if t >= until[i]:
                v_ref[i] = v_sf[i]
                t_reset[i] = until[i]
                held[i] = False
            continue
        delta = (v_sf[i] - v_ref[i]) / log_scale
        drift = theta_on[i] * leak[i] * (t - t_reset[i])
        # no floor at 0: the drift keeps pushing as a drifting v_diff would
        if delta >= theta_on[i] - drift:
            fired[i] = 1
        elif delta <= -(theta_off[i] + drift):
            fired[i] = -1
        else:
            continue
        until[i] = t + refractory
        held[i] = True
        count += 1
    return count


@nb.njit(cache=True)
def run(
    v_pr, v_sf, v_ref, t_reset, until, held, keys, counter,
    target, alpha1, noise_std, alpha2, t0, dt, n_first, n_last, theta_on, theta_off, leak, refractory,
    log_scale, noise_on, fired, out_n, out_i, out_p,
):
    """Steps ``n_first..n_last`` (t = t0 + n*dt) with fixed inputs.

    Events go to the ``out_*`` buffers as (step, pixel, polarity). Stops
    early when the buffers could overflow on the next step. Returns the last
    step done and the number of events written.
    """
    npix = v_pr.shape[0]
    cap = out_n.shape[0]
    k = 0
    n = n_first - 1
    while n < n_last and k + npix <= cap:
        n += 1
        step(
            v_pr, v_sf, v_ref, t_reset, until, held, keys, counter + (n - n_first),
            target, alpha1, noise_std, alpha2, t0 + n * dt, theta_on, theta_off, leak, refractory, log_scale,
            noise_on, fired,
        )
        for i in range(npix):
            if fired[i] != 0:
                out_n[k] = n
                out_i[k] = i
                out_p[k] = fired[i]
                k += 1
    return n, k


@nb.njit(cache=True)
def count(
    v_pr, v_sf, v_ref, t_reset, until, held, keys, counter,
    target, alpha1, noise_std, alpha2, t0, dt, n_first, n_last, theta_on, theta_off, leak, refractory,
    log_scale, noise_on, fired, on_counts, off_counts,
):
    """Like :func:`run` but only tallies events per pixel."""
    npix = v_pr.shape[0]
    for n in range(n_first, n_last + 1):
        step(
            v_pr, v_sf, v_ref, t_reset, until, held, keys, counter + (n - n_first),
            target, alpha1, noise_std, alpha2, t0 + n * dt, theta_on, theta_off, leak, refractory, log_scale,
            noise_on, fired,
        )
        for i in range(npix):
            if fired[i] > 0:
                on_counts[i] += 1
            elif fired[i] < 0:
                off_counts[i] += 1
