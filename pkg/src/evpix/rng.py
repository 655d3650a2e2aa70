"""Counter-based random numbers.

Every draw is a pure function of (key, counter), so a pixel's noise does
not depend on which worker simulates it or in what order. Keys come from
(seed, x, y, stream) through the splitmix64 finalizer.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 2.0**-53

STREAM_NOISE = 0
STREAM_THETA_ON = 1
STREAM_THETA_OFF = 2
STREAM_LEAK = 3


def mix64(z):
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def pixel_key(seed, x, y, stream=STREAM_NOISE):
    """64-bit stream key for pixel (x, y). Broadcasts over array inputs."""
    seed = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    x = np.asarray(x, dtype=np.uint64)
    y = np.asarray(y, dtype=np.uint64)
    with np.errstate(over="ignore"):
        lane = x | (y << np.uint64(24)) | (np.uint64(stream) << np.uint64(48))
        return mix64(mix64(seed + _GOLDEN) ^ mix64(lane * _GOLDEN + np.uint64(1)))


def _uniform(bits):
    # (0, 1], never 0 so log() is safe
    return ((bits >> _S11).astype(np.float64) + 1.0) * _TWO_M53


def normals(key, counter):
    """Standard normal draw for each (key, counter) pair, broadcasting."""
    key = np.asarray(key, dtype=np.uint64)
    counter = np.asarray(counter, dtype=np.uint64)
    with np.errstate(over="ignore"):
        base = key + counter * (_GOLDEN + _GOLDEN)
        u1 = _uniform(mix64(base))
        u2 = _uniform(mix64(base + _GOLDEN))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def lognormal_factors(seed, x, y, stream, sigma):
    """Median-one log-normal factors exp(sigma * z), one per (x, y)."""
    if sigma == 0:
        return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)
    return np.exp(sigma * normals(pixel_key(seed, x, y, stream), 0))
