import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from evpix import stimulus as S
from evpix.errors import BadFrameFormat, ConfigError, InconsistentDimensions, InvalidGeometry, OutOfBounds
from evpix.pgm import read_pgm, read_pgm_all, write_pgm


def test_constant():
    s = S.constant(4, 3, 1.0, 15.0)
    assert s.sample(2, 1, 0.5) == 15.0
    assert np.all(s.field(0.3) == 15.0)


def test_log_sine_ratio_and_mean():
    s = S.log_sine(1, 1, 1.0, 2.0, 5.0, 0.62)
    e = np.array([s.sample(0, 0, t) for t in np.linspace(0, 1, 4001)])
    assert e.max() / e.min() == pytest.approx(math.exp(0.62), rel=1e-4)
    t = np.linspace(0, 1, 10001)[:-1]
    assert np.mean(s.log_gain(t)) == pytest.approx(0.0, abs=1e-12)


def test_log_step_and_ramp():
    s = S.log_step(1, 1, 1.0, 2.0, 0.5, 0.7)
    assert s.sample(0, 0, 0.49) == 2.0
    assert s.sample(0, 0, 0.5) == pytest.approx(2.0 * math.exp(0.7))
    r = S.log_ramp(1, 1, 1.0, 1.0, 2.0, t0=0.25)
    assert r.sample(0, 0, 0.2) == 1.0
    assert r.sample(0, 0, 0.75) == pytest.approx(math.exp(1.0))
    assert r.max_lux() == pytest.approx(math.exp(1.5))


def test_log_pwl_and_square():
    s = S.log_pwl(1, 1, 1.0, [0, 1, 2], [0, 1, -1])
    assert s.duration == 2
    assert s.sample(0, 0, 0.5) == pytest.approx(math.exp(0.5))
    assert s.sample(0, 0, 1.5) == pytest.approx(1.0)
    q = S.log_square(1, 1, 1.0, 1.0, 10.0, 2.0)
    assert q.sample(0, 0, 0.01) == pytest.approx(math.e)
    assert q.sample(0, 0, 0.06) == pytest.approx(1 / math.e)
    with pytest.raises(ConfigError):
        S.log_pwl(1, 1, 1.0, [0, 0], [0, 1])


def test_bounds():
    s = S.constant(4, 3, 1.0, 1.0)
    with pytest.raises(OutOfBounds):
        s.sample(4, 0, 0.0)
    with pytest.raises(OutOfBounds):
        s.sample(0, 0, 1.5)
    with pytest.raises(ConfigError):
        S.Stimulus("bogus", 1, 1, 1.0)


def test_disk_speed_and_period():
    assert S.edge_speed_px_s(125, 1.0) == pytest.approx(13.09, abs=0.01)
    s = S.rotating_disk(64, 64, 125, [(20, 0.0, 3, 1.0)], 1.0)
    assert s.duration == pytest.approx(0.48)
    assert s.max_lux() == pytest.approx(math.e)
    # dot starts at +x of centre
    assert s.sample(int(31.5 + 20), 31, 0.0) == pytest.approx(math.e)
    assert s.sample(5, 5, 0.0) == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 63), st.integers(0, 63), st.floats(0.0, 0.2))
def test_disk_periodic(x, y, t):
    s = S.rotating_disk(64, 64, 125, [(20, 0.3, 3, 1.0), (10, 2.0, 2, -0.5)], 1.0, duration=1.0)
    assert s.sample(x, y, t) == pytest.approx(s.sample(x, y, t + 0.48))


def test_zero_contrast_dot_is_invisible():
    s = S.rotating_disk(32, 32, 60, [(8, 0.0, 3, 0.0)], 2.0)
    assert np.all(s.field(0.1) == 2.0)


def test_disk_geometry_checked():
    with pytest.raises(InvalidGeometry):
        S.rotating_disk(32, 32, 60, [(14, 0.0, 4, 1.0)], 1.0)
    with pytest.raises(InvalidGeometry):
        S.rotating_disk(32, 32, 0, [(4, 0.0, 2, 1.0)], 1.0)


def test_smooth_edges_are_fractional():
    s = S.rotating_disk(32, 32, 60, [(8, 0.0, 3.2, 1.0)], 1.0, smooth_edges=True)
    g = np.log(s.field(0.0))
    assert np.any((g > 0.01) & (g < 0.99))


def test_frames(tmp_path):
    write_pgm(tmp_path / "a.pgm", np.zeros((3, 4), np.uint8))
    write_pgm(tmp_path / "b.pgm", np.full((3, 4), 128, np.uint8))
    s = S.frames_stimulus(tmp_path, 10.0, 0.1)
    assert s.sample(0, 0, 0.0) == 0.0
    assert s.sample(0, 0, 0.15) == pytest.approx(12.8)
    assert s.sample(0, 0, 0.05) == 0.0
    si = S.frames_stimulus(tmp_path, 10.0, 0.1, interpolate=True)
    assert si.sample(0, 0, 0.05) == pytest.approx(6.4)


def test_frames_errors(tmp_path):
    write_pgm(tmp_path / "a.pgm", np.zeros((3, 4), np.uint8))
    write_pgm(tmp_path / "b.pgm", np.zeros((4, 4), np.uint8))
    with pytest.raises(InconsistentDimensions):
        S.frames_stimulus(tmp_path, 10.0, 0.1)
    (tmp_path / "c.pgm").write_bytes(b"P2\n1 1\n255\n0\n")
    with pytest.raises(BadFrameFormat):
        read_pgm(tmp_path / "c.pgm")


def test_pgm_round_trip(tmp_path):
    img8 = np.arange(12, dtype=np.uint8).reshape(3, 4)
    img16 = (np.arange(12, dtype=np.uint16) * 5000).reshape(3, 4)
    write_pgm(tmp_path / "a.pgm", img8)
    write_pgm(tmp_path / "b.pgm", img16)
    assert np.array_equal(read_pgm(tmp_path / "a.pgm"), img8)
    assert np.array_equal(read_pgm(tmp_path / "b.pgm"), img16)
    (tmp_path / "m.pgm").write_bytes((tmp_path / "a.pgm").read_bytes() * 2)
    assert len(read_pgm_all(tmp_path / "m.pgm")) == 2


def test_dict_round_trip():
    for s in (S.log_sine(2, 2, 1.0, 3.0, 5.0, 0.62), S.rotating_disk(32, 32, 125, [(8, 0.0, 2, 1.0)], 1.0)):
        t = S.Stimulus.from_dict(s.to_dict())
        assert t.kind == s.kind and np.array_equal(t.field(0.1), s.field(0.1))
