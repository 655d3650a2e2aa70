import json

import numpy as np
import pytest

from evpix import config, eventio, stimulus
from evpix.array import ArrayConfig
from evpix.cli import main
from evpix.pgm import read_pgm

SIX = ["--data-priority", "sparse", "--sensor-motion", "static", "--background-illumination", "bright",
       "--object-size", "large", "--object-contrast", "high", "--object-speed", "slow"]


@pytest.fixture
def disk(tmp_path):
    stim = stimulus.rotating_disk(24, 24, 600, [(6, 0.0, 2, 1.0)], 1.0, duration=0.05)
    config.save(tmp_path / "c.json", ArrayConfig(24, 24, seed=1), stim)
    (tmp_path / "disk.json").write_text(json.dumps(stim.to_dict()))
    return tmp_path


def test_simulate_and_render(disk):
    assert main(["simulate", "--config", str(disk / "c.json"), "--stimulus", str(disk / "disk.json"),
                 "--out", str(disk / "ev.bin")]) == 0
    assert (disk / "ev.bin").read_bytes()[:8] == b"EVPX0001"
    stream = eventio.read_events(disk / "ev.bin")
    assert len(stream) > 0
    assert main(["render", "--in", str(disk / "ev.bin"), "--window-ms", "10", "--full-scale", "3",
                 "--out-dir", str(disk / "frames")]) == 0
    frames = sorted((disk / "frames").glob("*.pgm"))
    assert len(frames) >= 4
    img = read_pgm(frames[0])
    assert img.shape == (24, 24) and img.max() > 128


def test_simulate_csv_and_seed(disk):
    out = disk / "ev.csv"
    assert main(["simulate", "--stimulus", str(disk / "disk.json"), "--out", str(out), "--seed", "5"]) == 0
    assert out.read_text().splitlines()[1] == "t_us,x,y,polarity"


def test_recommend(tmp_path, capsys):
    assert main(["recommend", *SIX, "--emit-config", str(tmp_path / "r.json")]) == 0
    out = capsys.readouterr().out
    assert "bandwidth:   slow" in out and "sensitivity: low" in out and "refractory:  long" in out
    sim = config.load(tmp_path / "r.json")
    assert sim.array.bias.threshold_tweak == 0.5
    assert sim.array.bias.i_sf == pytest.approx(15e-12 * 0.25)


def test_sweep_tables(tmp_path):
    assert main(["sweep", "refractory", "--out", str(tmp_path / "r.csv")]) == 0
    assert (tmp_path / "r.csv").read_text().count("\n") > 5
    assert main(["sweep", "illuminance", "--size", "4", "--duration", "1", "--grid", "0.1", "100",
                 "--out", str(tmp_path / "l.dat"), "--gnuplot"]) == 0


def test_stimulus_preview(disk):
    assert main(["stimulus", "--stimulus", str(disk / "disk.json"), "--fps", "100", "--out-dir", str(disk / "p")]) == 0
    imgs = sorted((disk / "p").glob("*.pgm"))
    assert len(imgs) == 5 and read_pgm(imgs[0]).max() == 255


def test_trace(tmp_path, capsys):
    assert main(["trace", "--out", str(tmp_path / "t.csv"), "--theta-on", "0.16", "--theta-off", "0.34"]) == 0
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,e_lux,v_pr,v_sf,v_diff,event"
    marks = [line.split()[1] for line in capsys.readouterr().out.splitlines()]
    assert marks == ["OFF", "ON", "ON"]


def test_exit_codes(tmp_path, capsys):
    assert main(["bogus"]) == 2
    err = capsys.readouterr().err.strip().splitlines()[-1]
    assert json.loads(err)["error"] == "UsageError"
    assert main(["recommend", "--data-priority", "sparse"]) == 2
    assert main(["render", "--in", str(tmp_path / "missing.bin")]) == 1
    err = capsys.readouterr().err.strip().splitlines()[-1]
    assert json.loads(err)["error"] == "FileNotFoundError"
    (tmp_path / "bad.json").write_text('{"evpix_config_version": 1, "bias": {"i_prr": 1}}')
    assert main(["simulate", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path / "x.bin")]) == 1
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "ConfigError"
