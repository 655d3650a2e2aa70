import json

import pytest

from evpix import config, stimulus
from evpix.array import ArrayConfig
from evpix.errors import ConfigError, TweakOutOfRange
from evpix.params import BiasConfig, PixelParams


def test_document_round_trip(tmp_path):
    cfg = ArrayConfig(32, 16, seed=9, bias=BiasConfig(i_pr=30e-12, threshold_tweak=0.25), params=PixelParams(e_dark=0.003))
    stim = stimulus.log_sine(32, 16, 1.0, 2.0, 5.0, 0.62)
    config.save(tmp_path / "c.json", cfg, stim)
    sim = config.load(tmp_path / "c.json")
    assert sim.array == cfg
    assert sim.stimulus.to_dict() == stim.to_dict()
    assert json.loads((tmp_path / "c.json").read_text())["evpix_config_version"] == 1


def test_version_and_unknown_keys():
    with pytest.raises(ConfigError):
        config.from_document({"array": {}})
    with pytest.raises(ConfigError):
        config.from_document({"evpix_config_version": 2})
    with pytest.raises(ConfigError):
        config.from_document({"evpix_config_version": 1, "extra": 1})
    with pytest.raises(ConfigError):
        config.from_document({"evpix_config_version": 1, "bias": {"i_prr": 1e-9}})
    with pytest.raises(ConfigError):
        config.from_document({"evpix_config_version": 1, "array": {"widht": 3}})


def test_seed_env(monkeypatch):
    doc = {"evpix_config_version": 1, "array": {"seed": 3}}
    assert config.from_document(doc).array.seed == 3
    monkeypatch.setenv("EVPIX_SEED", "77")
    assert config.from_document(doc).array.seed == 77
    monkeypatch.setenv("EVPIX_SEED", "nope")
    with pytest.raises(ConfigError):
        config.from_document(doc)


def test_bias_text():
    b = BiasConfig(i_on=20e-9, onoff_balance_tweak=-0.5)
    assert config.bias_from_text(config.bias_to_text(b)) == b
    text = "# comment\ni_pr = 1e-9   # inline\n\ni_sf=2e-12\n"
    assert config.bias_from_text(text) == BiasConfig(i_pr=1e-9, i_sf=2e-12)
    for bad in ("i_pr 1e-9", "i_pr = x", "i_pr = 1\ni_pr = 2", "bogus = 1"):
        with pytest.raises(ConfigError):
            config.bias_from_text(bad)
    with pytest.raises(TweakOutOfRange):
        config.bias_from_text("threshold_tweak = 2")


def test_stimulus_file_forms(tmp_path):
    stim = stimulus.constant(4, 4, 1.0, 3.0)
    (tmp_path / "s.json").write_text(json.dumps(stim.to_dict()))
    assert config.load_stimulus(tmp_path / "s.json").base_lux == 3.0
    config.save(tmp_path / "c.json", ArrayConfig(4, 4), stim)
    assert config.load_stimulus(tmp_path / "c.json").kind == "constant"
    config.save(tmp_path / "n.json", ArrayConfig(4, 4))
    with pytest.raises(ConfigError):
        config.load_stimulus(tmp_path / "n.json")
