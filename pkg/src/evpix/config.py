"""Config documents.

Two formats:

* the JSON simulation document, versioned by a top-level
  ``"evpix_config_version": 1`` with ``array``, ``bias``, ``params`` and
  optional ``stimulus`` sections;
* a flat ``key = value`` text file holding just a :class:`BiasConfig`.

Unknown keys are errors in both, so a misspelled bias name never passes
silently.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from evpix.array import ArrayConfig
from evpix.errors import ConfigError
from evpix.params import BiasConfig, PixelParams
from evpix.stimulus import Stimulus

CONFIG_VERSION = 1
VERSION_KEY = "evpix_config_version"
SEED_ENV = "EVPIX_SEED"

_ARRAY_KEYS = {f.name for f in fields(ArrayConfig)} - {"bias", "params"}
_TOP_KEYS = {VERSION_KEY, "array", "bias", "params", "stimulus"}


@dataclass(frozen=True)
class SimConfig:
    array: ArrayConfig
    stimulus: Stimulus | None = None


def seed_override(default: int) -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return default
    try:
        return int(raw, 0)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV}={raw!r} is not an integer") from exc


def from_document(doc: dict, base_dir=None) -> SimConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    version = doc.get(VERSION_KEY)
    if version != CONFIG_VERSION:
        raise ConfigError(f"{VERSION_KEY} must be {CONFIG_VERSION}, got {version!r}")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

    arr = dict(doc.get("array", {}))
    bad = set(arr) - _ARRAY_KEYS
    if bad:
        raise ConfigError(f"unknown array keys: {sorted(bad)}")
    arr["seed"] = seed_override(int(arr.get("seed", 0)))
    cfg = ArrayConfig(
        bias=BiasConfig.from_dict(doc.get("bias", {})),
        params=PixelParams.from_dict(doc.get("params", {})),
        **arr,
    )
    stim = doc.get("stimulus")
    return SimConfig(cfg, Stimulus.from_dict(stim, base_dir) if stim is not None else None)


def to_document(cfg: ArrayConfig, stimulus: Stimulus | None = None) -> dict:
    doc = {
        VERSION_KEY: CONFIG_VERSION,
        "array": {k: getattr(cfg, k) for k in sorted(_ARRAY_KEYS)},
        "bias": cfg.bias.to_dict(),
        "params": cfg.params.to_dict(),
    }
    if stimulus is not None:
        doc["stimulus"] = stimulus.to_dict()
    return doc


def load(path) -> SimConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return from_document(doc, base_dir=path.parent)


def save(path, cfg: ArrayConfig, stimulus: Stimulus | None = None) -> None:
    Path(path).write_text(json.dumps(to_document(cfg, stimulus), indent=2) + "\n")


def load_stimulus(path) -> Stimulus:
    """A stimulus file is either a bare stimulus object or a full config with one."""
    path = Path(path)
    doc = json.loads(path.read_text())
    if VERSION_KEY in doc:
        sim = from_document(doc, base_dir=path.parent)
        if sim.stimulus is None:
            raise ConfigError(f"{path}: no stimulus section")
        return sim.stimulus
    return Stimulus.from_dict(doc, base_dir=path.parent)


# -- flat bias text ---------------------------------------------------------


def bias_to_text(bias: BiasConfig) -> str:
    return "".join(f"{k} = {v!r}\n" for k, v in bias.to_dict().items())


def bias_from_text(text: str) -> BiasConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key}")
        try:
            values[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {value.strip()!r} is not a number") from exc
    return BiasConfig.from_dict(values)
