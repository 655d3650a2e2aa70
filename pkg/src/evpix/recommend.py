"""Rule-based bias recommendation from six task and scene criteria.

The rules live in ``data/rules.txt`` as additive votes, so weights can be
edited without touching code. Every one of the 64 criteria combinations
maps to a level on three axes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path
from typing import NamedTuple

from evpix.bias import derive
from evpix.errors import ConfigError, IncompleteMapping
from evpix.params import BiasConfig, PixelParams

CRITERIA = {
    "data_priority": ("high_fidelity", "sparse"),
    "sensor_motion": ("static", "moving"),
    "background_illumination": ("bright", "dim"),
    "object_size": ("large", "small"),
    "object_contrast": ("high", "low"),
    "object_speed": ("fast", "slow"),
}
# axis -> levels from negative to positive vote sum
AXES = {
    "sensitivity": ("low", "mid", "high"),
    "bandwidth": ("slow", "mid", "fast"),
    "refractory": ("long", "mid", "short"),
}


@dataclass(frozen=True)
class ScenarioCriteria:
    data_priority: str
    sensor_motion: str
    background_illumination: str
    object_size: str
    object_contrast: str
    object_speed: str

    def __post_init__(self):
        for name, allowed in CRITERIA.items():
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")

    def flipped(self, name) -> "ScenarioCriteria":
        a, b = CRITERIA[name]
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        values[name] = b if values[name] == a else a
        return ScenarioCriteria(**values)

    @classmethod
    def all(cls):
        for combo in itertools.product(*CRITERIA.values()):
            yield cls(*combo)


@dataclass(frozen=True)
class BiasRecommendation:
    bandwidth: str
    sensitivity: str
    refractory: str
    rationale: tuple[str, ...]

    def level_index(self, axis) -> int:
        """-1, 0 or +1 in the axis's positive direction."""
        return AXES[axis].index(getattr(self, axis)) - 1


class Rule(NamedTuple):
    criterion: str
    value: str
    axis: str
    vote: int
    reason: str


def parse_rules(text: str) -> list[Rule]:
    rules = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 4)
        if len(parts) < 5:
            raise ConfigError(f"rules line {lineno}: expected criterion value axis vote reason")
        crit, value, axis, vote, reason = parts
        if crit not in CRITERIA or value not in CRITERIA[crit]:
            raise ConfigError(f"rules line {lineno}: unknown criterion value {crit}={value}")
        if axis not in AXES:
            raise ConfigError(f"rules line {lineno}: unknown axis {axis}")
        rules.append(Rule(crit, value, axis, int(vote), reason))
    _check_steps(rules)
    return rules


def _check_steps(rules):
    for crit, values in CRITERIA.items():
        for axis in AXES:
            a, b = (sum(r.vote for r in rules if (r.criterion, r.value, r.axis) == (crit, v, axis)) for v in values)
            if abs(a - b) > 1:
                raise ConfigError(f"{crit} moves {axis} by {abs(a - b)} votes; at most 1 allowed")


def default_rules() -> list[Rule]:
    return parse_rules(resources.files("evpix").joinpath("data/rules.txt").read_text())


class Recommender:
    def __init__(self, rules: list[Rule] | None = None):
        self.rules = default_rules() if rules is None else rules
        self._table = {c: self._evaluate(c) for c in ScenarioCriteria.all()}

    @classmethod
    def from_file(cls, path) -> "Recommender":
        return cls(parse_rules(Path(path).read_text()))

    def _evaluate(self, c: ScenarioCriteria) -> BiasRecommendation:
        totals = dict.fromkeys(AXES, 0)
        why = []
        for r in self.rules:
            if getattr(c, r.criterion) == r.value:
                totals[r.axis] += r.vote
                direction = AXES[r.axis][2 if r.vote > 0 else 0]
                why.append(f"{r.criterion}={r.value}: {direction} {r.axis} ({r.reason})")
        levels = {axis: AXES[axis][1 + (s > 0) - (s < 0)] for axis, s in totals.items()}
        if not why:
            why.append("no rule fired; all axes stay mid")
        return BiasRecommendation(rationale=tuple(why), **levels)

    def __call__(self, criteria: ScenarioCriteria) -> BiasRecommendation:
        return self._table[criteria]

    def table(self) -> dict:
        return dict(self._table)


_DEFAULT = None


def recommend(criteria: ScenarioCriteria) -> BiasRecommendation:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Recommender()
    return _DEFAULT(criteria)


class Tweaks(NamedTuple):
    threshold_tweak: float
    bandwidth_scaler: float  # multiplies i_sf
    max_firing_rate_tweak: float


DEFAULT_MAPPING = {
    "sensitivity": {"low": 0.5, "mid": 0.0, "high": -0.5},
    "bandwidth": {"slow": 0.25, "mid": 1.0, "fast": 4.0},
    "refractory": {"long": -0.5, "mid": 0.0, "short": 0.5},
}


def to_tweaks(rec: BiasRecommendation, mapping: dict = DEFAULT_MAPPING) -> Tweaks:
    for axis, levels in AXES.items():
        missing = [lv for lv in levels if lv not in mapping.get(axis, {})]
        if missing:
            raise IncompleteMapping(f"mapping for {axis} lacks {missing}")
    return Tweaks(
        float(mapping["sensitivity"][rec.sensitivity]),
        float(mapping["bandwidth"][rec.bandwidth]),
        float(mapping["refractory"][rec.refractory]),
    )


def recommended_bias(
    rec: BiasRecommendation, base: BiasConfig = BiasConfig(), mapping: dict = DEFAULT_MAPPING,
    params: PixelParams = PixelParams(),
) -> BiasConfig:
    """``base`` with the tweaks applied and i_sf scaled; i_pr is left at its (high) base value."""
    tw = to_tweaks(rec, mapping)
    if not (tw.bandwidth_scaler > 0 and math.isfinite(tw.bandwidth_scaler)):
        raise ConfigError(f"bandwidth scaler must be positive, got {tw.bandwidth_scaler}")
    bias = base.replace(
        i_sf=base.i_sf * tw.bandwidth_scaler,
        threshold_tweak=tw.threshold_tweak,
        max_firing_rate_tweak=tw.max_firing_rate_tweak,
    )
    derive(bias, params)  # raises if the result is not a usable pixel
    return bias
