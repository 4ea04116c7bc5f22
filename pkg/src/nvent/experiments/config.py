"""Flat ``key = value`` scenario configuration.

One setting per line, dotted section keys, ``#`` starts a comment::

    scenario = flying
    geometry.D_nm = 100
    geometry.z0_nm = 5
    sweep.flying.v_inverse_s_per_m.from = 0
    sweep.flying.v_inverse_s_per_m.to = 600
    sweep.flying.v_inverse_s_per_m.num = 301

Sweep axes are declared as ``sweep.<key>.from/.to/.num`` (inclusive
linspace) or ``sweep.<key>.values = a, b, c``; the grid is their cartesian
product in declaration order.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class Scenario(enum.Enum):
    STATIC = "static"
    VIBRATING = "vibrating"
    FLYING = "flying"
    RWA_CHECK = "rwa_check"


# key -> (type, default); None default means "required by the scenarios listed below"
FLOAT, INT, BOOL, STR = float, int, bool, str
SCHEMA: dict[str, tuple[type, object]] = {
    "geometry.delta_nm": (FLOAT, 10.0),
    "geometry.D_nm": (FLOAT, 100.0),
    "geometry.z0_nm": (FLOAT, 5.0),
    "nv.t2_ms": (FLOAT, math.inf),
    "qubit1.t2_ms": (FLOAT, math.inf),
    "qubit2.t2_ms": (FLOAT, math.inf),
    "coupling.qubit_qubit": (BOOL, True),
    "time.periods": (FLOAT, 1.0),
    "time.points": (INT, 401),
    "output.maximize": (BOOL, False),
    "mode.delta_nm": (FLOAT, 0.1),
    "mode.freq_khz": (FLOAT, 100.0),
    "mode.phase": (FLOAT, math.pi / 2),
    "average.parameter": (STR, "none"),
    "average.rel_std": (FLOAT, 0.01),
    "average.backend": (STR, "quadrature"),
    "average.nodes": (INT, 33),
    "average.samples": (INT, 4096),
    "average.method": (STR, "exact"),
    "flying.v_inverse_s_per_m": (FLOAT, None),
    "flying.method": (STR, "closed_form"),
    "rwa.ratio": (FLOAT, 1000.0),
    "rwa.zeeman_over_zfs": (FLOAT, 2.0),
    "rwa.points": (INT, 0),  # 0 picks a count that resolves the lab frame
    "integrator.rtol": (FLOAT, 1e-10),
    "integrator.atol": (FLOAT, 1e-12),
    "seed": (INT, 0),
}

SCENARIO_KEYS = {
    Scenario.STATIC: {"geometry.delta_nm", "nv.t2_ms", "qubit1.t2_ms", "qubit2.t2_ms", "coupling.qubit_qubit",
                      "time.periods", "time.points", "output.maximize"},
    Scenario.VIBRATING: {"geometry.delta_nm", "coupling.qubit_qubit", "mode.delta_nm", "mode.freq_khz",
                         "mode.phase", "average.parameter", "average.rel_std", "average.backend",
                         "average.nodes", "average.samples", "average.method"},
    Scenario.FLYING: {"geometry.D_nm", "geometry.z0_nm", "nv.t2_ms", "qubit1.t2_ms", "qubit2.t2_ms",
                      "flying.v_inverse_s_per_m", "flying.method"},
    Scenario.RWA_CHECK: {"geometry.delta_nm", "coupling.qubit_qubit", "rwa.ratio", "rwa.zeeman_over_zfs",
                         "rwa.points"},
}
# short names accepted in config files
KEY_ALIASES = {"v_inverse": "flying.v_inverse_s_per_m"}

COMMON_KEYS = {"integrator.rtol", "integrator.atol", "seed"}

CHOICES = {
    "average.parameter": {"none", "omega", "delta", "phi"},
    "average.backend": {"quadrature", "montecarlo"},
    "average.method": {"exact", "first_order", "second_order_phase", "both"},
    "flying.method": {"closed_form", "numeric", "both"},
}


def _convert(key: str, raw: str):
    kind = SCHEMA[key][0]
    text = raw.strip()
    try:
        if kind is BOOL:
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if kind is INT:
            return int(text)
        if kind is FLOAT:
            return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as {kind.__name__}") from None
    if key in CHOICES and text not in CHOICES[key]:
        raise ConfigError(key, f"must be one of {sorted(CHOICES[key])}, got {text!r}")
    return text


@dataclass(frozen=True)
class SweepAxis:
    key: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: Scenario
    values: dict = field(default_factory=dict)
    sweep: tuple[SweepAxis, ...] = ()

    def __getitem__(self, key):
        if key in self.values:
            return self.values[key]
        return SCHEMA[key][1]

    def with_values(self, **updates) -> "ScenarioConfig":
        merged = dict(self.values)
        merged.update(updates)
        return ScenarioConfig(self.scenario, merged, self.sweep)

    def points(self):
        """Yield the sweep coordinates as ordered dicts (one empty dict if no axes)."""
        if not self.sweep:
            yield {}
            return
        for combo in itertools.product(*(ax.values for ax in self.sweep)):
            yield dict(zip((ax.key for ax in self.sweep), combo))

    def at(self, point: dict) -> "ScenarioConfig":
        merged = dict(self.values)
        merged.update(point)
        return ScenarioConfig(self.scenario, merged, ())


def parse_lines(lines) -> ScenarioConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        raw[key] = value
    return build_config(raw)


def parse_file(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc.strerror}") from None
    return parse_lines(text.splitlines())


def parse_overrides(items) -> dict[str, str]:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_config(raw: dict[str, str]) -> ScenarioConfig:
    raw = dict(raw)
    if "scenario" not in raw:
        raise ConfigError("scenario", "missing; expected one of static, vibrating, flying, rwa_check")
    try:
        scenario = Scenario(raw.pop("scenario").strip().lower())
    except ValueError:
        raise ConfigError("scenario", "expected one of static, vibrating, flying, rwa_check") from None
    allowed = SCENARIO_KEYS[scenario] | COMMON_KEYS

    axes: dict[str, dict[str, str]] = {}
    values = {}
    for key, text in raw.items():
        if key.startswith("sweep."):
            base, _, part = key[len("sweep."):].rpartition(".")
            if part not in ("from", "to", "num", "values") or not base:
                raise ConfigError(key, "sweep keys end in .from, .to, .num or .values")
            base = KEY_ALIASES.get(base, base)
            axes.setdefault(base, {})[part] = text
            continue
        key = KEY_ALIASES.get(key, key)
        if key not in SCHEMA:
            raise ConfigError(key, "unknown key")
        if key not in allowed:
            raise ConfigError(key, f"not used by the {scenario.value} scenario")
        values[key] = _convert(key, text)

    sweep = []
    for base, parts in axes.items():
        if base not in SCHEMA or base not in allowed:
            raise ConfigError(f"sweep.{base}", f"not a sweepable key for the {scenario.value} scenario")
        if SCHEMA[base][0] not in (FLOAT, INT):
            raise ConfigError(f"sweep.{base}", "only numeric keys can be swept")
        if "values" in parts:
            if set(parts) != {"values"}:
                raise ConfigError(f"sweep.{base}", "use either .values or .from/.to/.num")
            items = [s for s in parts["values"].split(",") if s.strip()]
            grid = tuple(_convert(base, s) for s in items)
        else:
            missing = {"from", "to", "num"} - set(parts)
            if missing:
                raise ConfigError(f"sweep.{base}", f"missing {', '.join(sorted(missing))}")
            start = _convert_float(f"sweep.{base}.from", parts["from"])
            stop = _convert_float(f"sweep.{base}.to", parts["to"])
            try:
                num = int(parts["num"])
            except ValueError:
                raise ConfigError(f"sweep.{base}.num", "must be an integer") from None
            if num < 0:
                raise ConfigError(f"sweep.{base}.num", "must be non-negative")
            grid = tuple(float(x) for x in np.linspace(start, stop, num))
        sweep.append(SweepAxis(base, grid))

    config = ScenarioConfig(scenario, values, tuple(sweep))
    validate(config)
    return config


def _convert_float(key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as float") from None


POSITIVE = {"geometry.delta_nm", "geometry.D_nm", "geometry.z0_nm", "nv.t2_ms", "qubit1.t2_ms",
            "qubit2.t2_ms", "time.periods", "average.rel_std", "rwa.ratio", "rwa.zeeman_over_zfs",
            "integrator.rtol", "integrator.atol"}


def _check_point(config: ScenarioConfig, point: dict) -> None:
    c = config.at(point)
    for key in POSITIVE:
        v = c[key]
        if v is not None and not v > 0:
            raise ConfigError(key, f"must be positive, got {v}")
    if c["time.points"] < 1:
        raise ConfigError("time.points", "must be at least 1")
    if c["rwa.points"] < 0:
        raise ConfigError("rwa.points", "must be non-negative (0 chooses automatically)")
    for key in ("average.nodes", "average.samples"):
        if c[key] < 1:
            raise ConfigError(key, "must be at least 1")
    if config.scenario is Scenario.VIBRATING:
        if c["mode.delta_nm"] < 0:
            raise ConfigError("mode.delta_nm", "must be non-negative")
        if c["mode.delta_nm"] >= c["geometry.delta_nm"]:
            raise ConfigError("mode.delta_nm", "vibration amplitude must stay below the half-separation")
        if c["mode.freq_khz"] < 0:
            raise ConfigError("mode.freq_khz", "must be non-negative")
        if c["average.method"] == "second_order_phase" and c["average.parameter"] != "phi":
            raise ConfigError("average.method", "second_order_phase needs average.parameter = phi")
    if config.scenario is Scenario.FLYING:
        if not 0 < c["geometry.z0_nm"] < c["geometry.D_nm"] / 2:
            raise ConfigError("geometry.z0_nm", "must lie in (0, D/2)")
        v_inv = c["flying.v_inverse_s_per_m"]
        if v_inv is None:
            raise ConfigError("flying.v_inverse_s_per_m", "required (set it or sweep it)")
        if v_inv < 0:
            raise ConfigError("flying.v_inverse_s_per_m", "must be non-negative")


def validate(config: ScenarioConfig) -> None:
    """Check every sweep point; raises ``ConfigError`` naming the offending key."""
    if not config.sweep:
        _check_point(config, {})
        return
    for point in config.points():
        _check_point(config, point)
