"""Experiment configuration.

Defaults reproduce the reference scenario: 10 UAVs, an 8 x 8 URA with
5 cm spacing, a 100 m x 100 m x 120 m flight volume on a 5 m lattice,
50 m communication radius, 1 cm wavelength, beta starting at 0.01 and
growing by 0.001 per iteration, 500 iterations.

Config files use a flat ``key = value`` format; ``#`` starts a comment
and list values are comma separated::

    n_uavs = 10
    snr_db = 0, 10, 20
    strategies = learning, random-moving
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

STRATEGIES = ("learning", "random-moving", "static", "exhaustive")
TEMPERATURE_RULES = ("inverse-beta", "fixed", "zero")
EXHAUSTIVE_MODES = ("sequential", "joint")
OUTPUT_ENV = "UAVSWARM_OUT"

# CLI spellings that differ from field names
ALIASES = {
    "uavs": "n_uavs",
    "iterations": "max_iterations",
    "spacing": "ura_spacing",
    "step": "lattice_step",
    "radius": "comm_radius",
    "snr": "snr_db",
    "strategy": "strategies",
    "out": "output_dir",
}


@dataclass(frozen=True)
class ExperimentConfig:
    n_uavs: int = 10
    ura_nx: int = 8
    ura_ny: int = 8
    ura_spacing: float = 0.05
    volume: tuple = (100.0, 100.0, 120.0)
    lattice_step: float = 5.0
    comm_radius: float = 50.0
    wavelength: float = 0.01
    beta0: float = 0.01
    beta_step: float = 0.001
    temperature_rule: str = "inverse-beta"
    temperature: float = 1.0  # used by the "fixed" rule only
    max_iterations: int = 500
    snr_db: tuple = (0.0, 10.0, 20.0)
    strategies: tuple = ("learning",)
    seeds: tuple = (0,)
    output_dir: str = field(default_factory=lambda: os.environ.get(OUTPUT_ENV, "runs"))
    dynamic_graph: bool = False
    stop_tolerance: float = 1e-3
    record_stay_probability: bool = True
    snapshot_every: int = 0
    exhaustive_mode: str = "sequential"
    init_retries: int = 1000
    workers: int = 1

    def __post_init__(self):
        for name in ("n_uavs", "ura_nx", "ura_ny", "max_iterations", "init_retries", "workers"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise ConfigError(f"{name}: expected a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.snapshot_every < 0:
            raise ConfigError(f"snapshot_every: must be >= 0, got {self.snapshot_every}")
        for name in ("ura_spacing", "lattice_step", "comm_radius", "wavelength", "beta0",
                     "temperature", "stop_tolerance"):
            v = getattr(self, name)
            if not float(v) > 0:
                raise ConfigError(f"{name}: must be positive, got {v!r}")
            object.__setattr__(self, name, float(v))
        if not float(self.beta_step) >= 0:
            raise ConfigError(f"beta_step: must be >= 0, got {self.beta_step!r}")
        object.__setattr__(self, "beta_step", float(self.beta_step))
        vol = tuple(float(v) for v in self.volume)
        if len(vol) != 3 or not all(v > 0 for v in vol):
            raise ConfigError(f"volume: expected three positive lengths, got {self.volume!r}")
        object.__setattr__(self, "volume", vol)
        snr = tuple(float(v) for v in self.snr_db)
        if not snr:
            raise ConfigError("snr_db: list must be non-empty")
        object.__setattr__(self, "snr_db", snr)
        strategies = tuple(self.strategies)
        for s in strategies:
            if s not in STRATEGIES:
                raise ConfigError(f"strategies: unknown strategy {s!r}, choose from {STRATEGIES}")
        if not strategies:
            raise ConfigError("strategies: list must be non-empty")
        object.__setattr__(self, "strategies", strategies)
        seeds = tuple(int(s) for s in self.seeds)
        if not seeds:
            raise ConfigError("seeds: list must be non-empty")
        object.__setattr__(self, "seeds", seeds)
        if self.temperature_rule not in TEMPERATURE_RULES:
            raise ConfigError(f"temperature_rule: expected one of {TEMPERATURE_RULES}, "
                              f"got {self.temperature_rule!r}")
        if self.exhaustive_mode not in EXHAUSTIVE_MODES:
            raise ConfigError(f"exhaustive_mode: expected one of {EXHAUSTIVE_MODES}, "
                              f"got {self.exhaustive_mode!r}")
        if any(v < self.lattice_step for v in vol[2:]):
            raise ConfigError("volume: height must hold at least one lattice layer above ground")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    def digest(self) -> str:
        """Short hash of every field that affects simulation output."""
        d = self.to_dict()
        for k in ("output_dir", "seeds", "workers", "strategies"):
            d.pop(k)
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(key: str, raw):
    """Convert a raw (usually string) value to the type of field ``key``."""
    default = FIELDS[key].default
    if default is dataclasses.MISSING:
        default = FIELDS[key].default_factory()
    try:
        if isinstance(default, tuple):
            if isinstance(raw, str):
                items = [s.strip() for s in raw.split(",") if s.strip()]
            else:
                items = list(raw)
            if key == "strategies":
                return tuple(str(s) for s in items)
            if key == "seeds":
                return tuple(int(s) for s in items)
            return tuple(float(s) for s in items)
        if isinstance(default, bool):
            if isinstance(raw, str):
                low = raw.strip().lower()
                if low in ("1", "true", "yes", "on"):
                    return True
                if low in ("0", "false", "no", "off"):
                    return False
                raise ValueError(raw)
            return bool(raw)
        if isinstance(default, int):
            f = float(raw)
            if f != int(f):
                raise ValueError(raw)
            return int(f)
        if isinstance(default, float):
            return float(raw)
        return str(raw).strip()
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot parse value {raw!r}") from None


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file into a raw dict."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    out = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def _normalize_key(key: str, where: str) -> str:
    key = key.strip().replace("-", "_")
    key = ALIASES.get(key, key)
    if key not in FIELDS:
        raise ConfigError(f"{where}{key}: unknown configuration key")
    return key


def parse_config(path=None, overrides=None) -> ExperimentConfig:
    """Build a validated config from an optional file plus overrides.

    Override values win over file values, which win over defaults.  Keys
    may use field names or the short CLI aliases (``uavs``,
    ``iterations``, ...).
    """
    values = {}
    if path is not None:
        for k, v in read_config_file(path).items():
            key = _normalize_key(k, f"{path}: ")
            values[key] = _coerce(key, v)
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        key = _normalize_key(k, "override ")
        values[key] = _coerce(key, v)
    return ExperimentConfig(**values)


def write_config_file(config: ExperimentConfig, path) -> None:
    lines = []
    for k, v in config.to_dict().items():
        if isinstance(v, list):
            v = ", ".join(str(x) for x in v)
        lines.append(f"{k} = {v}")
    Path(path).write_text("\n".join(lines) + "\n")
