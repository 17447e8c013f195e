"""Run configuration: strict schema, defaults, persistence, manifests.

The file format is YAML with flat sections (physics, detector,
calibration, sweep, sim, output).  Every key is checked against the
schema; unknown keys are rejected and range violations name the
offending key, because a silently misconfigured physics value would
invalidate a whole acceptance run.  An empty file resolves to the
built-in defaults.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone

import yaml

from . import __version__
from .analysis import Calibration, OperatingPoint, TEMPERATURES_C, DEFAULT_PUMPS_MW
from .detection import DetectorConfig, POISSON, THERMAL
from .errors import ConfigError
from .params import SourceParams


def _num(lo=None, hi=None):
    def check(v, key):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError(f"{key}: expected a number, got {v!r}")
        if lo is not None and v < lo:
            raise ConfigError(f"{key}: {v} is below the allowed minimum {lo}")
        if hi is not None and v > hi:
            raise ConfigError(f"{key}: {v} is above the allowed maximum {hi}")
        return float(v)
    return check


def _int(lo=None):
    def check(v, key):
        if not isinstance(v, int) or isinstance(v, bool):
            raise ConfigError(f"{key}: expected an integer, got {v!r}")
        if lo is not None and v < lo:
            raise ConfigError(f"{key}: {v} is below the allowed minimum {lo}")
        return v
    return check


def _choice(*options):
    def check(v, key):
        if v not in options:
            raise ConfigError(f"{key}: {v!r} is not one of {options}")
        return v
    return check


def _str(v, key):
    if not isinstance(v, str):
        raise ConfigError(f"{key}: expected a string, got {v!r}")
    return v


def _num_list(lo=None, hi=None):
    item = _num(lo, hi)
    def check(v, key):
        if not isinstance(v, (list, tuple)) or not v:
            raise ConfigError(f"{key}: expected a nonempty list of numbers")
        return [item(x, f"{key}[{i}]") for i, x in enumerate(v)]
    return check


def _str_list(*options):
    def check(v, key):
        if not isinstance(v, (list, tuple)) or not v:
            raise ConfigError(f"{key}: expected a nonempty list")
        for x in v:
            if x not in options:
                raise ConfigError(f"{key}: {x!r} is not one of {options}")
        return list(v)
    return check


_SCHEMA = {
    "physics": {
        "alpha": _num(lo=0),
        "omega_p": _num(lo=0),
        "omega_c": _num(lo=1e-12),
        "gamma_dec": _num(lo=0),
        "gamma_nat": _num(lo=1e-12),
        "gamma_doppler": _num(lo=1e-12),
        "delta_p": _num(),
    },
    "detector": {
        "eff_as": _num(0, 1),
        "eff_s": _num(0, 1),
        "dark_as": _num(lo=0),
        "dark_s": _num(lo=0),
        "leak_as_per_mw": _num(lo=0),
        "leak_s_per_mw": _num(lo=0),
        "fluorescence_s": _num(lo=0),
        "raman_s_per_mw": _num(lo=0),
        "trigger_dead_time_s": _num(lo=0),
    },
    "calibration": {
        "omega_p_per_sqrt_mw": _num(lo=1e-12),
        "background_window_s": _num(lo=1e-12),
        "gamma_slope": _num(lo=0),
        "anchor_rate": _num(lo=1e-12),
        "anchor_pump_mw": _num(lo=1e-12),
        "anchor_od": _num(lo=1e-12),
        "gamma_ref": _num(lo=0),
    },
    "sweep": {
        "pump_mw": _num_list(0, 64),
        "temps_c": _num_list(0, 150),
        "coupling_mw": _num(lo=1e-12),
    },
    "sim": {
        "duration_s": _num(lo=1e-9),
        "seed": _int(lo=0),
        "statistics_mode": _choice(POISSON, THERMAL),
        "bin_width_s": _num(lo=1e-12),
        "window_s": _num(lo=1e-12),
    },
    "output": {
        "directory": _str,
        "formats": _str_list("csv", "json", "svg"),
    },
}

_DEFAULTS = {
    "physics": {
        "alpha": 370.0, "omega_p": 1.0, "omega_c": 5.4, "gamma_dec": 0.030,
        "gamma_nat": SourceParams(alpha=0).gamma_nat,
        "gamma_doppler": 55.0,
        "delta_p": SourceParams(alpha=0).delta_p,
    },
    "detector": {
        "eff_as": 0.084, "eff_s": 0.13, "dark_as": 140.0, "dark_s": 220.0,
        "leak_as_per_mw": 18.0, "leak_s_per_mw": 1.4,
        "fluorescence_s": 506.4, "raman_s_per_mw": 420.0,
        "trigger_dead_time_s": 0.0,
    },
    "calibration": {
        "omega_p_per_sqrt_mw": 0.25, "background_window_s": 1.6e-6,
        "gamma_slope": 2.5e-4, "anchor_rate": 3.7e5, "anchor_pump_mw": 16.0,
        "anchor_od": 6.08, "gamma_ref": 0.025,
    },
    "sweep": {
        "pump_mw": list(DEFAULT_PUMPS_MW),
        "temps_c": list(TEMPERATURES_C),
        "coupling_mw": 4.0,
    },
    "sim": {
        "duration_s": 120.0, "seed": 0, "statistics_mode": POISSON,
        "bin_width_s": 0.8e-9, "window_s": 1.6e-6,
    },
    "output": {
        "directory": ".", "formats": ["csv", "json", "svg"],
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with all defaults applied."""

    physics: dict
    detector: dict
    calibration: dict
    sweep: dict
    sim: dict
    output: dict

    def source_params(self) -> SourceParams:
        return SourceParams(**self.physics)

    def detector_config(self) -> DetectorConfig:
        return DetectorConfig(**self.detector)

    def calibration_obj(self) -> Calibration:
        return Calibration(**self.calibration)

    def operating_points(self):
        return [OperatingPoint(pump_mw=p, temp_c=t,
                               coupling_mw=self.sweep["coupling_mw"])
                for t in self.sweep["temps_c"] for p in self.sweep["pump_mw"]]

    def as_dict(self) -> dict:
        return {k: dict(getattr(self, k)) for k in
                ("physics", "detector", "calibration", "sweep", "sim", "output")}


def validate_config(raw: dict) -> RunConfig:
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("top level must be a mapping of sections")
    resolved = {}
    for section, default in _DEFAULTS.items():
        resolved[section] = dict(default)
    for section, entries in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section {section!r}; "
                              f"expected one of {sorted(_SCHEMA)}")
        if entries is None:
            continue
        if not isinstance(entries, dict):
            raise ConfigError(f"{section}: expected a mapping of keys")
        for key, value in entries.items():
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"unknown key {section}.{key}; "
                    f"expected one of {sorted(_SCHEMA[section])}")
            resolved[section][key] = _SCHEMA[section][key](value, f"{section}.{key}")
    cfg = RunConfig(**resolved)
    cfg.source_params()       # surface cross-field violations early
    cfg.detector_config()
    cfg.calibration_obj()
    return cfg


def load_config(path) -> RunConfig:
    """Parse and validate a YAML configuration file."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    return validate_config(raw)


def serialize_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.as_dict(), sort_keys=True)


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(
        json.dumps(cfg.as_dict(), sort_keys=True).encode()).hexdigest()


def atomic_write(path, data):
    """Write bytes or text via a temp file and rename."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Checksummed record of one command invocation."""

    config_hash: str
    tool_version: str = __version__
    timestamp: str = ""
    files: list = field(default_factory=list)

    def add(self, path):
        self.files.append({"path": os.path.basename(path),
                           "sha256": file_sha256(path)})

    def write(self, path):
        self.timestamp = datetime.now(timezone.utc).isoformat()
        atomic_write(path, json.dumps(asdict(self), indent=2, sort_keys=True))
