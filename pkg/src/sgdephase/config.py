"""Flat key=value run configuration.

Physical keys carry unit suffixes (mass_kg, theta0_deg, ...); degrees and PSD
amplitudes (sqrt_s_*) are the boundary units, converted to radians and
squared levels internally.  Unknown keys are rejected by name, with a
targeted message when only the unit suffix is wrong.  Defaults are the
benchmark parameter set: mass_kg=1e-15, eta0_t_per_m=6e3, b0_t=1e-3,
a_m_s2=9.81, theta0_deg=90.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import ConfigError
from .model import ExperimentParams

_PARAM_KEYS = {
    "mass_kg": ("mass", lambda v: v),
    "eta0_t_per_m": ("eta0", lambda v: v),
    "b0_t": ("b0", lambda v: v),
    "a_m_s2": ("accel", lambda v: v),
    "theta0_deg": ("theta0", math.radians),
    "zfs_d_hz": ("zfs_d", lambda v: v),
}

_STEMS = {key.split("_")[0]: key for key in _PARAM_KEYS}

_CHOICES = {
    "format": ("csv", "json"),
    "channel": ("accel", "tilt"),
    "method": ("linear", "full-action"),
}


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration: parameter set plus command options."""

    params: ExperimentParams = field(default_factory=ExperimentParams)
    explicit: frozenset = frozenset()   # keys set by file or flags
    sqrt_s_aa: float | None = None
    sqrt_s_tt: float | None = None
    seed: int = 0
    fmt: str = "csv"
    out: str | None = None
    gamma_tau_target: float = 1.0
    channel: str = "accel"
    method: str = "linear"
    n_shots: int = 2000
    mc_steps: int = 4096
    rho: float = 0.0

    def was_set(self, key: str) -> bool:
        return key in self.explicit


def _positive_int(key: str, raw: str) -> int:
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise ConfigError(f"{key} must be positive, got {value}")
    return value


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key} must be a number, got {raw!r}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse flat `key=value` text; `#` starts a comment, blank lines ignored."""
    config = RunConfig()
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw_line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        config = apply_setting(config, key, raw)
    return config


def apply_setting(config: RunConfig, key: str, raw: str) -> RunConfig:
    """Apply one key=value setting, validating key, units and value."""
    explicit = frozenset(config.explicit | {key})

    if key in _PARAM_KEYS:
        fld, conv = _PARAM_KEYS[key]
        value = conv(_parse_float(key, raw))
        params = replace(config.params, **{fld: value})  # re-runs invariants
        return replace(config, params=params, explicit=explicit)

    if key in ("sqrt_s_aa", "sqrt_s_tt"):
        value = _parse_float(key, raw)
        if value < 0:
            raise ConfigError(f"{key} must be >= 0, got {value}")
        return replace(config, **{key: value}, explicit=explicit)

    if key == "seed":
        return replace(config, seed=int(_parse_float(key, raw)), explicit=explicit)
    if key == "gamma_tau_target":
        value = _parse_float(key, raw)
        if value <= 0:
            raise ConfigError(f"gamma_tau_target must be positive, got {value}")
        return replace(config, gamma_tau_target=value, explicit=explicit)
    if key == "rho":
        value = _parse_float(key, raw)
        if not (-1.0 <= value <= 1.0):
            raise ConfigError(f"rho must lie in [-1, 1], got {value}")
        return replace(config, rho=value, explicit=explicit)
    if key in ("n_shots", "mc_steps"):
        return replace(config, **{key: _positive_int(key, raw)}, explicit=explicit)
    if key == "out":
        return replace(config, out=raw, explicit=explicit)
    if key in _CHOICES:
        if raw not in _CHOICES[key]:
            raise ConfigError(f"{key} must be one of {_CHOICES[key]}, got {raw!r}")
        target = "fmt" if key == "format" else key
        return replace(config, **{target: raw}, explicit=explicit)

    stem = key.split("_")[0]
    if stem in _STEMS and _STEMS[stem] != key:
        raise ConfigError(
            f"unit suffix mismatch for {key!r}: use {_STEMS[stem]!r}"
        )
    raise ConfigError(f"unknown configuration key {key!r}")


def params_echo(config: RunConfig) -> dict:
    """Parameter echo in boundary units, for reproducibility blocks."""
    p = config.params
    echo = {
        "mass_kg": p.mass,
        "eta0_t_per_m": p.eta0,
        "b0_t": p.b0,
        "a_m_s2": p.accel,
        "theta0_deg": math.degrees(p.theta0),
        "zfs_d_hz": p.zfs_d,
        "seed": config.seed,
    }
    if config.sqrt_s_aa is not None:
        echo["sqrt_s_aa"] = config.sqrt_s_aa
    if config.sqrt_s_tt is not None:
        echo["sqrt_s_tt"] = config.sqrt_s_tt
    return echo
