"""Flat key-value configuration files.

Format: one `name = value` per line, `#` starts a comment, blank lines
ignored. Voltages are in volts and times in hours. Level lists are
comma-separated. The same file carries device constants and policy knobs.
"""

from __future__ import annotations

from pathlib import Path

from .allocation import PolicyConfig
from .channel import DeviceParams, default_device_params

__all__ = [
    "ConfigError",
    "parse_config_text",
    "load_config",
    "apply_overrides",
    "device_params_from",
    "policy_config_from",
    "format_config",
]

_DEVICE_KEYS = {
    "a_w": float,
    "c_w": float,
    "k1": float,
    "a_r": float,
    "b_r": float,
    "k2": float,
    "v_max": float,
    "t0": float,
    "sigma_p": float,
    "sigma_e": float,
    "num_levels": int,
    "base_levels": "levels",
}

_POLICY_KEYS = {
    "mode": str,
    "target_mi": float,
    "capacity_threshold": float,
    "adjust_period": int,
    "retention_time": float,
    "alpha_min": float,
    "alpha_tol": float,
    "max_cycles": int,
    "scale_erased": bool,
}


class ConfigError(ValueError):
    """Malformed configuration file or unknown/invalid key."""


def _convert(key: str, raw: str):
    kind = _DEVICE_KEYS.get(key) or _POLICY_KEYS.get(key)
    if kind is None:
        raise ConfigError(f"unknown configuration key {key!r}")
    try:
        if kind == "levels":
            return tuple(float(v) for v in raw.replace(",", " ").split())
        if kind is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for key {key!r}: {raw!r}") from exc


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'name = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        values[key] = _convert(key, raw)
    return values


def load_config(path: str | Path) -> dict:
    return parse_config_text(Path(path).read_text())


def apply_overrides(values: dict, overrides: list[str]) -> dict:
    """Apply CLI `--set key=value` pairs on top of file values."""
    out = dict(values)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = (part.strip() for part in item.split("=", 1))
        out[key] = _convert(key, raw)
    return out


def device_params_from(values: dict) -> DeviceParams:
    base = default_device_params()
    kwargs = {k: values[k] for k in _DEVICE_KEYS if k in values}
    try:
        return DeviceParams(
            **{**{f: getattr(base, f) for f in _DEVICE_KEYS}, **kwargs}
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def policy_config_from(values: dict) -> PolicyConfig:
    kwargs = {k: values[k] for k in _POLICY_KEYS if k in values}
    try:
        return PolicyConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def format_config(params: DeviceParams, policy: PolicyConfig) -> str:
    """Render the resolved configuration back to the flat file format."""
    lines = ["# device parameters (volts / hours)"]
    for key in _DEVICE_KEYS:
        value = getattr(params, key)
        if key == "base_levels":
            value = ", ".join(f"{v:g}" for v in value)
        lines.append(f"{key} = {value}")
    lines.append("")
    lines.append("# allocation policy")
    for key in _POLICY_KEYS:
        lines.append(f"{key} = {getattr(policy, key)}")
    return "\n".join(lines) + "\n"
