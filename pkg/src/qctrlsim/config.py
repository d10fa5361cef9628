"""Scenario configuration files (TOML).

Quantities are either numbers in the key's default unit (Hz for
frequencies, ns for times, degrees for angles) or strings with an explicit
unit such as ``"950 MHz"``, ``"3.6 s"`` or ``"0.5 rad"``.  Values are
returned in SI units and radians.
"""

from __future__ import annotations

import re
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import QctrlError


class ConfigError(QctrlError):
    """Unreadable or invalid scenario file."""


UNITS = {
    "freq": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12},
    "angle": {"rad": 1.0, "deg": 3.141592653589793 / 180.0},
}
DEFAULT_UNIT = {"freq": "hz", "time": "ns", "angle": "deg"}
_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z]*)\s*$")


def quantity(value, kind: str, key: str = "value") -> float:
    """Convert a config value to SI (or radians)."""
    if kind not in UNITS:
        raise ConfigError(f"unknown quantity kind {kind!r}")
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a {kind}, got a boolean")
    if isinstance(value, (int, float)):
        return float(value) * UNITS[kind][DEFAULT_UNIT[kind]]
    if isinstance(value, str):
        m = _QTY.match(value)
        if m:
            unit = (m.group(2) or DEFAULT_UNIT[kind]).lower()
            if unit in UNITS[kind]:
                return float(m.group(1)) * UNITS[kind][unit]
    raise ConfigError(f"{key}: cannot read {value!r} as a {kind}")


def load_config(path) -> dict:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e
    data.setdefault("_dir", str(path.parent.resolve()))
    return data


class Section:
    """Typed access to one table of a config, remembering its dotted name for errors."""

    def __init__(self, data: dict, name: str):
        if not isinstance(data, dict):
            raise ConfigError(f"[{name}] must be a table")
        self.data, self.name = data, name

    def _get(self, key, default):
        if key in self.data:
            return self.data[key]
        if default is _REQUIRED:
            raise ConfigError(f"[{self.name}] is missing {key!r}")
        return default

    def freq(self, key, default=None):
        v = self._get(key, _REQUIRED if default is None else default)
        return quantity(v, "freq", f"{self.name}.{key}")

    def time(self, key, default=None):
        v = self._get(key, _REQUIRED if default is None else default)
        return quantity(v, "time", f"{self.name}.{key}")

    def angle(self, key, default=None):
        v = self._get(key, _REQUIRED if default is None else default)
        return quantity(v, "angle", f"{self.name}.{key}")

    def number(self, key, default=None, kind=float):
        v = self._get(key, _REQUIRED if default is None else default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{self.name}.{key}: expected a number, got {v!r}")
        if kind is int and int(v) != v:
            raise ConfigError(f"{self.name}.{key}: expected an integer, got {v!r}")
        return kind(v)

    def text(self, key, default=None):
        v = self._get(key, _REQUIRED if default is None else default)
        if not isinstance(v, str):
            raise ConfigError(f"{self.name}.{key}: expected a string, got {v!r}")
        return v

    def list(self, key, default=None):
        v = self._get(key, _REQUIRED if default is None else default)
        if not isinstance(v, list):
            raise ConfigError(f"{self.name}.{key}: expected a list")
        return v

    def table(self, key, required=True):
        if key not in self.data:
            if required:
                raise ConfigError(f"[{self.name}] is missing table {key!r}")
            return Section({}, f"{self.name}.{key}")
        return Section(self.data[key], f"{self.name}.{key}")

    def __contains__(self, key):
        return key in self.data


_REQUIRED = object()


def section(cfg: dict, name: str, required: bool = True) -> Section:
    if name not in cfg:
        if required:
            raise ConfigError(f"config has no [{name}] table")
        return Section({}, name)
    return Section(cfg[name], name)
