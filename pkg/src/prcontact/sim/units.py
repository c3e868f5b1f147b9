"""Quantity strings such as ``"2 N/mm"`` or ``"5 deg"`` converted to SI."""
from __future__ import annotations

import math
import re

from ..errors import ConfigError

_UNITS = {
    "": 1.0,
    "m": 1.0, "cm": 1e-2, "mm": 1e-3,
    "m/s": 1.0, "mm/s": 1e-3,
    "m/s^2": 1.0, "m/s2": 1.0, "m/s^3": 1.0, "m/s3": 1.0,
    "rad": 1.0, "deg": math.pi / 180.0, "°": math.pi / 180.0,
    "rad/s": 1.0, "deg/s": math.pi / 180.0,
    "rad/s^2": 1.0, "rad/s^3": 1.0,
    "s": 1.0, "ms": 1e-3,
    "1/s": 1.0, "hz": 1.0,
    "n": 1.0, "n/m": 1.0, "n/mm": 1e3,
    "nm": 1.0, "n*m": 1.0, "n.m": 1.0,
    "nm/rad": 1.0, "n*m/rad": 1.0, "n.m/rad": 1.0,
    "n*s/m": 1.0, "ns/m": 1.0,
    "n*m*s/rad": 1.0, "nms/rad": 1.0,
    "kg": 1.0, "kg*m^2": 1.0, "kgm2": 1.0,
}

_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


def to_si(value, what="value"):
    """Number (already SI) or ``"<number> <unit>"`` string -> float in SI."""
    if isinstance(value, bool):
        raise ConfigError(f"{what}: expected a quantity, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        m = _QTY.match(value)
        if m:
            unit = m.group(2).replace(" ", "").lower()
            if unit in _UNITS:
                return float(m.group(1)) * _UNITS[unit]
            raise ConfigError(f"{what}: unknown unit {m.group(2)!r}")
    raise ConfigError(f"{what}: cannot parse quantity {value!r}")


def vec_si(values, n=None, what="value"):
    if not isinstance(values, (list, tuple)):
        values = [values] * (n or 1)
    out = [to_si(v, what) for v in values]
    if n is not None and len(out) != n:
        raise ConfigError(f"{what}: expected {n} entries, got {len(out)}")
    return out
