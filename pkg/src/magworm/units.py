"""Unit-suffixed quantity parsing. All internal physics is SI; suffixes only at parse time."""

from __future__ import annotations

import re

# factor tables: suffix -> multiplier into SI
_LENGTH = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "cm": 1e-2}
_SPEED = {"m/s": 1.0, "mm/s": 1e-3, "um/s": 1e-6, "m_s": 1.0, "mm_s": 1e-3, "um_s": 1e-6}
_ACCEL = {"m/s2": 1.0, "mm/s2": 1e-3, "m/s^2": 1.0, "mm/s^2": 1e-3}
_FIELD = {"T": 1.0, "mT": 1e-3, "uT": 1e-6}
_MAGNETIZATION = {"A/m": 1.0, "kA/m": 1e3, "MA/m": 1e6}
_TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6}
_ANGVEL = {"rad/s": 1.0, "turn/s": 6.283185307179586, "rpm": 0.10471975511965977}
_MASS = {"kg": 1.0, "g": 1e-3, "mg": 1e-6}

_QUANT_RE = re.compile(r"^\s*([+-]?\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)\s*([A-Za-zµ/^_0-9]*)\s*$")


class UnitError(ValueError):
    """Raised for missing or unknown unit suffixes."""


def _parse(text: str | float, table: dict[str, float], kind: str, default: str | None = None) -> float:
    if isinstance(text, (int, float)):
        if default is None:
            raise UnitError(f"{kind} value {text!r} must carry a unit suffix (e.g. {next(iter(table))!r})")
        return float(text) * table[default]
    m = _QUANT_RE.match(text)
    if not m:
        raise UnitError(f"cannot parse {kind} quantity {text!r}")
    value, suffix = float(m.group(1)), m.group(2)
    if not suffix:
        raise UnitError(f"{kind} quantity {text!r} is missing a unit suffix; accepted: {sorted(table)}")
    if suffix not in table:
        raise UnitError(f"unknown {kind} unit {suffix!r} in {text!r}; accepted: {sorted(table)}")
    return value * table[suffix]


def parse_length(text: str | float) -> float:
    """'15 mm' / '622.56um' -> metres."""
    return _parse(text, _LENGTH, "length")


def parse_speed(text: str | float) -> float:
    """'6 mm/s' or CLI-style '6mm_s' -> m/s."""
    return _parse(text, _SPEED, "speed")


def parse_accel(text: str | float) -> float:
    return _parse(text, _ACCEL, "acceleration")


def parse_field(text: str | float) -> float:
    """'14.95 mT' -> tesla."""
    return _parse(text, _FIELD, "flux density")


def parse_magnetization(text: str | float) -> float:
    """'750 kA/m' -> A/m."""
    return _parse(text, _MAGNETIZATION, "magnetization")


def parse_time(text: str | float) -> float:
    return _parse(text, _TIME, "time")


def parse_angular_velocity(text: str | float) -> float:
    return _parse(text, _ANGVEL, "angular velocity")


def parse_mass(text: str | float) -> float:
    return _parse(text, _MASS, "mass")


def fmt_si(value: float, unit: str) -> str:
    """Canonical SI rendering used by resolved-scenario dumps."""
    return f"{value!r} {unit}"
