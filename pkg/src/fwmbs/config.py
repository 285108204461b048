"""Run configuration files: sectioned key-value text with mandatory units.

Every dimensioned value carries a unit suffix ("width = 1200 nm",
"p1 = 550 mW"); bare numbers are only accepted where the quantity is
dimensionless (counts, ratios). Unknown sections and unknown keys are
rejected outright, as are missing units.

Sections:

    [geometry]     width, height, length, core, top_clad, substrate
    [dispersion]   lambda_min, lambda_max, points, polarization
    [bragg]        pump1, pump2, signal (wavelengths); p1, p2,
                   signal_power; branch; sweep_min, sweep_max, sweep_points
    [propagation]  step (optional; auto when absent), loss, margin
    [design]       emitter | lambda_sps; lambda_telecom, height, length,
                   eta_target, pump_offset, power_cap, refine
    [sweep]        axis (pump_power | signal_lambda | width), start, stop,
                   points

All quantities are converted to SI on parse.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError

_LENGTH_UNITS = {"nm": 1e-9, "um": 1e-6, "mm": 1e-3, "cm": 1e-2, "m": 1.0}
_POWER_UNITS = {"nW": 1e-9, "uW": 1e-6, "mW": 1e-3, "W": 1.0}
_LOSS_UNITS = {"dB/m": 1.0, "dB/cm": 100.0, "dB/mm": 1000.0}


def _parse_quantity(raw: str, units: dict, section: str, key: str) -> float:
    parts = raw.split()
    if len(parts) != 2:
        raise ValidationError(
            f"[{section}] {key}: expected '<value> <unit>' with unit in "
            f"{sorted(units)}, got {raw!r}"
        )
    value, unit = parts
    if unit not in units:
        raise ValidationError(
            f"[{section}] {key}: unknown unit {unit!r}; expected one of {sorted(units)}"
        )
    try:
        return float(value) * units[unit]
    except ValueError:
        raise ValidationError(f"[{section}] {key}: bad number {value!r}") from None


def _parse_number(raw: str, section: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ValidationError(f"[{section}] {key}: bad number {raw!r}") from None


def _parse_int(raw: str, section: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"[{section}] {key}: bad integer {raw!r}") from None


def _parse_bool(raw: str, section: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValidationError(f"[{section}] {key}: bad boolean {raw!r}")


# kind -> parser; each entry: (kind, default). REQUIRED means no default.
REQUIRED = object()

_SCHEMA = {
    "geometry": {
        "width": ("length", REQUIRED),
        "height": ("length", REQUIRED),
        "length": ("length", 18e-3),
        "core": ("str", "Si3N4"),
        "top_clad": ("str", "Air"),
        "substrate": ("str", "SiO2"),
    },
    "dispersion": {
        "lambda_min": ("length", REQUIRED),
        "lambda_max": ("length", REQUIRED),
        "points": ("int", 256),
        "polarization": ("enum:TE,TM", "TE"),
    },
    "bragg": {
        "pump1": ("length", REQUIRED),
        "pump2": ("length", REQUIRED),
        "signal": ("length", REQUIRED),
        "p1": ("power", REQUIRED),
        "p2": ("power", REQUIRED),
        "signal_power": ("power", 0.0),
        "branch": ("enum:plus,minus", "plus"),
        "sweep_min": ("length", None),
        "sweep_max": ("length", None),
        "sweep_points": ("int", 201),
    },
    "propagation": {
        "step": ("length", None),
        "loss": ("loss", 0.0),
        "margin": ("number", 1.5),
    },
    "design": {
        "emitter": ("str", None),
        "lambda_sps": ("length", None),
        "lambda_telecom": ("length", 1550e-9),
        "height": ("length", 550e-9),
        "length": ("length", 18e-3),
        "eta_target": ("number", 0.25),
        "pump_offset": ("length", 6e-9),
        "power_cap": ("power", 50.0),
        "refine": ("bool", True),
    },
    "sweep": {
        "axis": ("enum:pump_power,signal_lambda,width", REQUIRED),
        "start": ("quantity_by_axis", REQUIRED),
        "stop": ("quantity_by_axis", REQUIRED),
        "points": ("int", REQUIRED),
    },
}

_AXIS_UNITS = {
    "pump_power": _POWER_UNITS,
    "signal_lambda": _LENGTH_UNITS,
    "width": _LENGTH_UNITS,
}


@dataclass(frozen=True)
class RunConfig:
    """Parsed, SI-normalized config plus the hash of the raw file bytes."""

    sections: dict
    sha256: str
    path: str

    def has(self, section: str) -> bool:
        return section in self.sections

    def section(self, name: str) -> dict:
        if name not in self.sections:
            raise ValidationError(f"config is missing the required [{name}] section")
        return self.sections[name]


def _parse_value(kind: str, raw: str, section: str, key: str, axis: str | None):
    if kind == "length":
        return _parse_quantity(raw, _LENGTH_UNITS, section, key)
    if kind == "power":
        return _parse_quantity(raw, _POWER_UNITS, section, key)
    if kind == "loss":
        return _parse_quantity(raw, _LOSS_UNITS, section, key)
    if kind == "number":
        return _parse_number(raw, section, key)
    if kind == "int":
        return _parse_int(raw, section, key)
    if kind == "bool":
        return _parse_bool(raw, section, key)
    if kind == "str":
        return raw.strip()
    if kind.startswith("enum:"):
        allowed = kind[5:].split(",")
        v = raw.strip()
        if v not in allowed:
            raise ValidationError(f"[{section}] {key}: must be one of {allowed}, got {v!r}")
        return v
    if kind == "quantity_by_axis":
        if axis is None:
            raise ValidationError(f"[{section}] {key}: set 'axis' before start/stop")
        return _parse_quantity(raw, _AXIS_UNITS[axis], section, key)
    raise AssertionError(f"unhandled kind {kind}")


def load_config(path) -> RunConfig:
    """Parse and validate a run config; unknown sections/keys are errors."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file not found: {path}")
    raw_bytes = path.read_bytes()
    parser = configparser.ConfigParser(
        strict=True, interpolation=None, delimiters=("=",), comment_prefixes=("#", ";")
    )
    parser.optionxform = str
    try:
        parser.read_string(raw_bytes.decode("utf-8"), source=str(path))
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ValidationError(f"config parse error: {exc}") from None

    sections: dict = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ValidationError(
                f"unknown config section [{section}]; expected one of "
                f"{sorted(_SCHEMA)}"
            )
        schema = _SCHEMA[section]
        unknown = set(parser.options(section)) - set(schema)
        if unknown:
            raise ValidationError(f"[{section}] unknown keys {sorted(unknown)}")
        axis = parser.get(section, "axis", fallback=None)
        if axis is not None:
            axis = axis.strip()
        out = {}
        for key, (kind, default) in schema.items():
            if parser.has_option(section, key):
                out[key] = _parse_value(kind, parser.get(section, key), section,
                                        key, axis)
            elif default is REQUIRED:
                raise ValidationError(f"[{section}] missing required key {key!r}")
            else:
                out[key] = default
        sections[section] = out

    if "sweep" in sections:
        sw = sections["sweep"]
        if sw["points"] < 1:
            raise ValidationError("[sweep] points must be >= 1")
    if "design" in sections:
        d = sections["design"]
        if (d["emitter"] is None) == (d["lambda_sps"] is None):
            raise ValidationError(
                "[design] set exactly one of 'emitter' or 'lambda_sps'"
            )

    return RunConfig(
        sections=sections,
        sha256=hashlib.sha256(raw_bytes).hexdigest(),
        path=str(path),
    )
