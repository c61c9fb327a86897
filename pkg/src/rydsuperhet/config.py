"""Run configuration: TOML loading, unit strings, overrides and resolution.

Quantities may be bare numbers in the documented default unit or strings
with a unit suffix, e.g. ``"17.12 MHz"``, ``"404 nW"``, ``"78.66 um"``.
Default units: MHz for nu = Omega/2pi, mW for power, um for waists, nm for
wavelengths, K for temperature.
"""
from __future__ import annotations

import copy
import re
import sys

from .constants import RB87_MASS
from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_UNITS = {
    "frequency": {"hz": 1e-6, "khz": 1e-3, "mhz": 1.0, "ghz": 1e3},
    "power": {"nw": 1e-6, "uw": 1e-3, "μw": 1e-3, "mw": 1.0, "w": 1e3},
    "length_um": {"nm": 1e-3, "um": 1.0, "μm": 1.0, "mm": 1e3, "cm": 1e4, "m": 1e6},
    "length_nm": {"nm": 1.0, "um": 1e3, "μm": 1e3, "mm": 1e6, "cm": 1e7, "m": 1e9},
    "temperature": {"k": 1.0},
}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-zμ]+)?\s*$")

DEFAULTS = {
    "atom": {
        "gamma2": 6.07,
        "gamma_r": 0.0024,
        "dephasing": 2.76,
        "dipole_probe": 2.44,
        "dipole_coupling": 0.012,
        "dipole_mw": 1640.184,
        "lambda_probe": 780.0,
        "lambda_coupling": 480.0,
        "mass": RB87_MASS,
        "temperature": 293.0,
    },
    "drive": {
        "probe_waist": 78.66,
        "coupling_waist": 100.24,
        "alpha_local": 12.51,
        "alpha_signal": 13.22,
        "delta_p": 0.0,
        "delta_c": 0.0,
        "delta_l": 0.0,
        "delta_s": 0.1,
    },
    "doppler": {"enabled": True, "nodes": 4096, "geometry": "counter"},
    "task": {
        "freq_min": 0.01,
        "freq_max": 100.0,
        "points": 400,
        "spacing": "log",
        "normalize_at": 0.1,
        "detector_f3db": 0.0,
        "optimize_local": False,
        "optimize_at": 0.1,
        "bracket": [0.1, 1000.0],
        "dc_min": -40.0,
        "dc_max": 40.0,
        "dc_points": 161,
        "od": 1.16,
        "seed": 0,
        "oracle_points": 100,
        "oracle_order": 3,
        "oracle_tolerance": 1e-4,
        "max_signal_ratio": 0.1,
        "min_signal_ratio": 1e-4,
        "workers": 1,
    },
    "output": {"format": "csv"},
}

#: Keys carrying a physical unit, by section.
UNIT_KINDS = {
    "atom": {"gamma2": "frequency", "gamma_r": "frequency", "dephasing": "frequency",
             "lambda_probe": "length_nm", "lambda_coupling": "length_nm",
             "temperature": "temperature"},
    "drive": {"probe_rabi": "frequency", "coupling_rabi": "frequency",
              "local_rabi": "frequency", "signal_rabi": "frequency",
              "probe_power": "power", "coupling_power": "power",
              "local_power": "power", "signal_power": "power",
              "probe_waist": "length_um", "coupling_waist": "length_um",
              "alpha_local": "frequency", "alpha_signal": "frequency",
              "delta_p": "frequency", "delta_c": "frequency", "delta_l": "frequency",
              "delta_s": "frequency"},
    "task": {"freq_min": "frequency", "freq_max": "frequency", "normalize_at": "frequency",
             "detector_f3db": "frequency", "optimize_at": "frequency", "dc_min": "frequency",
             "dc_max": "frequency", "gamma_guess": "frequency", "omega_c_guess": "frequency",
             "cell_length": "length_um"},
}

#: Optional keys with no default, accepted in addition to DEFAULTS.
OPTIONAL_KEYS = {
    "drive": {"probe_rabi", "probe_power", "coupling_rabi", "coupling_power", "local_rabi",
              "local_power", "signal_rabi", "signal_power"},
    "task": {"data", "gamma_guess", "omega_c_guess", "sweep", "slope", "noise_density",
             "cell_length", "local_angle", "signal_angle"},
    "output": {"path"},
}

SECTIONS = tuple(DEFAULTS)


def parse_quantity(value, kind: str, field: str):
    """Convert a number or unit string to the default unit of ``kind``."""
    if isinstance(value, bool):
        raise ConfigError("expected a quantity, got a boolean", field=field)
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"expected a number or unit string, got {value!r}", field=field)
    m = _QUANTITY.match(value)
    if not m:
        raise ConfigError(f"malformed quantity {value!r}", field=field)
    number, unit = float(m.group(1)), m.group(2)
    if unit is None:
        return number
    factor = _UNITS[kind].get(unit.lower())
    if factor is None:
        allowed = ", ".join(_UNITS[kind])
        raise ConfigError(f"unit {unit!r} is not a {kind.split('_')[0]} unit ({allowed})",
                          field=field)
    return number * factor


def load_text(text: str, source: str = "<config>") -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        raise ConfigError(f"{source}: {exc}", line=line) from exc


def load_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return load_text(text, str(path))


def apply_override(raw: dict, assignment: str) -> None:
    """Apply one ``section.key=value`` override in place.

    The value is parsed as a TOML value when possible, otherwise kept as a
    plain string (so ``--set drive.coupling_rabi=17.12MHz`` works unquoted).
    """
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not key=value")
    key, value = assignment.split("=", 1)
    parts = key.strip().split(".")
    if len(parts) != 2 or not all(parts):
        raise ConfigError(f"override key {key!r} must be section.key", field=key)
    try:
        parsed = tomllib.loads(f"v = {value}")["v"]
    except tomllib.TOMLDecodeError:
        parsed = value.strip()
    raw.setdefault(parts[0], {})[parts[1]] = parsed


def resolve(raw: dict) -> dict:
    """Merge with defaults, convert units and check field consistency.

    The result uses canonical units (MHz, mW, um, nm, K) and is what the CLI
    echoes in its metadata.
    """
    unknown = set(raw) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}",
                          field=sorted(unknown)[0])
    out = copy.deepcopy(DEFAULTS)
    for section, values in raw.items():
        if not isinstance(values, dict):
            raise ConfigError(f"[{section}] must be a table", field=section)
        for key, value in values.items():
            field = f"{section}.{key}"
            if key not in DEFAULTS[section] and key not in OPTIONAL_KEYS.get(section, ()):
                raise ConfigError("unknown field", field=field)
            kind = UNIT_KINDS.get(section, {}).get(key)
            if kind is not None:
                value = parse_quantity(value, kind, field)
            out[section][key] = value
    _check_drive(out["drive"])
    _check_types(out)
    return out


def _check_drive(drive):
    defaults = {"probe": 0.5, "coupling": 17.12, "local": 0.0, "signal": 0.0}
    for name, rabi in defaults.items():
        if f"{name}_rabi" in drive and f"{name}_power" in drive:
            raise ConfigError(f"give either {name}_rabi or {name}_power, not both",
                              field=f"drive.{name}_rabi")
        if f"{name}_power" not in drive:
            drive.setdefault(f"{name}_rabi", rabi)


def _check_types(cfg):
    for section, defaults in DEFAULTS.items():
        for key, default in defaults.items():
            value = cfg[section][key]
            if isinstance(default, float) and (isinstance(value, bool)
                                               or not isinstance(value, (int, float))):
                raise ConfigError(f"expected a number, got {value!r}", field=f"{section}.{key}")
    doppler = cfg["doppler"]
    if not isinstance(doppler["enabled"], bool):
        raise ConfigError("must be true or false", field="doppler.enabled")
    if not isinstance(doppler["nodes"], int) or isinstance(doppler["nodes"], bool):
        raise ConfigError("must be an integer", field="doppler.nodes")
    if doppler["geometry"] not in ("counter", "co"):
        raise ConfigError("must be 'counter' or 'co'", field="doppler.geometry")
    task = cfg["task"]
    for key in ("points", "dc_points", "seed", "oracle_points", "oracle_order", "workers"):
        if not isinstance(task[key], int) or isinstance(task[key], bool):
            raise ConfigError("must be an integer", field=f"task.{key}")
    if task["spacing"] not in ("log", "linear"):
        raise ConfigError("must be 'log' or 'linear'", field="task.spacing")
    bracket = task["bracket"]
    if not (isinstance(bracket, list) and len(bracket) == 2):
        raise ConfigError("must be a two-element list", field="task.bracket")
    task["bracket"] = [parse_quantity(b, "frequency", "task.bracket") for b in bracket]
    if cfg["output"]["format"] not in ("csv", "json"):
        raise ConfigError("must be 'csv' or 'json'", field="output.format")
