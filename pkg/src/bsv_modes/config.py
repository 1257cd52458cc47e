"""Run configuration: JSON schema v1, validation, and defaults.

The config document is a JSON object with a required ``schema_version`` (1)
and five optional blocks: ``geometry``, ``grid``, ``gain``, ``sweep`` and
``output``.  Unknown keys are rejected with the dot-separated path of the
offender; every value is type- and range-checked here, before any physics
runs.  All quantities are SI (meters, radians); key names carry the unit
suffix.  The full schema with defaults is documented in the README.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

from .errors import ConfigError
from .kernel import AngularGrid, OpaGeometry, build_geometry, make_grid

SCHEMA_VERSION = 1

KNOWN_FORMATS = ("csv", "json")
GRID_SCHEMES = ("trapezoid", "gauss-legendre")


@dataclass(frozen=True)
class GridConfig:
    theta_max_rad: float = 0.06
    n_points: int = 501
    scheme: str = "trapezoid"


@dataclass(frozen=True)
class GainConfig:
    G: float = 4.0
    m_l: float = 1.25
    transverse_dims: int = 1


@dataclass(frozen=True)
class SweepConfig:
    L_start_m: float = 0.007
    L_stop_m: float = 0.170
    L_step_m: float = 0.001


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    formats: tuple[str, ...] = ("csv", "json")
    svg: bool = False


@dataclass(frozen=True)
class RunConfig:
    geometry: OpaGeometry = field(default_factory=build_geometry)
    grid: GridConfig = GridConfig()
    gain: GainConfig = GainConfig()
    sweep: SweepConfig = SweepConfig()
    output: OutputConfig = OutputConfig()
    pump_size_key: str = "pump_fwhm_m"  # which pump-size key the config used

    def make_grid(self) -> AngularGrid:
        return make_grid(self.grid.theta_max_rad, self.grid.n_points, self.grid.scheme)

    def resolved(self) -> dict:
        """Fully-resolved config as a plain dict (what --dry-run prints)."""
        return {
            "schema_version": SCHEMA_VERSION,
            "geometry": {
                "pump_wavelength_vacuum_m": self.geometry.pump_wavelength_vacuum,
                self.pump_size_key: (self.geometry.pump_fwhm
                                     if self.pump_size_key == "pump_fwhm_m"
                                     else self.geometry.sigma),
                "n_p": self.geometry.n_p,
                "crystal_length_m": self.geometry.crystal_length,
                "gap_length_m": self.geometry.gap_length,
                "delta_n_air": self.geometry.delta_n_air,
            },
            "grid": {
                "theta_max_rad": self.grid.theta_max_rad,
                "n_points": self.grid.n_points,
                "scheme": self.grid.scheme,
            },
            "gain": {
                "G": self.gain.G,
                "m_l": self.gain.m_l,
                "transverse_dims": self.gain.transverse_dims,
            },
            "sweep": {
                "L_start_m": self.sweep.L_start_m,
                "L_stop_m": self.sweep.L_stop_m,
                "L_step_m": self.sweep.L_step_m,
            },
            "output": {
                "directory": self.output.directory,
                "formats": list(self.output.formats),
                "svg": self.output.svg,
            },
        }


def _check_keys(block: dict, path: str, allowed: tuple[str, ...]) -> None:
    for key in block:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown key")


def _get_number(block: dict, path: str, key: str, default, *,
                minimum=None, exclusive_minimum=None, maximum=None):
    if key not in block:
        return default
    value = block[key]
    where = f"{path}.{key}"
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(where, f"expected a number, got {type(value).__name__}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(where, "must be finite")
    if exclusive_minimum is not None and value <= exclusive_minimum:
        raise ConfigError(where, f"must be > {exclusive_minimum}")
    if minimum is not None and value < minimum:
        raise ConfigError(where, f"must be >= {minimum}")
    if maximum is not None and value > maximum:
        raise ConfigError(where, f"must be <= {maximum}")
    return value


def _get_int(block: dict, path: str, key: str, default, *, minimum=None, choices=None):
    if key not in block:
        return default
    value = block[key]
    where = f"{path}.{key}"
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(where, f"expected an integer, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise ConfigError(where, f"must be >= {minimum}")
    if choices is not None and value not in choices:
        raise ConfigError(where, f"must be one of {choices}")
    return value


def _get_block(raw: dict, key: str) -> dict:
    block = raw.get(key, {})
    if not isinstance(block, dict):
        raise ConfigError(key, f"expected an object, got {type(block).__name__}")
    return block


def parse_config(raw: dict) -> RunConfig:
    """Validate a raw JSON document and resolve it against the defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("", f"config root must be an object, got {type(raw).__name__}")
    _check_keys(raw, "", ("schema_version", "geometry", "grid", "gain", "sweep", "output"))
    if "schema_version" not in raw:
        raise ConfigError("schema_version", "missing (this tool reads schema version 1)")
    if raw["schema_version"] != SCHEMA_VERSION:
        raise ConfigError("schema_version",
                          f"unsupported version {raw['schema_version']!r} (expected {SCHEMA_VERSION})")

    geo = _get_block(raw, "geometry")
    _check_keys(geo, "geometry", ("pump_wavelength_vacuum_m", "pump_fwhm_m",
                                  "pump_sigma_m", "n_p", "crystal_length_m",
                                  "gap_length_m", "delta_n_air"))
    if "pump_fwhm_m" in geo and "pump_sigma_m" in geo:
        raise ConfigError("geometry.pump_sigma_m",
                          "give either pump_fwhm_m or pump_sigma_m, not both")
    pump_kwargs = {}
    pump_size_key = "pump_fwhm_m"
    if "pump_sigma_m" in geo:
        pump_size_key = "pump_sigma_m"
        pump_kwargs["pump_sigma"] = _get_number(geo, "geometry", "pump_sigma_m",
                                                None, exclusive_minimum=0.0)
    else:
        pump_kwargs["pump_fwhm"] = _get_number(geo, "geometry", "pump_fwhm_m",
                                               200e-6, exclusive_minimum=0.0)
    geometry = build_geometry(
        pump_wavelength_vacuum=_get_number(geo, "geometry", "pump_wavelength_vacuum_m",
                                           355e-9, exclusive_minimum=0.0),
        n_p=_get_number(geo, "geometry", "n_p", 1.70, exclusive_minimum=0.0),
        crystal_length=_get_number(geo, "geometry", "crystal_length_m",
                                   3e-3, exclusive_minimum=0.0),
        gap_length=_get_number(geo, "geometry", "gap_length_m", 0.0, minimum=0.0),
        delta_n_air=_get_number(geo, "geometry", "delta_n_air", 1.016e-5, minimum=0.0),
        **pump_kwargs,
    )

    grd = _get_block(raw, "grid")
    _check_keys(grd, "grid", ("theta_max_rad", "n_points", "scheme"))
    scheme = grd.get("scheme", "trapezoid")
    if scheme not in GRID_SCHEMES:
        raise ConfigError("grid.scheme", f"must be one of {GRID_SCHEMES}")
    grid = GridConfig(
        theta_max_rad=_get_number(grd, "grid", "theta_max_rad", 0.06, exclusive_minimum=0.0),
        n_points=_get_int(grd, "grid", "n_points", 501, minimum=8),
        scheme=scheme,
    )

    gn = _get_block(raw, "gain")
    _check_keys(gn, "gain", ("G", "m_l", "transverse_dims"))
    gain_cfg = GainConfig(
        G=_get_number(gn, "gain", "G", 4.0, minimum=0.0),
        m_l=_get_number(gn, "gain", "m_l", 1.25, minimum=1.0),
        transverse_dims=_get_int(gn, "gain", "transverse_dims", 2, choices=(1, 2)),
    )

    sw = _get_block(raw, "sweep")
    _check_keys(sw, "sweep", ("L_start_m", "L_stop_m", "L_step_m"))
    sweep_cfg = SweepConfig(
        L_start_m=_get_number(sw, "sweep", "L_start_m", 0.007, minimum=0.0, maximum=0.25),
        L_stop_m=_get_number(sw, "sweep", "L_stop_m", 0.170, minimum=0.0, maximum=0.25),
        L_step_m=_get_number(sw, "sweep", "L_step_m", 0.001,
                             exclusive_minimum=0.0, maximum=3e-3),
    )
    if sweep_cfg.L_stop_m < sweep_cfg.L_start_m:
        raise ConfigError("sweep.L_stop_m", "must be >= sweep.L_start_m")

    out = _get_block(raw, "output")
    _check_keys(out, "output", ("directory", "formats", "svg"))
    directory = out.get("directory", "out")
    if not isinstance(directory, str) or not directory:
        raise ConfigError("output.directory", "expected a non-empty string")
    formats = out.get("formats", list(KNOWN_FORMATS))
    if (not isinstance(formats, list) or not formats
            or any(f not in KNOWN_FORMATS for f in formats)):
        raise ConfigError("output.formats", f"expected a non-empty subset of {KNOWN_FORMATS}")
    svg = out.get("svg", False)
    if not isinstance(svg, bool):
        raise ConfigError("output.svg", "expected a boolean")
    output = OutputConfig(directory=directory,
                          formats=tuple(dict.fromkeys(formats)), svg=svg)

    return RunConfig(geometry=geometry, grid=grid, gain=gain_cfg,
                     sweep=sweep_cfg, output=output, pump_size_key=pump_size_key)


def load_config(path: str | os.PathLike | None) -> RunConfig:
    """Load and validate a config file; None gives the all-defaults config."""
    if path is None:
        return parse_config({"schema_version": SCHEMA_VERSION})
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"not valid JSON ({exc})") from exc
    return parse_config(raw)
