"""Run configuration: a single TOML file, schema-checked with unknown-key
rejection, hashed for reproducible output provenance."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError
from .medium import MediumSpec, OscillatorSpec, PerturbationProfile

_SCHEMA = {
    "medium": {
        "c": float,
        "frame_velocity": float,
        "oscillators": [{"chi0": float, "omega0": float, "g": float}],
    },
    "perturbation": {
        "kind": str,
        "amplitude": float,
        "width": float,
        "center": float,
        "plateau": float,
        "velocity": float,
    },
    "grid": {"sites": int, "spacing": float},
    "scan": {
        "k_min": float,
        "k_max": float,
        "k_points": int,
        "omega_prime": list,
        "ky": float,
        "kz": float,
    },
    "modes": {"list": [{"k": float, "polarization": int, "branch": str,
                        "conjugate": bool}]},
    "tolerances": {"integrator": float, "bracket": float},
    "output": {"format": str, "directory": str},
    "run": {"seed": int, "max_workers": int},
}

_DEFAULTS = {
    "medium": {"c": 1.0, "frame_velocity": 0.0,
               "oscillators": [{"chi0": 0.5, "omega0": 1.0, "g": 1.0}]},
    "perturbation": {"kind": "none", "amplitude": 0.0, "width": 1.0,
                     "center": 0.0, "velocity": 0.5},
    "grid": {"sites": 16, "spacing": 1.0},
    "scan": {"k_min": 0.1, "k_max": 3.0, "k_points": 25,
             "omega_prime": [0.5], "ky": 0.0, "kz": 0.0},
    "modes": {"list": [{"k": 1.0, "polarization": 1, "branch": "lower",
                        "conjugate": False}]},
    "tolerances": {"integrator": 1e-10, "bracket": 1e-9},
    "output": {"format": "csv", "directory": "."},
    "run": {"seed": 20260809, "max_workers": 1},
}


def _check_keys(data: dict, schema: dict, path: str = ""):
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown configuration key: {where}")
        spec = schema[key]
        if isinstance(spec, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be a table")
            _check_keys(value, spec, where)
        elif isinstance(spec, list) and spec and isinstance(spec[0], dict):
            if not isinstance(value, list):
                raise ConfigError(f"{where} must be an array of tables")
            for i, entry in enumerate(value):
                if not isinstance(entry, dict):
                    raise ConfigError(f"{where}[{i}] must be a table")
                _check_keys(entry, spec[0], f"{where}[{i}]")
        elif spec is list:
            if not isinstance(value, list):
                raise ConfigError(f"{where} must be an array")
        else:
            ok = isinstance(value, spec) or (spec is float
                                             and isinstance(value, int)
                                             and not isinstance(value, bool))
            if not ok:
                raise ConfigError(
                    f"{where} must have type {spec.__name__}, "
                    f"got {type(value).__name__}"
                )


def _merge_defaults(data: dict, defaults: dict) -> dict:
    out = dict(data)  # keep schema-checked keys without defaults (e.g. plateau)
    for key, default in defaults.items():
        if key not in out:
            out[key] = default
        elif isinstance(default, dict):
            out[key] = _merge_defaults(out[key], default)
    return out


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    config_hash: str
    path: str = "<inline>"

    @classmethod
    def from_dict(cls, data: dict, path: str = "<inline>") -> "RunConfig":
        _check_keys(data, _SCHEMA)
        merged = _merge_defaults(data, _DEFAULTS)
        _validate_values(merged)
        digest = hashlib.sha256(repr(sorted_items(merged)).encode()).hexdigest()
        return cls(raw=merged, config_hash=digest[:16], path=path)

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            data = tomllib.loads(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"configuration file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
        return cls.from_dict(data, path=str(path))

    # --- accessors ----------------------------------------------------------
    def rest_medium(self) -> MediumSpec:
        med = self.raw["medium"]
        pert = self.raw["perturbation"]
        profile = PerturbationProfile(
            kind=pert["kind"], amplitude=pert["amplitude"],
            width=pert["width"], center=pert["center"],
            plateau=pert.get("plateau"),
        )
        oscillators = tuple(
            OscillatorSpec(o["chi0"], o["omega0"], o.get("g", 1.0))
            for o in med["oscillators"]
        )
        return MediumSpec(oscillators=oscillators, perturbation=profile,
                          c=med["c"])

    @property
    def perturbation_velocity(self) -> float:
        return self.raw["perturbation"]["velocity"]

    @property
    def frame_velocity(self) -> float:
        return self.raw["medium"]["frame_velocity"]

    @property
    def k_grid(self):
        import numpy as np

        scan = self.raw["scan"]
        return np.linspace(scan["k_min"], scan["k_max"], scan["k_points"])

    @property
    def omega_prime_values(self) -> list:
        return list(self.raw["scan"]["omega_prime"])

    @property
    def transverse_wavevector(self) -> tuple:
        return (self.raw["scan"]["ky"], self.raw["scan"]["kz"])

    @property
    def integrator_tol(self) -> float:
        return self.raw["tolerances"]["integrator"]

    @property
    def bracket_tol(self) -> float:
        return self.raw["tolerances"]["bracket"]

    @property
    def seed(self) -> int:
        return self.raw["run"]["seed"]

    @property
    def max_workers(self) -> int:
        return self.raw["run"]["max_workers"]

    @property
    def output_format(self) -> str:
        return self.raw["output"]["format"]

    @property
    def output_directory(self) -> str:
        return self.raw["output"]["directory"]

    @property
    def lattice_shape(self) -> tuple:
        return (self.raw["grid"]["sites"], self.raw["grid"]["spacing"])

    @property
    def mode_list(self) -> list:
        return list(self.raw["modes"]["list"])


def sorted_items(data):
    if isinstance(data, dict):
        return tuple((k, sorted_items(v)) for k, v in sorted(data.items()))
    if isinstance(data, list):
        return tuple(sorted_items(v) for v in data)
    return data


def _validate_values(data: dict):
    if not data["medium"]["oscillators"]:
        raise ConfigError("medium.oscillators must not be empty")
    if data["medium"]["c"] <= 0:
        raise ConfigError("medium.c must be > 0")
    for name, value in data["tolerances"].items():
        if value <= 0:
            raise ConfigError(f"tolerances.{name} must be > 0")
    scan = data["scan"]
    if scan["k_points"] < 1:
        raise ConfigError("scan.k_points must be >= 1")
    if scan["k_min"] <= 0 or scan["k_max"] < scan["k_min"]:
        raise ConfigError("scan requires 0 < k_min <= k_max")
    if not scan["omega_prime"]:
        raise ConfigError("scan.omega_prime must not be empty")
    if data["output"]["format"] not in ("csv", "json"):
        raise ConfigError("output.format must be 'csv' or 'json'")
    if abs(data["perturbation"]["velocity"]) >= data["medium"]["c"]:
        raise ConfigError("perturbation.velocity must satisfy |v| < c")
    if data["grid"]["sites"] < 4:
        raise ConfigError("grid.sites must be >= 4")
    if data["run"]["max_workers"] < 1:
        raise ConfigError("run.max_workers must be >= 1")
