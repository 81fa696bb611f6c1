"""Study configuration: TOML files, presets and validation.

A config file holds optional top-level ``preset``, ``seed`` and ``out`` keys
plus the tables below. Values are merged in the order built-in defaults,
named preset, file, command-line flags. Every key is checked against a
schema before any study starts; unknown keys are rejected with the line
where they appear.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError, InvalidParameterError
from .estimation import FitBounds
from .gaussian_model import ModelParams
from .homodyne import NoiseConfig
from .qca import DESK_MODEL, QcaConfig

__all__ = ["ExperimentConfig", "load_config", "resolve_config", "PRESETS", "config_digest"]

_FLOAT = "float"
_INT = "int"
_BOOL = "bool"
_STR = "str"
_FLOATS = "list[float]"
_STRS = "list[str]"
_PAIR = "pair"

SCHEMA: dict[str, dict[str, str]] = {
    "model": {
        "r": _FLOAT, "epsilon": _FLOAT, "epsilon_prime": _FLOAT, "n_b": _FLOAT,
        "n_b_prime": _FLOAT, "phi_0": _FLOAT, "phi_c": _FLOAT,
    },
    "noise": {"gain_m": _FLOAT, "mean_offset": _FLOAT, "sigma_e_sq": _FLOAT, "method": _STR, "bins": _INT},
    "qca": {
        "eta_initial": _FLOAT, "eta_post_factor": _FLOAT, "max_iterations": _INT, "fd_step": _FLOAT,
        "samples_per_iteration": _INT, "convergence_sigma_multiple": _FLOAT, "estimator": _STR,
        "failure_multiple": _FLOAT,
    },
    "landscape": {"r_values": _FLOATS, "grid": _FLOATS, "grid_points": _INT, "mc": _BOOL, "samples": _INT},
    "precision": {"r_values": _FLOATS, "n_runs": _INT, "n_jobs": _INT},
    "robustness": {
        "enabled": _BOOL, "control_phases_pi": _FLOATS, "target_phases_pi": _FLOATS,
        "fixed_target_pi": _FLOAT, "fixed_control_pi": _FLOAT,
    },
    "fit": {
        "input": _STR, "epsilon": _FLOAT, "epsilon_prime_bounds": _PAIR, "n_in_bounds": _PAIR,
        "models": _STRS, "weighted": _BOOL, "n_starts": _INT, "fwhm_fraction": _FLOAT,
    },
    "ingest": {"trace": _STR, "sidecar": _STR, "bins": _INT},
    "verify": {"oracle_points": _INT, "mc_samples": _INT, "mc_tolerance": _FLOAT, "mutation": _STR},
}
TOP_LEVEL = {"preset": _STR, "seed": _INT, "out": _STR}

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "out": "out",
    "model": {
        "r": DESK_MODEL.r, "epsilon": DESK_MODEL.epsilon, "epsilon_prime": DESK_MODEL.epsilon_prime,
        "n_b": DESK_MODEL.n_b, "n_b_prime": DESK_MODEL.n_b_prime, "phi_0": 0.0, "phi_c": 3.0,
    },
    "noise": {"gain_m": 1.0, "mean_offset": 0.0, "sigma_e_sq": 0.0, "method": "direct-variance", "bins": 128},
    "qca": {
        "eta_initial": 0.5, "eta_post_factor": 2.0, "max_iterations": 550, "fd_step": 0.01,
        "samples_per_iteration": 100_000, "convergence_sigma_multiple": 1.0, "estimator": "trace",
        "failure_multiple": 10.0,
    },
    "landscape": {"r_values": [0.18, 0.35, 0.74], "grid": [], "grid_points": 201, "mc": False, "samples": 100_000},
    "precision": {"r_values": [0.18, 0.35, 0.74], "n_runs": 5, "n_jobs": 1},
    "robustness": {
        "enabled": False, "control_phases_pi": [1.0, 0.78, 0.55], "target_phases_pi": [0.0, 0.33, 0.49],
        "fixed_target_pi": 0.0, "fixed_control_pi": 1.0,
    },
    "fit": {
        "input": "", "epsilon": 0.77, "epsilon_prime_bounds": [0.0, 0.6], "n_in_bounds": [0.71, 10.0],
        "models": ["noisy-seed"], "weighted": False, "n_starts": 16, "fwhm_fraction": 0.12,
    },
    "ingest": {"trace": "", "sidecar": "", "bins": 128},
    "verify": {"oracle_points": 20, "mc_samples": 200_000, "mc_tolerance": 0.02, "mutation": ""},
}

_IDEAL = {"epsilon": 1.0, "epsilon_prime": 1.0, "n_b": 0.0, "n_b_prime": 0.0}

PRESETS: dict[str, dict[str, Any]] = {
    # defaults as shipped: lossy desk model, 3 rad initial offset, 550 iterations
    "desk": {},
    # landscape family from weak to strong squeezing with ideal optics
    "landscape-family": {"model": dict(_IDEAL), "landscape": {"r_values": [0.01, 0.4, 1.5, 2.5]}},
    # measured-landscape analog at the three working squeezing levels
    "landscape-measured": {"landscape": {"r_values": [0.18, 0.35, 0.74], "mc": True}},
    # five runs per squeezing level
    "table1": {"precision": {"n_runs": 5}},
    # fifteen runs per squeezing level
    "table2": {"precision": {"n_runs": 15}},
    # desk-scale statistics used by the acceptance suite
    "table-desk": {"precision": {"n_runs": 20}},
    "robustness": {"robustness": {"enabled": True}},
    "fit-r0.18": {"fit": {"epsilon_prime_bounds": [0.0, 0.7]}},
    "fit-r0.35": {"fit": {"epsilon_prime_bounds": [0.0, 0.7]}},
    "fit-r0.74": {"fit": {"epsilon_prime_bounds": [0.0, 0.6]}},
}

FIT_MODELS = ("noisy-seed", "noisy-homodyne")
MUTATIONS = ("", "flip-a12")


def _merge(base: dict, overlay: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _line_of(text: Optional[str], section: Optional[str], key: str) -> str:
    if not text:
        return ""
    current = None
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for lineno, line in enumerate(text.splitlines(), start=1):
        header = re.match(r"^\s*\[([^\]]+)\]", line)
        if header:
            current = header.group(1).strip()
            if section is None and current == key:
                return f"line {lineno}: "
            continue
        if current == section and pattern.match(line):
            return f"line {lineno}: "
    return ""


def _coerce(kind: str, value, where: str):
    if kind == _FLOAT:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(f"{where} must be finite")
        return float(value)
    if kind == _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer, got {value!r}")
        return int(value)
    if kind == _BOOL:
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true or false, got {value!r}")
        return value
    if kind == _STR:
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string, got {value!r}")
        return value
    if kind in (_FLOATS, _PAIR):
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list of numbers, got {value!r}")
        out = [_coerce(_FLOAT, v, where) for v in value]
        if kind == _PAIR and len(out) != 2:
            raise ConfigError(f"{where} must be a [lower, upper] pair")
        return out
    if kind == _STRS:
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list of strings, got {value!r}")
        return [_coerce(_STR, v, where) for v in value]
    raise AssertionError(kind)


def _check_schema(raw: dict, text: Optional[str] = None) -> dict:
    clean: dict[str, Any] = {}
    for key, value in raw.items():
        if key in TOP_LEVEL:
            clean[key] = _coerce(TOP_LEVEL[key], value, _line_of(text, None, key) + key)
            continue
        if key not in SCHEMA:
            raise ConfigError(f"{_line_of(text, None, key)}unknown key or table {key!r}")
        if not isinstance(value, dict):
            raise ConfigError(f"{_line_of(text, None, key)}{key!r} must be a table")
        section = {}
        for sub, v in value.items():
            where = _line_of(text, key, sub)
            if sub not in SCHEMA[key]:
                raise ConfigError(f"{where}unknown key {sub!r} in [{key}]")
            section[sub] = _coerce(SCHEMA[key][sub], v, f"{where}{key}.{sub}")
        clean[key] = section
    return clean


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    out: Path
    model: ModelParams
    noise: NoiseConfig
    qca: QcaConfig
    landscape: dict
    precision: dict
    robustness: dict
    fit: dict
    ingest: dict
    verify: dict
    resolved: dict = field(repr=False)

    @property
    def fit_bounds(self) -> FitBounds:
        return FitBounds(
            epsilon_prime=tuple(self.fit["epsilon_prime_bounds"]), n_in=tuple(self.fit["n_in_bounds"])
        )

    def landscape_grid(self) -> list:
        if self.landscape["grid"]:
            return list(self.landscape["grid"])
        n = self.landscape["grid_points"]
        return [-math.pi + 2.0 * math.pi * i / (n - 1) for i in range(n)]


def config_digest(resolved: dict) -> str:
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _build(resolved: dict) -> ExperimentConfig:
    try:
        model = ModelParams(**resolved["model"])
        noise = NoiseConfig(**resolved["noise"])
        qca = QcaConfig(model=model, noise=noise, seed=resolved["seed"], **resolved["qca"])
        FitBounds(
            epsilon_prime=tuple(resolved["fit"]["epsilon_prime_bounds"]),
            n_in=tuple(resolved["fit"]["n_in_bounds"]),
        )
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from exc

    land = resolved["landscape"]
    if not land["r_values"]:
        raise ConfigError("landscape.r_values is empty")
    if any(r < 0 for r in land["r_values"]):
        raise ConfigError("landscape.r_values must be >= 0")
    if land["grid"]:
        if any(b <= a for a, b in zip(land["grid"], land["grid"][1:])):
            raise ConfigError("landscape.grid must be strictly increasing")
    elif land["grid_points"] < 2:
        raise ConfigError("landscape grid is empty: set grid or grid_points >= 2")
    if land["samples"] < 1000:
        raise ConfigError("landscape.samples must be >= 1000")

    prec = resolved["precision"]
    if prec["n_runs"] < 2:
        raise ConfigError(f"precision.n_runs must be >= 2, got {prec['n_runs']}")
    if not prec["r_values"]:
        raise ConfigError("precision.r_values is empty")
    if prec["n_jobs"] == 0:
        raise ConfigError("precision.n_jobs must be nonzero")

    fit = resolved["fit"]
    unknown = [m for m in fit["models"] if m not in FIT_MODELS]
    if unknown or not fit["models"]:
        raise ConfigError(f"fit.models must be drawn from {FIT_MODELS}, got {fit['models']}")
    if not 0 < fit["epsilon"] <= 1:
        raise ConfigError("fit.epsilon must lie in (0, 1]")
    if not 0 < fit["fwhm_fraction"] < 1:
        raise ConfigError("fit.fwhm_fraction must lie in (0, 1)")
    if fit["n_starts"] < 1:
        raise ConfigError("fit.n_starts must be >= 1")

    ver = resolved["verify"]
    if ver["mutation"] not in MUTATIONS:
        raise ConfigError(f"verify.mutation must be one of {MUTATIONS}")
    if ver["oracle_points"] < 1 or ver["mc_samples"] < 1000 or not ver["mc_tolerance"] > 0:
        raise ConfigError("verify needs oracle_points >= 1, mc_samples >= 1000, mc_tolerance > 0")

    if resolved["seed"] < 0 or resolved["seed"] >= 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return ExperimentConfig(
        seed=resolved["seed"],
        out=Path(resolved["out"]),
        model=model,
        noise=noise,
        qca=qca,
        landscape=land,
        precision=prec,
        robustness=resolved["robustness"],
        fit=fit,
        ingest=resolved["ingest"],
        verify=ver,
        resolved=resolved,
    )


def resolve_config(raw: Optional[dict] = None, overrides: Optional[dict] = None, text: Optional[str] = None) -> ExperimentConfig:
    """Validate ``raw`` (parsed TOML) and merge it over defaults and its preset."""
    clean = _check_schema(raw or {}, text)
    preset = clean.pop("preset", "desk")
    if preset not in PRESETS:
        raise ConfigError(f"{_line_of(text, None, 'preset')}unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    resolved = _merge(_merge(DEFAULTS, PRESETS[preset]), clean)
    if overrides:
        resolved = _merge(resolved, _check_schema(overrides))
    resolved["preset"] = preset
    return _build(resolved)


def load_config(path=None, overrides: Optional[dict] = None) -> ExperimentConfig:
    if path is None:
        return resolve_config({}, overrides)
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return resolve_config(raw, overrides, text)
