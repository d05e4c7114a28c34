"""
Experiment configuration.

Handles loading, validating and saving experiment YAML files. Missing
sections and keys take the defaults below; unknown keys are rejected
before any computation starts.
"""

import copy
import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from .errors import ConfigError

COMMANDS = ("catalog", "stein", "chaos", "npbound", "wp", "fbm")

DEFAULT_OUT_DIR = "data/runs"
DEFAULT_LOG_LEVEL = "WARNING"

TOLERANCE_DEFAULTS: Dict[str, float] = {
    "bands": 3.0,
    "gstar_rel": 1e-6,
    "density_abs": 1e-6,
    "residual": 1e-6,
    "k_drift": 0.05,
    "np_exact": 1e-12,
    "np_numeric": 1e-3,
    "gamma_identity": 1e-9,
    "product_scale": 1e-9,
}

SECTION_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "catalog": {
        "laws": None,
        "params": {},
        "grid_n": 200,
        "growth_powers": [0.5, 1.0, 1.5, 2.0, 2.5],
        "export_csv": False,
    },
    "stein": {
        "laws": [
            {"name": "normal"},
            {"name": "chi2_centered", "params": {"v": 1.0}},
            {"name": "gamma", "params": {"s": 1.0, "r": 2.0}},
            {"name": "student_t", "params": {"v": 5.0}},
            {"name": "laplace", "params": {"c": 1.0}},
        ],
        "families": ["W", "FM"],
        "n_functions": 20,
        "grid_n": 200,
        "stability": True,
    },
    "chaos": {
        "sequence": "block",
        "ns": [4, 8, 16, 32, 64],
        "product_orders": [[1, 1], [2, 1], [2, 2], [3, 2], [3, 3]],
        "product_cells": 3,
        "product_paths": 100_000,
        "moment_orders": [1, 2, 3],
    },
    "npbound": {
        "constructions": ["chi2_exact", "normal_exact", "block"],
        "block_ns": [4, 16, 64],
        "mehler_paths": 2000,
        "k": None,
    },
    "wp": {
        "sequence": "shrinking_atom",
        "ns": None,
        "control": "single_atom",
        "product_orders": [[1, 1], [1, 2], [2, 2]],
        "product_paths": 100_000,
        "third_moment": True,
    },
    "fbm": {
        "hurst": 0.7,
        "f_choice": "identity",
        "T_list": [256, 1024, 4096],
        "convention": "grid",
        "centering": "exact",
        "method": "auto",
        "terminal_bands": {"m2": 0.1, "m3": 0.8, "m4": 8.0},
        "autocovariance": {"n_steps": 256, "n_paths": 20_000, "max_lag": 10},
        "scaling": {"P": 4, "T_list": [128, 512, 2048, 8192], "n_sets": 5, "log2_points": 12},
    },
}

# Mappings whose keys are chosen by the user (law name → parameters).
FREE_FORM = {"catalog.params"}

# Keys left out of the config hash: they never change the numbers.
UNHASHED = ("out_dir", "threads")


def env_defaults() -> Dict[str, Any]:
    """
    Defaults read from the environment.

    Returns:
        Dictionary with log_level, out_dir and threads
    """
    try:
        threads = int(os.getenv("SMLAB_THREADS", "1"))
    except ValueError as exc:
        raise ConfigError(f"SMLAB_THREADS must be an integer: {exc}") from exc
    return {
        "log_level": os.getenv("SMLAB_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper(),
        "out_dir": os.getenv("SMLAB_OUT_DIR", DEFAULT_OUT_DIR),
        "threads": threads,
    }


def _merge(defaults: Dict[str, Any], given: Dict[str, Any], path: str) -> Dict[str, Any]:
    if not isinstance(given, dict):
        raise ConfigError(f"'{path}' must be a mapping")
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        dotted = f"{path}.{key}"
        if key not in defaults:
            raise ConfigError(f"Unknown configuration key: {dotted}")
        if dotted in FREE_FORM:
            if not isinstance(value, dict):
                raise ConfigError(f"'{dotted}' must be a mapping")
            out[key] = copy.deepcopy(value)
        elif isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], value or {}, dotted)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _check_law_list(laws: Any, path: str) -> None:
    if laws is None:
        return
    if not isinstance(laws, list):
        raise ConfigError(f"'{path}' must be a list")
    for idx, entry in enumerate(laws):
        if isinstance(entry, str):
            continue
        if not isinstance(entry, dict) or "name" not in entry:
            raise ConfigError(f"'{path}[{idx}]' needs a 'name'")
        extra = set(entry) - {"name", "params"}
        if extra:
            raise ConfigError(f"Unknown configuration key: {path}[{idx}].{sorted(extra)[0]}")


def _positive_int(value: Any, path: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"'{path}' must be an integer ≥ {minimum}, got {value!r}")
    return value


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment configuration."""

    command: str
    seed: int = 0
    threads: int = 1
    n_paths: int = 100_000
    out_dir: str = DEFAULT_OUT_DIR
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(TOLERANCE_DEFAULTS))
    sections: Dict[str, Dict[str, Any]] = field(default_factory=lambda: copy.deepcopy(SECTION_DEFAULTS))

    @classmethod
    def from_dict(cls, data: Dict[str, Any], env: Optional[Dict[str, Any]] = None) -> "ExperimentConfig":
        """
        Validate a raw mapping against the schema.

        Args:
            data: Parsed YAML document
            env: Environment defaults (default: env_defaults())

        Raises:
            ConfigError: On unknown keys, bad types or an unknown command
        """
        if not isinstance(data, dict):
            raise ConfigError("Configuration must be a mapping")
        env = env_defaults() if env is None else env
        allowed = {"command", "seed", "threads", "n_paths", "out_dir", "tolerances", *COMMANDS}
        for key in data:
            if key not in allowed:
                raise ConfigError(f"Unknown configuration key: {key}")

        command = data.get("command")
        if command not in COMMANDS:
            raise ConfigError(f"'command' must be one of {', '.join(COMMANDS)}, got {command!r}")

        seed = data.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"'seed' must be a non-negative integer, got {seed!r}")
        threads = data.get("threads")
        threads = env["threads"] if threads is None else threads
        n_paths = data.get("n_paths", 100_000)

        tolerances = _merge(TOLERANCE_DEFAULTS, data.get("tolerances") or {}, "tolerances")
        sections = {
            name: _merge(defaults, data.get(name) or {}, name)
            for name, defaults in SECTION_DEFAULTS.items()
        }
        _check_law_list(sections["catalog"]["laws"], "catalog.laws")
        _check_law_list(sections["stein"]["laws"], "stein.laws")

        return cls(
            command=command,
            seed=seed,
            threads=_positive_int(threads, "threads"),
            n_paths=_positive_int(n_paths, "n_paths", minimum=1000),
            out_dir=str(data.get("out_dir") or env["out_dir"]),
            tolerances=tolerances,
            sections=sections,
        )

    @property
    def section(self) -> Dict[str, Any]:
        """Settings of the configured command."""
        return self.sections[self.command]

    def with_overrides(
        self,
        seed: Optional[int] = None,
        threads: Optional[int] = None,
        out_dir: Optional[str] = None,
    ) -> "ExperimentConfig":
        """Apply command-line overrides; None leaves a field unchanged."""
        changes: Dict[str, Any] = {}
        if seed is not None:
            if seed < 0:
                raise ConfigError(f"seed must be non-negative, got {seed}")
            changes["seed"] = seed
        if threads is not None:
            changes["threads"] = _positive_int(threads, "threads")
        if out_dir is not None:
            changes["out_dir"] = out_dir
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "seed": self.seed,
            "threads": self.threads,
            "n_paths": self.n_paths,
            "out_dir": self.out_dir,
            "tolerances": copy.deepcopy(self.tolerances),
            **copy.deepcopy(self.sections),
        }

    @property
    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form, without out_dir and threads."""
        data = self.to_dict()
        for key in UNHASHED:
            data.pop(key, None)
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_experiment_config(
    path: str, command: Optional[str] = None, env: Optional[Dict[str, Any]] = None
) -> ExperimentConfig:
    """
    Load and validate an experiment configuration from YAML.

    Args:
        path: Path to the YAML file
        command: Command the file is run with; fills a missing "command"
            key and must match a present one
        env: Environment defaults (default: env_defaults())

    Returns:
        ExperimentConfig with every default filled in

    Raises:
        ConfigError: If the file is missing, empty, unparsable or invalid
    """
    config_path = Path(path)

    if not config_path.exists():
        raise ConfigError(f"Configuration file not found: {path}") from FileNotFoundError(path)

    try:
        with open(config_path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as exc:
        raise ConfigError(f"Cannot parse {path}: {exc}") from exc

    if not data:
        raise ConfigError(f"Configuration file is empty: {path}")

    if command is not None and isinstance(data, dict):
        given = data.setdefault("command", command)
        if given != command:
            raise ConfigError(f"{path} configures '{given}', not '{command}'")

    return ExperimentConfig.from_dict(data, env)


def save_experiment_config(path: str, config: ExperimentConfig) -> None:
    """
    Save a configuration to YAML.

    Args:
        path: Destination file
        config: Validated configuration
    """
    config_path = Path(path)

    # Ensure parent directory exists
    config_path.parent.mkdir(parents=True, exist_ok=True)

    with open(config_path, "w", encoding="utf-8") as f:
        yaml.dump(config.to_dict(), f, default_flow_style=False, allow_unicode=True, sort_keys=False)
