"""
Shared pieces of the command handlers
"""

import dataclasses
import os
from dataclasses import dataclass
from typing import Any, Dict, Optional

import structlog
import yaml

from ..config import RuntimeConfig
from ..experiment import ExperimentConfig, dump_config, load_config
from ..utils import ValidationError, validate_path

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_SOLVER_STOP = 2

# Command-line overrides and the config keys they set
OVERRIDE_KEYS = {
    "n": "n",
    "t_end": "t_end",
    "dt": "dt",
    "precision": "precision",
    "sample_every": "sample_every",
    "output_dir": "output_dir",
    "geometry": "geometry",
    "cfl_policy": "cfl_policy",
}


@dataclass(frozen=True)
class CommandResult:
    """Text for the user plus the process exit code"""

    text: str
    exit_code: int = EXIT_OK


def read_text(path: str) -> str:
    path = validate_path(path)
    if not os.path.isfile(path):
        raise ValidationError(f"Config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def resolve_experiment(arguments: Dict[str, Any], config: RuntimeConfig) -> ExperimentConfig:
    """
    Build the experiment from a config file and/or preset plus overrides

    Args:
        arguments: {
            "config_path": str (optional),
            "preset": str (optional),
            "n", "t_end", "dt", "precision", "sample_every", "output_dir",
            "geometry", "cfl_policy": overrides (optional)
        }
        config: Runtime configuration

    Returns:
        Validated ExperimentConfig
    """
    if arguments.get("config_path"):
        experiment = load_config(read_text(arguments["config_path"]), config.default_n)
        if arguments.get("preset"):
            raise ValidationError("Give either a config file or a preset, not both")
    elif arguments.get("preset"):
        experiment = load_config(f"preset: {arguments['preset']}\n", config.default_n)
    else:
        raise ValidationError("A preset or a config file is required")

    overrides = {
        key: arguments[name]
        for name, key in OVERRIDE_KEYS.items()
        if arguments.get(name) is not None
    }
    if not overrides:
        return experiment

    # Overrides go through the same validation as file keys.
    mapping = experiment.to_mapping()
    if "t_end" in overrides:
        t_end = float(overrides["t_end"])
        mapping["line_times"] = [t for t in mapping["line_times"] if t <= t_end]
        mapping["volume_times"] = [t for t in mapping["volume_times"] if t <= t_end]
    if overrides.get("geometry") == "radial1d":
        mapping["volume_times"] = []
        if experiment.geometry.value == "cube3d":
            mapping["initial"] = to_radial_mapping(experiment)
    mapping.update(overrides)
    return load_config(dump_config_mapping(mapping), config.default_n)


def to_radial_mapping(experiment: ExperimentConfig) -> Dict[str, Any]:
    radial = dataclasses.replace(experiment, initial=experiment.initial.to_radial())
    return radial.to_mapping()["initial"]


def dump_config_mapping(mapping: Dict[str, Any]) -> str:
    return yaml.safe_dump(mapping, sort_keys=False)


def output_directory(experiment: ExperimentConfig, config: RuntimeConfig, default: str) -> str:
    return experiment.output_dir or os.path.join(config.output_root, experiment.preset or default)


def save_experiment(experiment: ExperimentConfig, directory: str) -> str:
    """Write config.yaml next to the run outputs"""
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, "config.yaml")
    with open(path, "w", encoding="utf-8") as f:
        f.write(dump_config(experiment))
    return path


def describe(experiment: ExperimentConfig, prefix: Optional[str] = None) -> str:
    label = prefix or experiment.preset or "custom"
    return (
        f"{label}: geometry={experiment.geometry.value} N={experiment.n} "
        f"L={experiment.scaling:g} mu2={experiment.mu2:g} lambda={experiment.lam:g} "
        f"t_end={experiment.t_end:g} precision={experiment.precision.value}"
    )
