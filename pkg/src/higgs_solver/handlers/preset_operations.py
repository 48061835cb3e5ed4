"""
Preset listing
"""

from typing import Any, Dict

from ..config import RuntimeConfig
from ..experiment import dump_config
from ..presets import PRESET_NAMES
from ..utils import validate_choice
from .common import EXIT_OK, CommandResult, describe, resolve_experiment


def handle_presets(arguments: Dict[str, Any], config: RuntimeConfig) -> CommandResult:
    """
    List the experiment presets or show one as config text

    Args:
        arguments: {
            "show": str (optional, preset name to dump as YAML)
        }
        config: Runtime configuration (its default_n fills the resolution)
    """
    if arguments.get("show"):
        name = validate_choice(arguments["show"], "preset", PRESET_NAMES)
        return CommandResult(dump_config(resolve_experiment({"preset": name}, config)), EXIT_OK)

    lines = [f"📋 {len(PRESET_NAMES)} presets:"]
    for name in PRESET_NAMES:
        experiment = resolve_experiment({"preset": name}, config)
        lines.append(f"  {describe(experiment)}")
        lines.append(f"      {experiment.description}")
    return CommandResult("\n".join(lines), EXIT_OK)
