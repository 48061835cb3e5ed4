"""
Handler modules for the command-line operations
"""

from .common import (
    CommandResult,
    EXIT_OK,
    EXIT_ERROR,
    EXIT_SOLVER_STOP,
)

from .run_operations import (
    handle_run,
    handle_resume,
    handle_radial,
)

from .compare_operations import (
    handle_compare,
)

from .duffing_operations import (
    handle_duffing,
)

from .preset_operations import (
    handle_presets,
)

__all__ = [
    # Results
    "CommandResult",
    "EXIT_OK",
    "EXIT_ERROR",
    "EXIT_SOLVER_STOP",
    # Run operations
    "handle_run",
    "handle_resume",
    "handle_radial",
    # Studies
    "handle_compare",
    # Duffing reference
    "handle_duffing",
    # Presets
    "handle_presets",
]
