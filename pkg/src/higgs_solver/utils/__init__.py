"""
Utility modules for the Higgs de Sitter solver
"""

from .guards import (
    is_finite_field,
    is_cfl_satisfied,
    is_below_blowup_threshold,
    is_halo_clear,
    halo_max,
    get_stop_reasons,
    require_finite,
    require_geometry,
    NonFiniteError,
    GeometryMismatchError,
    SupportTouchesBoundaryError,
)
from .validators import (
    validate_path,
    validate_choice,
    validate_finite,
    validate_positive_float,
    validate_non_negative_float,
    validate_positive_int,
    validate_point,
    ValidationError,
)
from .file_helpers import (
    format_float,
    format_duration,
    ensure_parent_directory,
    sha256_digest,
    time_tag,
)

__all__ = [
    "is_finite_field",
    "is_cfl_satisfied",
    "is_below_blowup_threshold",
    "is_halo_clear",
    "halo_max",
    "get_stop_reasons",
    "require_finite",
    "require_geometry",
    "NonFiniteError",
    "GeometryMismatchError",
    "SupportTouchesBoundaryError",
    "validate_path",
    "validate_choice",
    "validate_finite",
    "validate_positive_float",
    "validate_non_negative_float",
    "validate_positive_int",
    "validate_point",
    "ValidationError",
    "format_float",
    "format_duration",
    "ensure_parent_directory",
    "sha256_digest",
    "time_tag",
]
