"""
Configuration management for the Higgs de Sitter solver
"""

import os
from dataclasses import dataclass
from typing import Optional


@dataclass
class RuntimeConfig:
    """Process-level runtime settings"""

    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = None
    log_format: str = "console"

    # Performance
    threads: int = 0  # 0 keeps the numba default
    default_n: int = 128  # desk-scale resolution

    # Output
    output_root: str = "runs"
    volume_binary: bool = False

    @classmethod
    def from_env(cls) -> "RuntimeConfig":
        """Create configuration from environment variables"""
        return cls(
            log_level=os.getenv("HIGGS_LOG_LEVEL", "INFO"),
            log_file=os.getenv("HIGGS_LOG_FILE"),
            log_format=os.getenv("HIGGS_LOG_FORMAT", "console").lower(),
            threads=int(os.getenv("HIGGS_THREADS", "0")),
            default_n=int(os.getenv("HIGGS_DEFAULT_N", "128")),
            output_root=os.getenv("HIGGS_OUTPUT_ROOT", "runs"),
            volume_binary=os.getenv("HIGGS_VOLUME_BINARY", "false").lower() == "true",
        )


# Fourth-order central second derivative, offsets -2..2 (scaled by 1/dx^2)
SECOND_DERIVATIVE_WEIGHTS = (-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0)

# Fourth-order central first derivative, offsets -2..2 (scaled by 1/dx)
FIRST_DERIVATIVE_WEIGHTS = (1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0)

# Second derivative at r=0 from even symmetry, offsets 0..2 (scaled by 1/dr^2)
ORIGIN_WEIGHTS = (-5.0 / 2.0, 8.0 / 3.0, -1.0 / 6.0)

# Stencil reach in grid points
HALO_WIDTH = 2

# Smallest resolution that leaves an interior behind the halo
MIN_RESOLUTION = 9

# Damping coefficient of the expanding background in three space dimensions
DAMPING = 3.0
SPACE_DIMENSIONS = 3

# Run defaults
DT_PER_DX = 1.0 / 20.0
DEFAULT_SCALING = 5.0
DEFAULT_BLOWUP_THRESHOLD = 1.0e6
DEFAULT_HALO_TOLERANCE = 1.0e-4
DEFAULT_ZERO_FRACTION = 1.0e-9
# A wall counts when both adjoining sign regions reach this fraction of max|phi|
DEFAULT_RESOLVED_FRACTION = 1.0e-2

# Duffing classification
DUFFING_PROXIMITY = 1.0e-6
DUFFING_T_MAX = 50.0

# Output schemas
DIAGNOSTICS_COLUMNS = ["t", "integral_phi", "max_abs_phi", "P", "bubble_count", "cfl"]
MONITOR_COLUMNS = ["t", "integral_phi_cubed", "bubble_count", "max_effective_radius"]
LINE_COLUMNS = ["index", "arc_param", "phi"]
PORTRAIT_COLUMNS = ["phi0", "phi1", "label"]
DIFFERENCE_COLUMNS = ["index", "arc_param", "difference", "reference_slope"]

# Checkpoint format
CHECKPOINT_MAGIC = b"HIGGSCKP"
CHECKPOINT_VERSION = 1

GEOMETRIES = ["cube3d", "radial1d"]
PRECISIONS = ["double", "single"]
LINE_CHOICES = ["midline_x", "main_diagonal"]
CFL_POLICIES = ["stop", "warn"]
