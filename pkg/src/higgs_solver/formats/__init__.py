"""
Output formats: CSV series, structured-points volumes and checkpoints
"""

from .series import (
    write_line_csv,
    read_line_csv,
    read_series_csv,
    write_portrait_csv,
    write_difference_csv,
    DiagnosticsCsvWriter,
    MonitorCsvWriter,
    OutputError,
)
from .volume import write_volume
from .checkpoint import (
    save_checkpoint,
    load_checkpoint,
    read_checkpoint_header,
    CheckpointHeader,
    CorruptCheckpointError,
    PrecisionMismatchError,
)

__all__ = [
    "write_line_csv",
    "read_line_csv",
    "read_series_csv",
    "write_portrait_csv",
    "write_difference_csv",
    "DiagnosticsCsvWriter",
    "MonitorCsvWriter",
    "OutputError",
    "write_volume",
    "save_checkpoint",
    "load_checkpoint",
    "read_checkpoint_header",
    "CheckpointHeader",
    "CorruptCheckpointError",
    "PrecisionMismatchError",
]
