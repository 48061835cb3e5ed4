"""
CSV output: lines, diagnostics and monitor time series, phase portraits
"""

import csv
import os
from typing import Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np
import structlog

from ..analysis.diagnostics import DiagnosticsRecord, GridDifference, LineSeries
from ..analysis.duffing import PhasePortrait
from ..config import (
    DIAGNOSTICS_COLUMNS,
    DIFFERENCE_COLUMNS,
    LINE_COLUMNS,
    MONITOR_COLUMNS,
    PORTRAIT_COLUMNS,
)
from ..utils import ensure_parent_directory, format_float, require_finite

logger = structlog.get_logger(__name__)


class OutputError(OSError):
    """Raised when an output file cannot be written or read"""
    pass


def _open(path: str, mode: str) -> TextIO:
    try:
        if "r" not in mode:
            ensure_parent_directory(path)
        return open(path, mode, encoding="utf-8", newline="")
    except OSError as e:
        raise OutputError(f"Cannot open {path}: {e}") from e


def write_line_csv(series: LineSeries, path: str) -> None:
    """
    Write a line as "index,arc_param,phi" rows with 17 significant digits

    Raises:
        NonFiniteError: If the series has NaN or Inf values
        OutputError: If the file cannot be written
    """
    require_finite(series.phi, "line")
    with _open(path, "w") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(LINE_COLUMNS)
        for index, (s, phi) in enumerate(zip(series.arc_param, series.phi)):
            writer.writerow([index, format_float(s), format_float(phi)])
    logger.debug("line_written", path=path, which=series.which, samples=len(series.phi))


def read_line_csv(path: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Parse a line CSV

    Returns:
        Tuple of (index, arc_param, phi) arrays
    """
    with _open(path, "r") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != LINE_COLUMNS:
            raise OutputError(f"{path}: unexpected header {header}")
        rows = [row for row in reader if row]
    index = np.array([int(r[0]) for r in rows], dtype=np.int64)
    arc = np.array([float(r[1]) for r in rows], dtype=np.float64)
    phi = np.array([float(r[2]) for r in rows], dtype=np.float64)
    return index, arc, phi


class SeriesCsvWriter:
    """
    Append-only CSV time series

    The header is written when the file is new or empty. Every row is
    flushed, so an interrupted run leaves a valid prefix.
    """

    def __init__(self, path: str, columns: Sequence[str]):
        self.path = path
        self.columns = list(columns)
        self._file: Optional[TextIO] = None
        self._writer = None

    def open(self) -> "SeriesCsvWriter":
        fresh = not os.path.exists(self.path) or os.path.getsize(self.path) == 0
        self._file = _open(self.path, "a")
        self._writer = csv.writer(self._file, lineterminator="\n")
        if fresh:
            self._writer.writerow(self.columns)
            self._file.flush()
        return self

    def write_row(self, values: Sequence[object]) -> None:
        if self._file is None or self._writer is None:
            raise OutputError(f"{self.path} is not open")
        self._writer.writerow(values)
        self._file.flush()

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None
            self._writer = None

    def __enter__(self) -> "SeriesCsvWriter":
        return self.open()

    def __exit__(self, *exc_info: object) -> None:
        self.close()


def diagnostics_row(record: DiagnosticsRecord) -> List[str]:
    return [
        format_float(record.t),
        format_float(record.integral_phi),
        format_float(record.max_abs_phi),
        format_float(record.P),
        str(record.bubble_count),
        "pass" if record.cfl else "fail",
    ]


def monitor_row(record: DiagnosticsRecord) -> List[str]:
    return [
        format_float(record.t),
        format_float(record.integral_phi_cubed),
        str(record.bubble_count),
        format_float(record.bubbles.max_effective_radius),
    ]


class DiagnosticsCsvWriter(SeriesCsvWriter):
    """diagnostics.csv: t,integral_phi,max_abs_phi,P,bubble_count,cfl"""

    def __init__(self, path: str):
        super().__init__(path, DIAGNOSTICS_COLUMNS)

    def write(self, record: DiagnosticsRecord) -> None:
        self.write_row(diagnostics_row(record))


class MonitorCsvWriter(SeriesCsvWriter):
    """monitors.csv: t,integral_phi_cubed,bubble_count,max_effective_radius"""

    def __init__(self, path: str):
        super().__init__(path, MONITOR_COLUMNS)

    def write(self, record: DiagnosticsRecord) -> None:
        self.write_row(monitor_row(record))


def read_series_csv(path: str) -> List[Dict[str, str]]:
    """Rows of a time-series CSV as dicts keyed by column"""
    with _open(path, "r") as f:
        return list(csv.DictReader(f))


def write_portrait_csv(portrait: PhasePortrait, path: str) -> None:
    """Write basin labels as "phi0,phi1,label" rows"""
    with _open(path, "w") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(PORTRAIT_COLUMNS)
        for (phi0, phi1), label in zip(portrait.samples, portrait.labels):
            writer.writerow([format_float(phi0), format_float(phi1), label.value])
    logger.debug("portrait_written", path=path, samples=len(portrait.labels))


def write_difference_csv(diff: GridDifference, path: str) -> None:
    """Write a coarse-minus-fine line difference with the reference slope"""
    with _open(path, "w") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(DIFFERENCE_COLUMNS)
        rows = zip(diff.arc_param, diff.difference, diff.reference_slope)
        for index, (s, value, slope) in enumerate(rows):
            writer.writerow([index, format_float(s), format_float(value), format_float(slope)])
    logger.debug("difference_written", path=path, which=diff.which, max_norm=diff.max_norm)
