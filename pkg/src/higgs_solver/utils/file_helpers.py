"""
File helper utilities
"""

import hashlib
import math
import os


def format_float(value: float) -> str:
    """
    Format a number for CSV output

    Uses 17 significant digits so that float(format_float(x)) == x for any
    double; str.format never consults the locale.

    Args:
        value: Number to format

    Returns:
        Formatted number
    """
    return format(float(value), ".17g")


def format_duration(seconds: float) -> str:
    """
    Format a wall-clock duration in human-readable form

    Args:
        seconds: Duration in seconds

    Returns:
        Formatted duration
    """
    if not math.isfinite(seconds):
        return "unknown"
    if seconds < 60:
        return f"{seconds:.2f} s"
    minutes, secs = divmod(seconds, 60)
    if minutes < 60:
        return f"{int(minutes)} min {secs:.0f} s"
    hours, minutes = divmod(minutes, 60)
    return f"{int(hours)} h {int(minutes)} min"


def ensure_parent_directory(file_path: str) -> str:
    """
    Create the parent directory of a file if needed

    Args:
        file_path: Target file path

    Returns:
        The same path
    """
    parent_dir = os.path.dirname(file_path)
    if parent_dir and not os.path.exists(parent_dir):
        os.makedirs(parent_dir, exist_ok=True)
    return file_path


def sha256_digest(payload: bytes) -> bytes:
    """Raw SHA-256 digest of a byte string"""
    hasher = hashlib.sha256()
    hasher.update(payload)
    return hasher.digest()


def time_tag(t: float) -> str:
    """
    File-name tag for a simulation time, e.g. 0.4 -> "t0.4000"

    Args:
        t: Simulation time

    Returns:
        Tag safe for file names
    """
    return f"t{t:.4f}"
