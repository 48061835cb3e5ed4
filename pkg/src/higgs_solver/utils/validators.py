"""
Input validation utilities
"""

import math
import os
from typing import Optional, Sequence


class ValidationError(Exception):
    """Raised when validation fails"""
    pass


def validate_path(path: str) -> str:
    """
    Validate and normalize an output path

    Args:
        path: Path to validate

    Returns:
        Normalized absolute path

    Raises:
        ValidationError: If validation fails
    """
    if not path:
        raise ValidationError("Path cannot be empty")

    if not isinstance(path, str):
        raise ValidationError(f"Path must be a string, got {type(path)}")

    if "\x00" in path:
        raise ValidationError("Path cannot contain null bytes")

    return os.path.abspath(path)


def validate_choice(value: str, name: str, choices: Sequence[str]) -> str:
    """
    Validate a case-insensitive enumerated option

    Args:
        value: Option to validate
        name: Name of the parameter
        choices: Allowed values (lowercase)

    Returns:
        Validated option (lowercase)

    Raises:
        ValidationError: If option is not one of the choices
    """
    if not isinstance(value, str):
        raise ValidationError(f"{name} must be a string, got {type(value).__name__}")

    value_lower = value.lower()
    if value_lower not in choices:
        raise ValidationError(
            f"Invalid {name}: {value}. "
            f"Valid values: {', '.join(choices)}"
        )

    return value_lower


def validate_finite(value: float, name: str) -> float:
    """
    Validate a finite real number

    Raises:
        ValidationError: If value is not a finite number
    """
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{name} must be a number, got {type(value).__name__}")

    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value}")

    return float(value)


def validate_positive_float(value: float, name: str, max_value: Optional[float] = None) -> float:
    """
    Validate a strictly positive finite number

    Args:
        value: Value to validate
        name: Name of the parameter
        max_value: Exclusive upper bound

    Returns:
        Validated value

    Raises:
        ValidationError: If validation fails
    """
    value = validate_finite(value, name)

    if value <= 0:
        raise ValidationError(f"{name} must be > 0, got {value}")

    if max_value is not None and value >= max_value:
        raise ValidationError(f"{name} must be < {max_value}, got {value}")

    return value


def validate_non_negative_float(value: float, name: str) -> float:
    """Validate a finite number >= 0"""
    value = validate_finite(value, name)

    if value < 0:
        raise ValidationError(f"{name} must be >= 0, got {value}")

    return value


def validate_positive_int(value: int, name: str, min_value: int = 1) -> int:
    """
    Validate an integer with a lower bound

    Args:
        value: Value to validate
        name: Name of the parameter
        min_value: Smallest allowed value

    Returns:
        Validated value

    Raises:
        ValidationError: If validation fails
    """
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{name} must be an integer, got {type(value).__name__}")

    if value < min_value:
        raise ValidationError(f"{name} must be at least {min_value}, got {value}")

    return value


def validate_point(point: Sequence[float], name: str, dimension: int) -> tuple:
    """
    Validate a coordinate tuple of the given dimension

    Raises:
        ValidationError: If the point has the wrong length or non-finite entries
    """
    if isinstance(point, (int, float)) and not isinstance(point, bool):
        point = (point,)

    if not isinstance(point, (list, tuple)) or len(point) != dimension:
        raise ValidationError(f"{name} must have {dimension} coordinates, got {point!r}")

    return tuple(validate_finite(c, f"{name}[{i}]") for i, c in enumerate(point))

