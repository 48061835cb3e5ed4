"""
Run-time guards for field states
"""

import math
from typing import List, Optional, Tuple

import numpy as np


class NonFiniteError(ArithmeticError):
    """Raised when a field contains NaN or Inf entries"""
    pass


class GeometryMismatchError(ValueError):
    """Raised when an operator is applied to a grid of the wrong geometry"""
    pass


class SupportTouchesBoundaryError(ValueError):
    """Raised when initial data reaches into the stencil halo"""
    pass


def is_finite_field(array: np.ndarray, name: str = "field") -> Tuple[bool, Optional[str]]:
    """
    Check that every entry of an array is finite

    Args:
        array: Array to check
        name: Label used in the message

    Returns:
        Tuple of (is_finite, message)
    """
    if np.isfinite(array).all():
        return True, None

    bad = int(array.size - np.count_nonzero(np.isfinite(array)))
    return False, f"{name} has {bad} non-finite entries"


def is_cfl_satisfied(observed: float, bound: float) -> Tuple[bool, Optional[str]]:
    """
    Check the field-magnitude CFL bound |phi| < dx / (sqrt(3) dt)

    Returns:
        Tuple of (is_satisfied, message)
    """
    if observed < bound:
        return True, None

    return False, f"max|phi| = {observed:.6g} exceeds CFL bound {bound:.6g}"


def is_below_blowup_threshold(observed: float, threshold: float) -> Tuple[bool, Optional[str]]:
    """
    Check that the field magnitude has not crossed the blow-up threshold

    Returns:
        Tuple of (is_below, message)
    """
    if math.isfinite(observed) and observed < threshold:
        return True, None

    return False, f"max|phi| = {observed:.6g} reached blow-up threshold {threshold:.6g}"


def halo_max(v1: np.ndarray, halo_width: int) -> float:
    """
    Largest |v1| over the halo_width interior layers next to every face

    The boundary layer itself is pinned to zero and is not part of the halo.
    """
    if v1.ndim == 1:
        return float(np.max(np.abs(v1[-(halo_width + 1):-1])))

    shell = 0.0
    for axis in range(v1.ndim):
        last = v1.shape[axis] - 1
        layers = np.r_[1:halo_width + 1, last - halo_width:last]
        shell = max(shell, float(np.max(np.abs(np.take(v1, layers, axis=axis)))))
    return shell


def is_halo_clear(
    v1: np.ndarray,
    halo_width: int,
    tolerance: float,
    max_abs: float,
) -> Tuple[bool, Optional[str]]:
    """
    Check that the field has not entered the stencil halo

    Entries at or below tolerance * max|phi| count as numerical dust.

    Returns:
        Tuple of (is_clear, message)
    """
    if max_abs == 0.0:
        return True, None

    observed = halo_max(v1, halo_width)
    if observed <= tolerance * max_abs:
        return True, None

    return False, (
        f"field entered the {halo_width}-point halo: |phi| = {observed:.3e} "
        f"(tolerance {tolerance:.1e} x max|phi| {max_abs:.3e})"
    )


def get_stop_reasons(
    v1: np.ndarray,
    *,
    max_abs: float,
    cfl_bound: float,
    blowup_threshold: float,
    halo_width: int,
    halo_tolerance: float,
) -> List[Tuple[str, str]]:
    """
    Collect every guard that fails for a state

    Args:
        v1: Field values
        max_abs: Precomputed max|v1| (inf or nan when the field is not finite)
        cfl_bound: dx / (sqrt(3) dt)
        blowup_threshold: Magnitude treated as blow-up
        halo_width: Stencil reach in grid points
        halo_tolerance: Relative dust level in the halo

    Returns:
        List of (guard name, message), blow-up first
    """
    reasons = []

    below, msg = is_below_blowup_threshold(max_abs, blowup_threshold)
    if not below:
        reasons.append(("blow_up", msg))
        return reasons

    satisfied, msg = is_cfl_satisfied(max_abs, cfl_bound)
    if not satisfied:
        reasons.append(("cfl_violation", msg))

    clear, msg = is_halo_clear(v1, halo_width, halo_tolerance, max_abs)
    if not clear:
        reasons.append(("halo_reached", msg))

    return reasons


def require_finite(array: np.ndarray, name: str = "field") -> None:
    """
    Raise if an array has non-finite entries

    Raises:
        NonFiniteError: If any entry is NaN or Inf
    """
    finite, msg = is_finite_field(array, name)
    if not finite:
        raise NonFiniteError(msg)


def require_geometry(actual: object, expected: object, operation: str) -> None:
    """
    Raise if an operation is applied to the wrong grid geometry

    Raises:
        GeometryMismatchError: If geometries differ
    """
    if actual != expected:
        raise GeometryMismatchError(
            f"Operation '{operation}' requires {expected} geometry, got {actual}"
        )
