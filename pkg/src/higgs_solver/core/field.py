"""
Grid geometry, field storage and compactly supported initial data
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
import structlog

from ..config import DEFAULT_SCALING, HALO_WIDTH, MIN_RESOLUTION
from ..utils import (
    SupportTouchesBoundaryError,
    ValidationError,
    require_finite,
    validate_point,
    validate_positive_float,
    validate_positive_int,
)

logger = structlog.get_logger(__name__)


class Geometry(str, Enum):
    """Lattice geometry"""

    CUBE3D = "cube3d"
    RADIAL1D = "radial1d"

    @property
    def dimension(self) -> int:
        return 3 if self is Geometry.CUBE3D else 1


class Precision(str, Enum):
    """Floating-point mode of a run"""

    DOUBLE = "double"
    SINGLE = "single"

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.float64) if self is Precision.DOUBLE else np.dtype(np.float32)

    @classmethod
    def from_dtype(cls, dtype: np.dtype) -> "Precision":
        if np.dtype(dtype) == np.float64:
            return cls.DOUBLE
        if np.dtype(dtype) == np.float32:
            return cls.SINGLE
        raise ValidationError(f"Unsupported field dtype: {dtype}")


@dataclass(frozen=True)
class GridSpec:
    """
    Uniform lattice on the unit cube (or the unit radial interval)

    There are n + 1 nodes per axis, indices 0..n, spacing 1/n; boundary nodes
    are stored and pinned to zero.
    """

    n: int
    scaling: float = DEFAULT_SCALING
    geometry: Geometry = Geometry.CUBE3D

    def __post_init__(self) -> None:
        validate_positive_int(self.n, "n", min_value=MIN_RESOLUTION)
        validate_positive_float(self.scaling, "scaling")
        object.__setattr__(self, "geometry", Geometry(self.geometry))

    @property
    def dx(self) -> float:
        return 1.0 / self.n

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.n + 1,) * self.geometry.dimension

    @property
    def is_radial(self) -> bool:
        return self.geometry is Geometry.RADIAL1D

    def coordinates(self) -> np.ndarray:
        """Node coordinates along one axis, i / n for i = 0..n"""
        return np.arange(self.n + 1, dtype=np.float64) / self.n


@dataclass(frozen=True)
class FieldState:
    """
    The pair (phi, phi_t) on the lattice at time t

    ``data`` has shape (2, *grid.shape): data[0] is v1 = phi, data[1] is
    v2 = phi_t. States are read-only snapshots.
    """

    data: np.ndarray
    t: float = 0.0
    blown_up: bool = False

    def __post_init__(self) -> None:
        data = np.asarray(self.data)
        if data.ndim < 2 or data.shape[0] != 2:
            raise ValidationError(f"Field data must have shape (2, ...), got {data.shape}")
        # The caller's buffer stays writable; only the state's view is frozen.
        view = data.view()
        view.flags.writeable = False
        object.__setattr__(self, "data", view)

    @classmethod
    def from_components(cls, v1: np.ndarray, v2: np.ndarray, t: float = 0.0) -> "FieldState":
        if v1.shape != v2.shape:
            raise ValidationError(f"v1 {v1.shape} and v2 {v2.shape} extents differ")
        return cls(np.stack([v1, v2]), t)

    @property
    def v1(self) -> np.ndarray:
        return self.data[0]

    @property
    def v2(self) -> np.ndarray:
        return self.data[1]

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def matches(self, grid: GridSpec) -> bool:
        return self.data.shape[1:] == grid.shape


@dataclass(frozen=True)
class BumpSpec:
    """
    Smooth bump A * exp(1/R^2 - 1/(R^2 - |x - C|^2)) supported in |x - C| < R

    A 3-coordinate center places the bump in the unit cube; a 1-coordinate
    center is a radial position (the ball about the symmetry center).
    """

    center: Tuple[float, ...]
    radius: float
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        center = self.center
        if isinstance(center, (int, float)):
            center = (center,)
        if len(center) not in (1, 3):
            raise ValidationError(f"Bump center must have 1 or 3 coordinates, got {center!r}")
        center = validate_point(center, "center", len(center))
        object.__setattr__(self, "center", center)
        validate_positive_float(self.radius, "radius", max_value=1.0)

        if self.support_margin() <= 0.0:
            raise ValidationError(
                f"Bump support (center {center}, radius {self.radius}) "
                f"is not strictly inside the unit domain"
            )

    @property
    def dimension(self) -> int:
        return len(self.center)

    def support_margin(self) -> float:
        """Distance from the support ball to the nearest domain boundary"""
        if self.dimension == 1:
            if self.center[0] < 0.0:
                return -math.inf
            return 1.0 - self.center[0] - self.radius
        return min(min(c - self.radius, 1.0 - c - self.radius) for c in self.center)

    def scaled(self, factor: float) -> "BumpSpec":
        return BumpSpec(self.center, self.radius, self.amplitude * factor)


@dataclass(frozen=True)
class Term:
    """weight * product of bumps, optionally times sin(2 pi x) along the first axis"""

    weight: float
    bumps: Tuple[BumpSpec, ...]
    modulate_sin: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "bumps", tuple(self.bumps))
        if not self.bumps:
            raise ValidationError("A term needs at least one bump")
        dims = {b.dimension for b in self.bumps}
        if len(dims) != 1:
            raise ValidationError("All bumps in a term must share one dimension")

    @property
    def dimension(self) -> int:
        return self.bumps[0].dimension

    def support_margin(self) -> float:
        # The support of a product lies inside every factor's ball.
        return max(b.support_margin() for b in self.bumps)


@dataclass(frozen=True)
class InitialData:
    """Recipe for (phi0, phi1) as sums of bump-product terms"""

    phi0_terms: Tuple[Term, ...] = field(default_factory=tuple)
    phi1_terms: Tuple[Term, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi0_terms", tuple(self.phi0_terms))
        object.__setattr__(self, "phi1_terms", tuple(self.phi1_terms))

    def terms(self) -> Iterable[Term]:
        yield from self.phi0_terms
        yield from self.phi1_terms

    def bumps(self) -> Iterable[BumpSpec]:
        for term in self.terms():
            yield from term.bumps

    def scaled(self, factor: float) -> "InitialData":
        def scale(terms: Sequence[Term]) -> Tuple[Term, ...]:
            return tuple(Term(t.weight * factor, t.bumps, t.modulate_sin) for t in terms)

        return InitialData(scale(self.phi0_terms), scale(self.phi1_terms))

    def to_radial(self, center: Sequence[float] = (0.5, 0.5, 0.5)) -> "InitialData":
        """
        Convert radially symmetric 3D data about ``center`` to radial data

        Raises:
            ValidationError: If a term is modulated or a bump is off-center
        """
        center = tuple(float(c) for c in center)

        def convert(terms: Sequence[Term]) -> Tuple[Term, ...]:
            converted = []
            for term in terms:
                if term.modulate_sin:
                    raise ValidationError("sin(2 pi x) modulated data is not radially symmetric")
                bumps = []
                for bump in term.bumps:
                    if bump.dimension != 3 or not np.allclose(bump.center, center, atol=1e-12):
                        raise ValidationError(
                            f"Bump centered at {bump.center} is not centered at {center}"
                        )
                    bumps.append(BumpSpec((0.0,), bump.radius, bump.amplitude))
                converted.append(Term(term.weight, tuple(bumps)))
            return tuple(converted)

        return InitialData(convert(self.phi0_terms), convert(self.phi1_terms))


def _bump_from_squared_distance(dist2: np.ndarray, spec: BumpSpec) -> np.ndarray:
    r2 = spec.radius * spec.radius
    inside = dist2 < r2
    values = np.zeros(dist2.shape, dtype=np.float64)
    gap = r2 - dist2[inside]
    values[inside] = spec.amplitude * np.exp(1.0 / r2 - 1.0 / gap)
    return values


def bump_eval(x: object, spec: BumpSpec) -> object:
    """
    Evaluate a bump at one point or an array of points

    Args:
        x: A point (last axis holds the coordinates) or, for radial bumps,
           radial positions
        spec: Bump to evaluate

    Returns:
        float for a single point, otherwise an array
    """
    points = np.asarray(x, dtype=np.float64)
    if spec.dimension == 1:
        if points.ndim > 0 and points.shape[-1] == 1:
            points = points[..., 0]
        dist2 = (points - spec.center[0]) ** 2
    else:
        dist2 = np.sum((points - np.asarray(spec.center)) ** 2, axis=-1)

    values = _bump_from_squared_distance(np.asarray(dist2, dtype=np.float64), spec)
    if values.ndim == 0:
        return float(values)
    return values


def _squared_distance_on_grid(spec: BumpSpec, grid: GridSpec) -> np.ndarray:
    x = grid.coordinates()
    if grid.is_radial:
        return (x - spec.center[0]) ** 2
    cx, cy, cz = spec.center
    return (
        ((x - cx) ** 2)[:, None, None]
        + ((x - cy) ** 2)[None, :, None]
        + ((x - cz) ** 2)[None, None, :]
    )


def _evaluate_term(term: Term, grid: GridSpec) -> np.ndarray:
    values = np.full(grid.shape, term.weight, dtype=np.float64)
    for bump in term.bumps:
        values *= _bump_from_squared_distance(_squared_distance_on_grid(bump, grid), bump)
    if term.modulate_sin:
        values *= np.sin(2.0 * np.pi * grid.coordinates())[:, None, None]
    return values


def check_initial_data(data: InitialData, grid: GridSpec) -> None:
    """
    Check that every term fits the grid and stays clear of the stencil halo

    Raises:
        SupportTouchesBoundaryError: If a term reaches within 2 dx of the boundary
        ValidationError: If a term does not fit the grid geometry
    """
    dimension = grid.geometry.dimension
    halo = HALO_WIDTH * grid.dx
    for term in data.terms():
        if term.dimension != dimension:
            raise ValidationError(
                f"Term with {term.dimension}-coordinate bumps does not fit {grid.geometry.value}"
            )
        if term.modulate_sin and grid.is_radial:
            raise ValidationError("sin(2 pi x) modulation is only defined on the cube")
        margin = term.support_margin()
        if margin < halo:
            raise SupportTouchesBoundaryError(
                f"Term support comes within {margin:.6g} of the boundary; "
                f"the stencil halo needs {halo:.6g}"
            )


def apply_zero_boundary(array: np.ndarray, geometry: Geometry) -> np.ndarray:
    """
    Pin boundary entries to zero in place over the trailing spatial axes

    Radial lattices have a single boundary node at r = 1.
    """
    if geometry is Geometry.RADIAL1D:
        array[..., -1] = 0
        return array
    for axis in range(-3, 0):
        low = [slice(None)] * array.ndim
        high = [slice(None)] * array.ndim
        low[axis] = 0
        high[axis] = -1
        array[tuple(low)] = 0
        array[tuple(high)] = 0
    return array


def zero_state(grid: GridSpec, dtype: np.dtype = np.float64, t: float = 0.0) -> FieldState:
    return FieldState(np.zeros((2,) + grid.shape, dtype=dtype), t)


def build_initial(
    data: InitialData,
    grid: GridSpec,
    dtype: Optional[np.dtype] = None,
) -> FieldState:
    """
    Sample initial data at the lattice nodes

    Args:
        data: Initial data recipe
        grid: Target lattice
        dtype: float64 (default) or float32

    Returns:
        FieldState at t = 0 with zero boundary entries

    Raises:
        SupportTouchesBoundaryError: If a term reaches within the stencil halo
        ValidationError: If a term does not fit the grid geometry
    """
    dtype = np.dtype(np.float64 if dtype is None else dtype)
    check_initial_data(data, grid)

    values = np.zeros((2,) + grid.shape, dtype=np.float64)
    for term in data.phi0_terms:
        values[0] += _evaluate_term(term, grid)
    for term in data.phi1_terms:
        values[1] += _evaluate_term(term, grid)

    apply_zero_boundary(values, grid.geometry)
    logger.debug(
        "initial_data_built",
        geometry=grid.geometry.value,
        n=grid.n,
        phi0_terms=len(data.phi0_terms),
        phi1_terms=len(data.phi1_terms),
    )
    return FieldState(values.astype(dtype, copy=False), 0.0)


def max_abs(state: FieldState) -> float:
    """
    Largest |phi| over all nodes

    Raises:
        NonFiniteError: If any entry of the state is NaN or Inf
    """
    require_finite(state.data, "state")
    return float(np.max(np.abs(state.v1)))
