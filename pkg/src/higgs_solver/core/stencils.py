"""
Fourth-order finite-difference operators

The 3D Laplacian and the radial operator (2/r) d/dr + d^2/dr^2 on the unit
lattice. Reads beyond the lattice are zero (zero-extension of the Dirichlet
boundary); the radial operator reflects evenly across r = 0.

Kernels are numba-compiled and parallel over the first lattice index. Each
node is computed by the same arithmetic regardless of thread count, so
results are bit-identical across runs.
"""

from dataclasses import dataclass
from typing import Tuple

import numba
import numpy as np
import structlog
from numba import njit, prange

from ..config import FIRST_DERIVATIVE_WEIGHTS, ORIGIN_WEIGHTS, SECOND_DERIVATIVE_WEIGHTS
from ..utils import ValidationError, require_geometry, validate_positive_float
from .field import BumpSpec, Geometry, GridSpec, InitialData, Term, build_initial

logger = structlog.get_logger(__name__)

W_FAR = SECOND_DERIVATIVE_WEIGHTS[0]
W_NEAR = SECOND_DERIVATIVE_WEIGHTS[1]
W_CENTER = SECOND_DERIVATIVE_WEIGHTS[2]
D_FAR = FIRST_DERIVATIVE_WEIGHTS[4]
D_NEAR = FIRST_DERIVATIVE_WEIGHTS[3]
O_CENTER, O_NEAR, O_FAR = ORIGIN_WEIGHTS


@dataclass(frozen=True)
class StencilCoefficients:
    """Stencil weights scaled by the lattice spacing"""

    spacing: float
    second: Tuple[float, ...]
    first: Tuple[float, ...]
    origin: Tuple[float, ...]

    @classmethod
    def for_spacing(cls, spacing: float) -> "StencilCoefficients":
        spacing = validate_positive_float(spacing, "spacing")
        inv2 = 1.0 / (spacing * spacing)
        return cls(
            spacing=spacing,
            second=tuple(w * inv2 for w in SECOND_DERIVATIVE_WEIGHTS),
            first=tuple(w / spacing for w in FIRST_DERIVATIVE_WEIGHTS),
            origin=tuple(w * inv2 for w in ORIGIN_WEIGHTS),
        )

    @classmethod
    def for_grid(cls, grid: GridSpec) -> "StencilCoefficients":
        return cls.for_spacing(grid.dx)

    @property
    def inv_spacing2(self) -> float:
        return 1.0 / (self.spacing * self.spacing)


@dataclass(frozen=True)
class CrosscheckReport:
    """Radial operator vs the 3D Laplacian along the mid-line"""

    n: int
    max_discrepancy: float
    samples: int
    peak_magnitude: float = 0.0


def configure_threads(count: int) -> int:
    """
    Set the kernel thread count (0 keeps the numba default)

    Returns:
        Thread count in effect
    """
    if count > 0:
        numba.set_num_threads(min(count, numba.config.NUMBA_NUM_THREADS))
    threads = numba.get_num_threads()
    logger.debug("kernel_threads", threads=threads)
    return threads


@njit(inline="always")
def _cube_value(f, i, j, k, n):
    if i < 0 or j < 0 or k < 0 or i > n or j > n or k > n:
        return 0.0
    return f[i, j, k]


@njit(inline="always")
def _laplacian_at(f, i, j, k, n, inv_dx2):
    c = f[i, j, k]
    if i >= 2 and j >= 2 and k >= 2 and i <= n - 2 and j <= n - 2 and k <= n - 2:
        dxx = W_FAR * (f[i - 2, j, k] + f[i + 2, j, k]) + W_NEAR * (f[i - 1, j, k] + f[i + 1, j, k])
        dyy = W_FAR * (f[i, j - 2, k] + f[i, j + 2, k]) + W_NEAR * (f[i, j - 1, k] + f[i, j + 1, k])
        dzz = W_FAR * (f[i, j, k - 2] + f[i, j, k + 2]) + W_NEAR * (f[i, j, k - 1] + f[i, j, k + 1])
    else:
        dxx = W_FAR * (_cube_value(f, i - 2, j, k, n) + _cube_value(f, i + 2, j, k, n)) + W_NEAR * (
            _cube_value(f, i - 1, j, k, n) + _cube_value(f, i + 1, j, k, n)
        )
        dyy = W_FAR * (_cube_value(f, i, j - 2, k, n) + _cube_value(f, i, j + 2, k, n)) + W_NEAR * (
            _cube_value(f, i, j - 1, k, n) + _cube_value(f, i, j + 1, k, n)
        )
        dzz = W_FAR * (_cube_value(f, i, j, k - 2, n) + _cube_value(f, i, j, k + 2, n)) + W_NEAR * (
            _cube_value(f, i, j, k - 1, n) + _cube_value(f, i, j, k + 1, n)
        )
    dxx += W_CENTER * c
    dyy += W_CENTER * c
    dzz += W_CENTER * c
    return (dxx + dyy + dzz) * inv_dx2


@njit(inline="always")
def _radial_value(f, m, n):
    if m < 0:
        m = -m
    if m > n:
        return 0.0
    return f[m]


@njit(inline="always")
def _radial_at(f, i, n, dr):
    inv_dr2 = 1.0 / (dr * dr)
    if i == 0:
        # lim (2/r) phi_r = 2 phi_rr(0), so the operator is 3 phi_rr(0)
        return 3.0 * (O_CENTER * f[0] + O_NEAR * f[1] + O_FAR * f[2]) * inv_dr2
    fm2 = _radial_value(f, i - 2, n)
    fm1 = _radial_value(f, i - 1, n)
    fp1 = _radial_value(f, i + 1, n)
    fp2 = _radial_value(f, i + 2, n)
    d2 = (W_FAR * (fm2 + fp2) + W_NEAR * (fm1 + fp1) + W_CENTER * f[i]) * inv_dr2
    d1 = (D_NEAR * (fp1 - fm1) + D_FAR * (fp2 - fm2)) / dr
    return 2.0 / (i * dr) * d1 + d2


@njit(parallel=True, cache=True)
def _laplacian_3d_kernel(f, out, inv_dx2):
    n = f.shape[0] - 1
    for i in prange(1, n):
        for j in range(1, n):
            for k in range(1, n):
                out[i, j, k] = _laplacian_at(f, i, j, k, n, inv_dx2)


@njit(cache=True)
def _radial_kernel(f, out, dr):
    n = f.shape[0] - 1
    for i in range(0, n):
        out[i] = _radial_at(f, i, n, dr)


@njit(parallel=True, cache=True)
def rhs_kernel_3d(v1, v2, out, mu2, lam, damping, coef, inv_dx2):
    """out[0] = v2, out[1] = mu2 v1 - lam v1^3 - damping v2 + coef * Laplacian(v1)"""
    n = v1.shape[0] - 1
    for i in prange(1, n):
        for j in range(1, n):
            for k in range(1, n):
                phi = v1[i, j, k]
                psi = v2[i, j, k]
                lap = _laplacian_at(v1, i, j, k, n, inv_dx2)
                out[0, i, j, k] = psi
                out[1, i, j, k] = mu2 * phi - lam * phi * phi * phi - damping * psi + coef * lap


@njit(cache=True)
def rhs_kernel_radial(v1, v2, out, mu2, lam, damping, coef, dr):
    """Radial counterpart of rhs_kernel_3d; the r = 1 node stays zero"""
    n = v1.shape[0] - 1
    for i in range(0, n):
        phi = v1[i]
        psi = v2[i]
        lap = _radial_at(v1, i, n, dr)
        out[0, i] = psi
        out[1, i] = mu2 * phi - lam * phi * phi * phi - damping * psi + coef * lap


def _check_extent(field: np.ndarray, grid: GridSpec) -> np.ndarray:
    if field.shape != grid.shape:
        raise ValidationError(f"Field shape {field.shape} does not match grid {grid.shape}")
    return np.ascontiguousarray(field)


def laplacian_3d(field: np.ndarray, grid: GridSpec) -> np.ndarray:
    """
    Fourth-order Laplacian on the cube

    Args:
        field: Lattice array of shape (n+1, n+1, n+1)
        grid: Cube3D grid

    Returns:
        Fresh array; boundary entries are 0

    Raises:
        GeometryMismatchError: If grid is radial
    """
    require_geometry(grid.geometry, Geometry.CUBE3D, "laplacian_3d")
    field = _check_extent(field, grid)
    out = np.zeros_like(field)
    _laplacian_3d_kernel(field, out, StencilCoefficients.for_grid(grid).inv_spacing2)
    return out


def radial_operator(field: np.ndarray, grid: GridSpec) -> np.ndarray:
    """
    (2/r) phi_r + phi_rr on the radial lattice

    Args:
        field: Line array of shape (n+1,)
        grid: Radial1D grid

    Returns:
        Fresh array; the r = 1 entry is 0

    Raises:
        GeometryMismatchError: If grid is a cube
    """
    require_geometry(grid.geometry, Geometry.RADIAL1D, "radial_operator")
    field = _check_extent(field, grid)
    out = np.zeros_like(field)
    _radial_kernel(field, out, grid.dx)
    return out


def spatial_operator(field: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Laplacian for the grid's geometry"""
    if grid.is_radial:
        return radial_operator(field, grid)
    return laplacian_3d(field, grid)


def operator_crosscheck(bump: BumpSpec, grid3d: GridSpec, grid1d: GridSpec) -> CrosscheckReport:
    """
    Compare the 3D Laplacian of a centered bump with the radial operator

    The radial profile at r = j dx is compared with the 3D result at
    (0.5 + j dx, 0.5, 0.5) for j = 0..n/2.

    Raises:
        ValidationError: If the bump is off-center or the grids disagree
    """
    require_geometry(grid3d.geometry, Geometry.CUBE3D, "operator_crosscheck")
    require_geometry(grid1d.geometry, Geometry.RADIAL1D, "operator_crosscheck")
    if grid3d.n != grid1d.n or grid3d.n % 2:
        raise ValidationError(
            f"Cross-check needs equal, even resolutions, got {grid3d.n} and {grid1d.n}"
        )

    cube_data = InitialData((Term(1.0, (bump,)),))
    radial_data = cube_data.to_radial()
    lap3 = laplacian_3d(build_initial(cube_data, grid3d).v1, grid3d)
    lap1 = radial_operator(build_initial(radial_data, grid1d).v1, grid1d)

    half = grid3d.n // 2
    midline = lap3[half:, half, half]
    discrepancy = float(np.max(np.abs(midline - lap1[: half + 1])))
    peak = float(np.max(np.abs(midline)))
    logger.debug("operator_crosscheck", n=grid3d.n, max_discrepancy=discrepancy, peak=peak)
    return CrosscheckReport(grid3d.n, discrepancy, half + 1, peak)
