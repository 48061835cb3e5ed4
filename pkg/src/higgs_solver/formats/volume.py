"""
Legacy VTK structured-points volumes

The header declares (n+1)^3 points, origin 0 and spacing dx; the scalar
field "phi" follows with x varying fastest. ASCII by default, big-endian
float32 in binary mode.
"""

from typing import List

import numpy as np
import structlog

from ..core.field import FieldState, Geometry, GridSpec
from ..utils import ensure_parent_directory, format_float, require_geometry
from .series import OutputError

logger = structlog.get_logger(__name__)

VTK_VERSION_LINE = "# vtk DataFile Version 3.0"


def volume_header(grid: GridSpec, binary: bool, scalar_type: str, title: str) -> List[str]:
    points = grid.n + 1
    spacing = format_float(grid.dx)
    return [
        VTK_VERSION_LINE,
        title,
        "BINARY" if binary else "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {points} {points} {points}",
        "ORIGIN 0 0 0",
        f"SPACING {spacing} {spacing} {spacing}",
        f"POINT_DATA {points ** 3}",
        f"SCALARS phi {scalar_type} 1",
        "LOOKUP_TABLE default",
    ]


def write_volume(
    state: FieldState,
    grid: GridSpec,
    path: str,
    binary: bool = False,
    title: str = "phi",
) -> None:
    """
    Write v1 as a structured-points volume

    Args:
        state: Snapshot
        grid: Cube3D lattice
        path: Output file
        binary: Big-endian float32 payload instead of ASCII
        title: Second header line

    Raises:
        GeometryMismatchError: If the grid is radial
        OutputError: If the file cannot be written
    """
    require_geometry(grid.geometry, Geometry.CUBE3D, "write_volume")
    values = state.v1.ravel(order="F")
    title = title.replace("\n", " ")[:255] or "phi"

    if binary:
        scalar_type = "float"
    else:
        scalar_type = "double" if state.dtype == np.float64 else "float"
    header = "\n".join(volume_header(grid, binary, scalar_type, title)) + "\n"

    try:
        ensure_parent_directory(path)
        with open(path, "wb") as f:
            f.write(header.encode("ascii"))
            if binary:
                values.astype(">f4").tofile(f, sep="")
                f.write(b"\n")
            else:
                digits = ".17g" if state.dtype == np.float64 else ".9g"
                body = "\n".join(format(float(v), digits) for v in values)
                f.write(body.encode("ascii") + b"\n")
    except OSError as e:
        raise OutputError(f"Cannot write volume {path}: {e}") from e

    logger.debug("volume_written", path=path, t=state.t, binary=binary)
