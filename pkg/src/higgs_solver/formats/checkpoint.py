"""
Binary checkpoints

Layout: a fixed little-endian header followed by the payload, the
little-endian bytes of the (2, ...) state array in C order.

    magic       8s   b"HIGGSCKP"
    version     H
    geometry    B    0 cube3d, 1 radial1d
    precision   B    0 double, 1 single
    flags       B    bit 0: blown up
    n           I
    t           d
    scaling     d
    length      Q    payload bytes
    checksum    32s  SHA-256 of the payload

The header is validated before the payload is read, and the checksum
before the payload is used.
"""

import os
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np
import structlog

from ..config import CHECKPOINT_MAGIC, CHECKPOINT_VERSION, MIN_RESOLUTION
from ..core.field import FieldState, Geometry, GridSpec, Precision
from ..utils import ValidationError, ensure_parent_directory, sha256_digest
from .series import OutputError

logger = structlog.get_logger(__name__)

HEADER_FORMAT = "<8sHBBBIddQ32s"
HEADER_SIZE = struct.calcsize(HEADER_FORMAT)

GEOMETRY_CODES = {Geometry.CUBE3D: 0, Geometry.RADIAL1D: 1}
PRECISION_CODES = {Precision.DOUBLE: 0, Precision.SINGLE: 1}
FLAG_BLOWN_UP = 1


class CorruptCheckpointError(ValueError):
    """Raised when a checkpoint fails validation; ``field`` names the failed header field"""

    def __init__(self, field: str, message: str):
        super().__init__(f"Corrupt checkpoint ({field}): {message}")
        self.field = field


class PrecisionMismatchError(ValueError):
    """Raised when a checkpoint's precision differs from the requested one"""
    pass


@dataclass(frozen=True)
class CheckpointHeader:
    magic: bytes
    version: int
    geometry: Geometry
    precision: Precision
    blown_up: bool
    n: int
    t: float
    scaling: float
    payload_length: int
    checksum: bytes

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.n, self.scaling, self.geometry)

    def expected_payload_length(self) -> int:
        return 2 * (self.n + 1) ** self.geometry.dimension * self.precision.dtype.itemsize

    def pack(self) -> bytes:
        return struct.pack(
            HEADER_FORMAT,
            self.magic,
            self.version,
            GEOMETRY_CODES[self.geometry],
            PRECISION_CODES[self.precision],
            FLAG_BLOWN_UP if self.blown_up else 0,
            self.n,
            self.t,
            self.scaling,
            self.payload_length,
            self.checksum,
        )


def _decode_code(table: dict, code: int, field: str) -> object:
    for key, value in table.items():
        if value == code:
            return key
    raise CorruptCheckpointError(field, f"unknown code {code}")


def parse_checkpoint_header(raw: bytes) -> CheckpointHeader:
    """
    Decode and validate a header

    Raises:
        CorruptCheckpointError: On the first invalid field
    """
    if len(raw) < HEADER_SIZE:
        raise CorruptCheckpointError("header", f"{len(raw)} bytes, need {HEADER_SIZE}")
    magic, version, geometry, precision, flags, n, t, scaling, length, checksum = struct.unpack(
        HEADER_FORMAT, raw[:HEADER_SIZE]
    )

    if magic != CHECKPOINT_MAGIC:
        raise CorruptCheckpointError("magic", f"got {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise CorruptCheckpointError("version", f"got {version}, expected {CHECKPOINT_VERSION}")
    header = CheckpointHeader(
        magic=magic,
        version=version,
        geometry=_decode_code(GEOMETRY_CODES, geometry, "geometry"),  # type: ignore[arg-type]
        precision=_decode_code(PRECISION_CODES, precision, "precision"),  # type: ignore[arg-type]
        blown_up=bool(flags & FLAG_BLOWN_UP),
        n=n,
        t=t,
        scaling=scaling,
        payload_length=length,
        checksum=checksum,
    )
    if n < MIN_RESOLUTION:
        raise CorruptCheckpointError("n", f"resolution {n} below {MIN_RESOLUTION}")
    if not (np.isfinite(t) and t >= 0.0):
        raise CorruptCheckpointError("t", f"invalid time {t}")
    if not (np.isfinite(scaling) and scaling > 0.0):
        raise CorruptCheckpointError("scaling", f"invalid scaling {scaling}")
    if length != header.expected_payload_length():
        raise CorruptCheckpointError(
            "payload_length", f"{length} bytes, expected {header.expected_payload_length()}"
        )
    return header


def read_checkpoint_header(path: str) -> CheckpointHeader:
    """Read and validate only the header of a checkpoint file"""
    try:
        with open(path, "rb") as f:
            raw = f.read(HEADER_SIZE)
    except OSError as e:
        raise OutputError(f"Cannot read checkpoint {path}: {e}") from e
    return parse_checkpoint_header(raw)


def save_checkpoint(state: FieldState, grid: GridSpec, path: str) -> CheckpointHeader:
    """
    Write a state bit-exactly

    The file is written next to its destination and moved into place.

    Raises:
        ValidationError: If the state does not match the grid
        OutputError: If the file cannot be written
    """
    if not state.matches(grid):
        raise ValidationError(
            f"State extents {state.data.shape[1:]} do not match grid {grid.shape}"
        )

    precision = Precision.from_dtype(state.dtype)
    payload = np.ascontiguousarray(state.data, dtype=state.dtype.newbyteorder("<")).tobytes()
    header = CheckpointHeader(
        magic=CHECKPOINT_MAGIC,
        version=CHECKPOINT_VERSION,
        geometry=grid.geometry,
        precision=precision,
        blown_up=state.blown_up,
        n=grid.n,
        t=float(state.t),
        scaling=float(grid.scaling),
        payload_length=len(payload),
        checksum=sha256_digest(payload),
    )

    temp_path = f"{path}.tmp"
    try:
        ensure_parent_directory(path)
        with open(temp_path, "wb") as f:
            f.write(header.pack())
            f.write(payload)
        os.replace(temp_path, path)
    except OSError as e:
        raise OutputError(f"Cannot write checkpoint {path}: {e}") from e

    logger.info("checkpoint_saved", path=path, t=state.t, n=grid.n, precision=precision.value)
    return header


def load_checkpoint(path: str, precision: Optional[Precision] = None) -> FieldState:
    """
    Load a state saved by save_checkpoint

    Args:
        path: Checkpoint file
        precision: Required precision; a different stored precision is an error

    Raises:
        CorruptCheckpointError: If the header, length or checksum is invalid
        PrecisionMismatchError: If the stored precision differs from ``precision``
        OutputError: If the file cannot be read
    """
    try:
        with open(path, "rb") as f:
            header = parse_checkpoint_header(f.read(HEADER_SIZE))
            if precision is not None and Precision(precision) is not header.precision:
                raise PrecisionMismatchError(
                    f"Checkpoint {path} is {header.precision.value} precision, "
                    f"run requires {Precision(precision).value}"
                )
            payload = f.read(header.payload_length + 1)
    except OSError as e:
        raise OutputError(f"Cannot read checkpoint {path}: {e}") from e

    if len(payload) != header.payload_length:
        raise CorruptCheckpointError(
            "payload_length",
            f"file holds {len(payload)} payload bytes, header says {header.payload_length}",
        )
    if sha256_digest(payload) != header.checksum:
        raise CorruptCheckpointError("checksum", "payload digest does not match")

    dtype = header.precision.dtype.newbyteorder("<")
    shape = (2,) + header.grid.shape
    data = np.frombuffer(payload, dtype=dtype).reshape(shape).astype(header.precision.dtype)
    logger.info("checkpoint_loaded", path=path, t=header.t, n=header.n)
    return FieldState(data, header.t, blown_up=header.blown_up)
