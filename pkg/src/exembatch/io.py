"""Dataset file formats: the binary ground-set container and CSV ingestion.

Binary layout (little-endian): magic ``EXEM``, version byte 0x01, precision
tag byte (0 = binary16, 1 = binary32, 2 = binary64), u32 n, u32 d, then
n*d values in column-major order at the tagged width.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .core import GroundSet, Precision, build_ground_set
from .errors import InvalidDataError

MAGIC = b"EXEM"
VERSION = 1
_HEADER = struct.Struct("<4sBBII")
_TAG_OF = {Precision.binary16: 0, Precision.binary32: 1, Precision.binary64: 2}
_PRECISION_OF = {v: k for k, v in _TAG_OF.items()}


def write_ground_file(path, matrix: np.ndarray, precision: Precision) -> None:
    """Write an (n, d) observation matrix to the binary container."""
    arr = np.atleast_2d(np.asarray(matrix))
    n, d = arr.shape
    payload = np.asfortranarray(arr.astype(precision.dtype)).ravel(order="F")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, _TAG_OF[precision], n, d))
        fh.write(payload.astype(precision.dtype).tobytes())


def read_ground_file(path):
    """Read the binary container back into an (n, d) matrix and its precision."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise InvalidDataError(f"{path}: truncated header")
    magic, version, tag, n, d = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise InvalidDataError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise InvalidDataError(f"{path}: unsupported version {version}")
    if tag not in _PRECISION_OF:
        raise InvalidDataError(f"{path}: unknown precision tag {tag}")
    precision = _PRECISION_OF[tag]
    expected = _HEADER.size + n * d * precision.bytes_per_value
    if len(raw) != expected:
        raise InvalidDataError(
            f"{path}: expected {expected} bytes for n={n}, d={d}, got {len(raw)}"
        )
    flat = np.frombuffer(raw, dtype=precision.dtype, offset=_HEADER.size)
    matrix = flat.reshape((n, d), order="F")
    return matrix, precision


def read_csv_observations(path) -> np.ndarray:
    """Read one observation per row from a CSV file.

    No header is required; if the first row is non-numeric it is skipped.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for idx, row in enumerate(reader):
            fields = [f.strip() for f in row if f.strip() != ""]
            if not fields:
                continue
            try:
                rows.append([float(f) for f in fields])
            except ValueError:
                if idx == 0:
                    continue  # header row
                raise InvalidDataError(
                    f"{path}: non-numeric field in row {idx + 1}"
                ) from None
    if not rows:
        raise InvalidDataError(f"{path}: no observations found")
    return np.asarray(rows, dtype=np.float64)


def load_ground_set(
    path,
    aux="zero",
    precision: Precision | None = None,
    dissimilarity=None,
) -> GroundSet:
    """Load observations from a .exem or CSV file and build a ground set.

    For binary files the stored precision is used unless overridden; CSV
    input defaults to binary32.
    """
    path = Path(path)
    if path.suffix.lower() == ".exem":
        matrix, stored = read_ground_file(path)
        precision = precision or stored
    else:
        matrix = read_csv_observations(path)
        precision = precision or Precision.binary32
    return build_ground_set(matrix, aux=aux, precision=precision, dissimilarity=dissimilarity)
