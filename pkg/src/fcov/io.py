"""Readers and writers for series stored as CSV matrices or packed volumes.

CSV files hold one observation per row, one grid node per column; a single
header line is tolerated and skipped.  Volume series use a compact binary
layout: a little-endian header ``{magic b"FCOV", u32 n, u32 nx, u32 ny,
u32 nz, u8 dtype}`` followed by ``n * nx * ny * nz`` values in C order
(time outermost, z fastest).  The dtype byte is 0 for float32, 1 for
float64.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import VolumeSeries

__all__ = ["read_csv_matrix", "write_csv_matrix", "read_volume", "write_volume"]

MAGIC = b"FCOV"
_HEADER = struct.Struct("<4sIIIIB")
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES = {np.dtype("<f4"): 0, np.dtype("<f8"): 1}


def _has_header(line: str, delimiter: str) -> bool:
    for field in line.strip().split(delimiter):
        try:
            float(field)
        except ValueError:
            return True
    return False


def read_csv_matrix(path, delimiter: str = ",") -> np.ndarray:
    """Load a 2-d float matrix from CSV, skipping one header line if present."""
    path = Path(path)
    with open(path, "r") as fh:
        first = fh.readline()
    if not first.strip():
        raise ValueError(f"{path}: empty file")
    skip = 1 if _has_header(first, delimiter) else 0
    data = np.loadtxt(path, delimiter=delimiter, skiprows=skip, ndmin=2, dtype=np.float64)
    if data.size == 0:
        raise ValueError(f"{path}: no data rows")
    return data


def write_csv_matrix(path, values: np.ndarray, header: list[str] | None = None) -> None:
    """Write a 2-d matrix as CSV with an optional header line."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("values must be 2-d")
    head = ",".join(header) if header else ""
    np.savetxt(path, values, delimiter=",", fmt="%.17g", header=head, comments="")


def read_volume(path) -> VolumeSeries:
    """Read a packed volume series file."""
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, n, nx, ny, nz, code = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a volume series file (bad magic {magic!r})")
        if code not in _DTYPES:
            raise ValueError(f"{path}: unknown dtype code {code}")
        dtype = _DTYPES[code]
        count = n * nx * ny * nz
        payload = fh.read()
    expected = count * dtype.itemsize
    if len(payload) != expected:
        raise ValueError(
            f"{path}: payload has {len(payload)} bytes, header implies {expected}"
        )
    values = np.frombuffer(payload, dtype=dtype).reshape(n, nx, ny, nz)
    return VolumeSeries(values.astype(np.float64))


def write_volume(path, volume: VolumeSeries, dtype: str = "f8") -> None:
    """Write a volume series in the packed binary layout.

    ``dtype`` selects the on-disk precision, ``"f4"`` or ``"f8"``.
    """
    disk = np.dtype("<" + dtype)
    if disk not in _CODES:
        raise ValueError(f"unsupported dtype {dtype!r}, use 'f4' or 'f8'")
    n = volume.n_obs
    nx, ny, nz = volume.dims
    header = _HEADER.pack(MAGIC, n, nx, ny, nz, _CODES[disk])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(volume.values, dtype=disk).tobytes())
