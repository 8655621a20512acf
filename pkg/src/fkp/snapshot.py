"""Binary field snapshots.

Layout: one ASCII header line ``FKPFIELD v1 nx ny lx ly space_tag`` followed
by row-major little-endian float64 values (real space) or interleaved
real/imaginary float64 pairs (spectral space).  Lengths are written with
``repr`` so the round trip is bit exact.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import FKPError
from .spectral import REAL, SPECTRAL, Field, Grid2D

MAGIC = "FKPFIELD"
VERSION = "v1"


def write_field(path, u: Field) -> None:
    g = u.grid
    header = f"{MAGIC} {VERSION} {g.nx} {g.ny} {g.lx!r} {g.ly!r} {u.space}\n"
    dtype = "<f8" if u.space == REAL else "<c16"
    payload = np.ascontiguousarray(u.data, dtype=dtype).tobytes(order="C")
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload)
    os.replace(tmp, path)


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        payload = fh.read()
    if len(header) != 7 or header[0] != MAGIC:
        raise FKPError(f"{path}: not a field snapshot")
    if header[1] != VERSION:
        raise FKPError(f"{path}: unsupported snapshot version {header[1]}")
    nx, ny = int(header[2]), int(header[3])
    lx, ly = float(header[4]), float(header[5])
    space = header[6]
    if space not in (REAL, SPECTRAL):
        raise FKPError(f"{path}: unknown space tag {space}")
    dtype = "<f8" if space == REAL else "<c16"
    data = np.frombuffer(payload, dtype=dtype)
    if data.size != nx * ny:
        raise FKPError(f"{path}: expected {nx * ny} values, found {data.size}")
    return Field(Grid2D(nx, ny, lx, ly), data.reshape(nx, ny), space)
