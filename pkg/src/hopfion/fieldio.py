"""Binary field container, VTK legacy exports and small JSON helpers.

Container layout (all little endian)::

    b"HPFN1"                      magic
    uint32 nx, ny, nz
    float64 h
    float64 origin[3]
    uint32 component count
    uint8  boundary policy        0 fixed vacuum, 1 periodic

followed by ``nz * ny * nx * ncomp`` float64 values, z outermost and x
innermost, components interleaved per node.  Complex scalars are stored as
two real components (real, imaginary).
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError
from .lattice import Boundary, DirectorField, Grid, ScalarField, VectorField3

MAGIC = b"HPFN1"
_HEADER = struct.Struct("<5s3Id3dIB")


def encode_field(data: np.ndarray, grid: Grid) -> bytes:
    data = np.asarray(data)
    if np.iscomplexobj(data):
        if data.shape != grid.shape:
            raise ValueError("complex data must be a scalar field")
        data = np.stack([data.real, data.imag], axis=-1)
    if data.shape == grid.shape:
        data = data[..., None]
    if data.shape[:3] != grid.shape or data.ndim != 4:
        raise ValueError(f"data shape {data.shape} does not match grid {grid.shape}")
    ncomp = data.shape[3]
    header = _HEADER.pack(MAGIC, grid.nx, grid.ny, grid.nz, grid.h, *grid.origin, ncomp, int(grid.boundary))
    body = np.ascontiguousarray(np.transpose(data, (2, 1, 0, 3)), dtype="<f8").tobytes()
    return header + body


def decode_field(buf: bytes):
    """Return ``(grid, data)`` with data shaped ``(nx, ny, nz, ncomp)``."""
    if len(buf) < _HEADER.size:
        raise FormatError("file too short for a field header")
    magic, nx, ny, nz, h, ox, oy, oz, ncomp, policy = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}")
    if policy not in (0, 1) or ncomp == 0:
        raise FormatError("corrupted header")
    try:
        grid = Grid(nx, ny, nz, h, (ox, oy, oz), Boundary(policy))
    except ValueError as exc:
        raise FormatError(f"corrupted header: {exc}") from None
    expected = _HEADER.size + 8 * nx * ny * nz * ncomp
    if len(buf) != expected:
        raise FormatError(f"payload size {len(buf)} != expected {expected}")
    flat = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size).astype(float)
    data = np.transpose(flat.reshape(nz, ny, nx, ncomp), (2, 1, 0, 3)).copy()
    return grid, data


def atomic_write_bytes(path, payload: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_field(path, field_or_data, grid: Grid | None = None):
    if grid is None:
        grid, data = field_or_data.grid, field_or_data.data
    else:
        data = field_or_data
    atomic_write_bytes(path, encode_field(data, grid))


def read_field(path):
    with open(path, "rb") as fh:
        return decode_field(fh.read())


def read_director(path, vacuum=(0.0, 0.0, 1.0)) -> DirectorField:
    grid, data = read_field(path)
    if data.shape[3] != 3:
        raise FormatError(f"expected 3 components, found {data.shape[3]}")
    return DirectorField(grid, data, vacuum)


def read_vector(path) -> VectorField3:
    grid, data = read_field(path)
    if data.shape[3] != 3:
        raise FormatError(f"expected 3 components, found {data.shape[3]}")
    return VectorField3(grid, data)


def read_scalar(path) -> ScalarField:
    """Real (1 component) or complex (2 component) scalar field."""
    grid, data = read_field(path)
    if data.shape[3] == 1:
        return ScalarField(grid, data[..., 0])
    if data.shape[3] == 2:
        return ScalarField(grid, data[..., 0] + 1j * data[..., 1])
    raise FormatError(f"expected 1 or 2 components, found {data.shape[3]}")


def write_json(path, obj):
    atomic_write_bytes(path, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())


# -- VTK legacy ASCII -------------------------------------------------------

def _fmt_rows(arr: np.ndarray) -> str:
    return "\n".join(" ".join(f"{v:.10g}" for v in row) for row in arr)


def vtk_structured_points(grid: Grid, arrays: dict, title: str = "hopfion field") -> str:
    """Legacy STRUCTURED_POINTS text; values are written with x varying fastest."""
    lines = [
        "# vtk DataFile Version 3.0",
        title[:255],
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {grid.nx} {grid.ny} {grid.nz}",
        "ORIGIN {:.10g} {:.10g} {:.10g}".format(*grid.origin),
        f"SPACING {grid.h:.10g} {grid.h:.10g} {grid.h:.10g}",
        f"POINT_DATA {grid.nx * grid.ny * grid.nz}",
    ]
    for name, arr in arrays.items():
        arr = np.asarray(arr, dtype=float)
        if arr.shape == grid.shape:
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines.append(_fmt_rows(np.transpose(arr).reshape(-1, 1)))
        elif arr.shape == grid.shape + (3,):
            lines.append(f"VECTORS {name} double")
            lines.append(_fmt_rows(np.transpose(arr, (2, 1, 0, 3)).reshape(-1, 3)))
        else:
            raise ValueError(f"array {name!r} has shape {arr.shape}, not a grid field")
    return "\n".join(lines) + "\n"


def vtk_polylines(lines, title: str = "field lines") -> str:
    """Legacy POLYDATA text for a list of FieldLine objects, with n as point data."""
    pts, conn, nvals = [], [], []
    offset = 0
    for line in lines:
        p = np.asarray(line.points)
        idx = list(range(offset, offset + len(p)))
        if line.closed:
            idx.append(offset)
        conn.append(idx)
        pts.append(p)
        nvals.append(np.asarray(line.n_samples))
        offset += len(p)
    P = np.concatenate(pts) if pts else np.zeros((0, 3))
    N = np.concatenate(nvals) if nvals else np.zeros((0, 3))
    out = [
        "# vtk DataFile Version 3.0",
        title[:255],
        "ASCII",
        "DATASET POLYDATA",
        f"POINTS {len(P)} double",
        _fmt_rows(P),
        f"LINES {len(conn)} {sum(len(c) + 1 for c in conn)}",
    ]
    out += [" ".join(str(v) for v in [len(c)] + c) for c in conn]
    out += [f"POINT_DATA {len(P)}", "VECTORS n double", _fmt_rows(N)]
    return "\n".join(s for s in out if s) + "\n"
