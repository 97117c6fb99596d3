"""Grid geometry, node-centred field storage and finite-difference stencils.

Fields are stored as numpy arrays indexed ``[i, j, k]`` along ``x, y, z``
with any components on a trailing axis, e.g. a director field on an
``nx * ny * nz`` grid has shape ``(nx, ny, nz, 3)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import FieldCollapse, OutOfDomain

COLLAPSE_THRESHOLD = 1e-8
NORTH_POLE = (0.0, 0.0, 1.0)


class Boundary(enum.IntEnum):
    FIXED_VACUUM = 0
    PERIODIC = 1


_AXES = {"x": 0, "y": 1, "z": 2, 0: 0, 1: 1, 2: 2}


def axis_index(axis) -> int:
    try:
        return _AXES[axis]
    except (KeyError, TypeError):
        raise ValueError(f"invalid axis {axis!r}") from None


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    nz: int
    h: float
    origin: tuple = (0.0, 0.0, 0.0)
    boundary: Boundary = Boundary.FIXED_VACUUM

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            v = getattr(self, name)
            if int(v) != v or v < 8:
                raise ValueError(f"{name} must be an integer >= 8, got {v}")
            object.__setattr__(self, name, int(v))
        if not self.h > 0:
            raise ValueError(f"lattice spacing must be positive, got {self.h}")
        object.__setattr__(self, "h", float(self.h))
        origin = tuple(float(c) for c in self.origin)
        if len(origin) != 3:
            raise ValueError("origin must be a 3-vector")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "boundary", Boundary(self.boundary))

    @classmethod
    def cube(cls, n: int, half_width: float, boundary=Boundary.FIXED_VACUUM) -> "Grid":
        """Cubic grid centred on the origin spanning ``[-half_width, half_width]``.

        With fixed-vacuum walls the outermost nodes sit on the faces; a
        periodic grid has ``n`` nodes per period ``2 * half_width``.
        """
        boundary = Boundary(boundary)
        if boundary == Boundary.PERIODIC:
            h = 2.0 * half_width / n
        else:
            h = 2.0 * half_width / (n - 1)
        return cls(n, n, n, h, (-half_width,) * 3, boundary)

    @property
    def shape(self) -> tuple:
        return (self.nx, self.ny, self.nz)

    @property
    def periodic(self) -> bool:
        return self.boundary == Boundary.PERIODIC

    @property
    def cell_volume(self) -> float:
        return self.h ** 3

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.origin) + self.h * (np.asarray(self.shape) - 1)

    @property
    def period(self) -> np.ndarray:
        return self.h * np.asarray(self.shape, dtype=float)

    def axes(self):
        return tuple(self.origin[a] + self.h * np.arange(n) for a, n in enumerate(self.shape))

    def mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def positions(self) -> np.ndarray:
        return np.stack(self.mesh(), axis=-1)

    def boundary_mask(self) -> np.ndarray:
        """True on the one-node shell clamped to the vacuum (never for periodic grids)."""
        mask = np.zeros(self.shape, dtype=bool)
        if not self.periodic:
            mask[0, :, :] = mask[-1, :, :] = True
            mask[:, 0, :] = mask[:, -1, :] = True
            mask[:, :, 0] = mask[:, :, -1] = True
        return mask

    def same_geometry(self, other: "Grid") -> bool:
        return self == other


@dataclass(eq=False)
class ScalarField:
    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.shape != self.grid.shape:
            raise ValueError(f"scalar data shape {self.data.shape} != grid {self.grid.shape}")

    def copy(self):
        return ScalarField(self.grid, self.data.copy())


@dataclass(eq=False)
class VectorField3:
    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != self.grid.shape + (3,):
            raise ValueError(f"vector data shape {self.data.shape} != grid {self.grid.shape}+(3,)")

    @classmethod
    def zeros(cls, grid: Grid):
        return cls(grid, np.zeros(grid.shape + (3,)))

    def copy(self):
        return VectorField3(self.grid, self.data.copy())


@dataclass(eq=False)
class DirectorField:
    """Unit vector field n(x) on the grid, with the vacuum value it tends to."""

    grid: Grid
    data: np.ndarray
    vacuum: tuple = field(default=NORTH_POLE)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != self.grid.shape + (3,):
            raise ValueError(f"director data shape {self.data.shape} != grid {self.grid.shape}+(3,)")
        v = np.asarray(self.vacuum, dtype=float)
        if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise ValueError("vacuum must be a unit 3-vector")
        self.vacuum = tuple(v)

    @classmethod
    def uniform(cls, grid: Grid, vacuum=NORTH_POLE) -> "DirectorField":
        data = np.broadcast_to(np.asarray(vacuum, dtype=float), grid.shape + (3,)).copy()
        return cls(grid, data, vacuum)

    def copy(self):
        return DirectorField(self.grid, self.data.copy(), self.vacuum)

    def apply_boundary(self):
        """Clamp the fixed-vacuum shell to the vacuum value (in place)."""
        if not self.grid.periodic:
            mask = self.grid.boundary_mask()
            self.data[mask] = self.vacuum
        return self


# -- stencils ---------------------------------------------------------------

def diff(arr: np.ndarray, axis: int, h: float, periodic: bool = False) -> np.ndarray:
    """Second-order first derivative of ``arr`` along spatial ``axis``.

    Central differences in the interior; second-order one-sided stencils on
    the two end planes, or wrap-around when ``periodic``.
    """
    if periodic:
        return (np.roll(arr, -1, axis=axis) - np.roll(arr, 1, axis=axis)) / (2.0 * h)
    a = np.moveaxis(arr, axis, 0)
    out = np.empty(a.shape, dtype=np.result_type(a.dtype, float))
    out[1:-1] = a[2:] - a[:-2]
    # -3 a0 + 4 a1 - a2 written in differences so constants give exactly 0
    out[0] = 3.0 * (a[1] - a[0]) - (a[2] - a[1])
    out[-1] = 3.0 * (a[-1] - a[-2]) - (a[-2] - a[-3])
    out /= 2.0 * h
    return np.moveaxis(out, 0, axis)


def diff4(arr: np.ndarray, axis: int, h: float, periodic: bool = False) -> np.ndarray:
    """Fourth-order central first derivative along ``axis``.

    On walled grids the two outermost planes on each side fall back to the
    second-order stencils of :func:`diff`.
    """
    if periodic:
        r = lambda s: np.roll(arr, s, axis=axis)  # noqa: E731
        return (8.0 * (r(-1) - r(1)) - (r(-2) - r(2))) / (12.0 * h)
    out = np.moveaxis(diff(arr, axis, h), axis, 0).copy()
    a = np.moveaxis(arr, axis, 0)
    out[2:-2] = (8.0 * (a[3:-1] - a[1:-3]) - (a[4:] - a[:-4])) / (12.0 * h)
    return np.moveaxis(out, 0, axis)


def diff_adjoint(g: np.ndarray, axis: int, h: float, periodic: bool = False) -> np.ndarray:
    """Transpose of :func:`diff` as a linear map, applied to ``g``."""
    if periodic:
        return -diff(g, axis, h, periodic=True)
    a = np.moveaxis(g, axis, 0)
    out = np.zeros(a.shape, dtype=np.result_type(a.dtype, float))
    out[2:] += a[1:-1]
    out[:-2] -= a[1:-1]
    out[0] -= 3.0 * a[0]
    out[1] += 4.0 * a[0]
    out[2] -= a[0]
    out[-1] += 3.0 * a[-1]
    out[-2] -= 4.0 * a[-1]
    out[-3] += a[-1]
    out /= 2.0 * h
    return np.moveaxis(out, 0, axis)


def gradients(arr: np.ndarray, grid: Grid, order: int = 2):
    """Derivatives of ``arr`` along x, y and z with a central stencil of ``order`` 2 or 4."""
    if order not in (2, 4):
        raise ValueError("stencil order must be 2 or 4")
    op = diff if order == 2 else diff4
    return [op(arr, ax, grid.h, grid.periodic) for ax in range(3)]


def central_diff(f, axis):
    """Derivative field of a Scalar/Vector/Director field along ``axis``.

    Returns a ScalarField for scalar input and a VectorField3 otherwise
    (a derivative of a director field is not a unit vector).
    """
    ax = axis_index(axis)
    d = diff(f.data, ax, f.grid.h, f.grid.periodic)
    if isinstance(f, ScalarField):
        return ScalarField(f.grid, d)
    return VectorField3(f.grid, d)


# -- interpolation ----------------------------------------------------------

def _cell_coords(grid: Grid, pts: np.ndarray):
    """Fractional node coordinates of ``pts``; raises OutOfDomain on a walled grid."""
    u = (np.asarray(pts, dtype=float) - np.asarray(grid.origin)) / grid.h
    shape = np.asarray(grid.shape)
    if grid.periodic:
        u = np.mod(u, shape)
        i0 = np.floor(u).astype(np.intp)
        t = u - i0
        i0 = np.mod(i0, shape)
        i1 = np.mod(i0 + 1, shape)
    else:
        tol = 1e-9
        if np.any(u < -tol) or np.any(u > shape - 1 + tol):
            raise OutOfDomain("sample point outside the grid box")
        u = np.clip(u, 0.0, shape - 1)
        i0 = np.minimum(np.floor(u).astype(np.intp), shape - 2)
        t = u - i0
        i1 = i0 + 1
    return i0, i1, t


def sample_array(data: np.ndarray, grid: Grid, pts) -> np.ndarray:
    """Trilinear interpolation of node data at points of shape ``(..., 3)``."""
    pts = np.asarray(pts, dtype=float)
    flat = pts.reshape(-1, 3)
    i0, i1, t = _cell_coords(grid, flat)
    out = 0.0
    for cx in (0, 1):
        ix = i1[:, 0] if cx else i0[:, 0]
        wx = t[:, 0] if cx else 1.0 - t[:, 0]
        for cy in (0, 1):
            iy = i1[:, 1] if cy else i0[:, 1]
            wy = t[:, 1] if cy else 1.0 - t[:, 1]
            for cz in (0, 1):
                iz = i1[:, 2] if cz else i0[:, 2]
                wz = t[:, 2] if cz else 1.0 - t[:, 2]
                w = wx * wy * wz
                vals = data[ix, iy, iz]
                if vals.ndim > 1:
                    w = w[:, None]
                out = out + w * vals
    return np.asarray(out).reshape(pts.shape[:-1] + data.shape[3:])


def trilinear_sample(f, p) -> np.ndarray:
    """Value of a field at position ``p``; director values are not renormalized."""
    p = np.asarray(p, dtype=float)
    if p.shape != (3,):
        raise ValueError("position must be a 3-vector")
    return sample_array(f.data, f.grid, p)


# -- normalization ----------------------------------------------------------

def normalize_array(data: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    norm = np.sqrt(np.einsum("...c,...c->...", data, data))
    if np.any(norm < COLLAPSE_THRESHOLD):
        bad = int(np.count_nonzero(norm < COLLAPSE_THRESHOLD))
        raise FieldCollapse(f"{bad} node(s) with |n| < {COLLAPSE_THRESHOLD}")
    if out is None:
        return data / norm[..., None]
    np.divide(data, norm[..., None], out=out)
    return out


def normalize(f: DirectorField, in_place: bool = False) -> DirectorField:
    """Project every node back onto the unit sphere and re-clamp the vacuum shell."""
    if in_place:
        normalize_array(f.data, out=f.data)
        return f.apply_boundary()
    g = DirectorField(f.grid, normalize_array(f.data), f.vacuum)
    return g.apply_boundary()
