"""Static Faddeev energy on the lattice and its exact discrete gradient.

The continuum energy is ``E = a int |d_k n|^2 + b int sum_{i != k} H_ik^2``
with ``H_ik = (d_i n x d_k n) . n``.  The quartic sum runs over both index
orders, i.e. it equals ``2 b sum_{i<k} H_ik^2`` or ``2 b |B|^2`` with
``B = (H_yz, H_zx, H_xy)``.

Two lattice versions are provided:

``"geodesic"`` (default, used by the relaxation)
    E2 sums ``theta^2 / h^2`` over nearest-neighbour links, theta being the
    angle between the two unit vectors.  The quartic density ``|B|^2`` is
    taken per plaquette as ``(Omega / h^2)^2``, where Omega is the signed
    solid angle of the spherical quadrilateral spanned by the four corner
    values (two geodesic triangles).  Omega is exactly the flux of B
    through the plaquette for the geodesically interpolated field, so E4
    is nearly free of discretization error at resolutions where
    difference quotients underestimate it badly; an underestimated E4 lets
    solitons shrink through the lattice and unwind.

``"central"``
    Central differences at every node (one-sided on walls).  A tangential
    staggered perturbation of amplitude eps lowers this energy at order
    eps^2, so smooth hopfions are saddle points of it and a descent flow
    unwinds them.  Kept for diagnostics and for comparisons against other
    central-difference quantities.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .lattice import DirectorField, ScalarField, diff_adjoint, gradients, sample_array, normalize_array

PAIRS = ((1, 2), (2, 0), (0, 1))  # (i, k) such that B_j = H_ik


@dataclass
class EnergyReport:
    a: float
    b: float
    e2: float
    e4: float
    total: float
    virial_ratio: float
    density: ScalarField | None = field(default=None, repr=False)
    quartic_convention: str = "both index orders: e4 = b * sum_{i != k} H_ik^2"

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("density")
        if not math.isfinite(d["virial_ratio"]):
            d["virial_ratio"] = None
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass
class VKReport:
    q: int
    energy: float
    c_estimate: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def _terms(n: np.ndarray, grid):
    d = gradients(n, grid)
    # B_j = H_ik = d_i . (d_k x n) for the cyclic pairs
    cross = [np.cross(d[i], d[k]) for i, k in PAIRS]
    B = np.stack([np.einsum("...c,...c->...", c, n) for c in cross], axis=-1)
    return d, cross, B


def _pairwise_sum(x: np.ndarray) -> float:
    # numpy's sum reduces contiguous data pairwise; fixing the layout keeps it deterministic
    return float(np.sum(np.ascontiguousarray(x, dtype=float)))


STENCILS = ("geodesic", "central")
DEFAULT_STENCIL = "geodesic"


def _dot(u, v):
    return np.einsum("...c,...c->...", u, v)


# -- geodesic stencil -------------------------------------------------------

def _lo_hi(arr, ax, periodic):
    """Values at the two ends of every link along ``ax``."""
    if periodic:
        return arr, np.roll(arr, -1, axis=ax)
    n = arr.shape[ax]
    return np.take(arr, np.arange(n - 1), axis=ax), np.take(arr, np.arange(1, n), axis=ax)


def _scatter_link(g, contrib, ax, end, periodic):
    """Add per-link ``contrib`` to the node at the low (0) or high (1) end."""
    if periodic:
        g += np.roll(contrib, end, axis=ax)
        return
    idx = [slice(None)] * 3
    idx[ax] = slice(end, end + contrib.shape[ax])
    g[tuple(idx)] += contrib


def _corner(arr, i, k, di, dk, periodic):
    if periodic:
        return np.roll(arr, (-di, -dk), axis=(i, k))
    idx = [slice(None)] * 3
    idx[i] = slice(di, arr.shape[i] - 1 + di)
    idx[k] = slice(dk, arr.shape[k] - 1 + dk)
    return arr[tuple(idx)]


def _scatter_corner(g, contrib, i, k, di, dk, periodic):
    if periodic:
        g += np.roll(contrib, (di, dk), axis=(i, k))
        return
    idx = [slice(None)] * 3
    idx[i] = slice(di, di + contrib.shape[i])
    idx[k] = slice(dk, dk + contrib.shape[k])
    g[tuple(idx)] += contrib


def link_angle(p, q):
    """Angle between unit vectors, accurate near 0 and pi."""
    return np.arctan2(np.linalg.norm(np.cross(p, q), axis=-1), _dot(p, q))


def triangle_solid_angle(a, b, c):
    """Signed solid angle of the geodesic triangle (a, b, c) on the unit sphere."""
    num = _dot(a, np.cross(b, c))
    den = 1.0 + _dot(a, b) + _dot(b, c) + _dot(c, a)
    return 2.0 * np.arctan2(num, den)


def _triangle_grad(a, b, c):
    """Omega and its derivatives with respect to a, b, c."""
    num = _dot(a, np.cross(b, c))
    den = 1.0 + _dot(a, b) + _dot(b, c) + _dot(c, a)
    r2 = num * num + den * den
    fn = (2.0 * den / r2)[..., None]
    fd = (-2.0 * num / r2)[..., None]
    return (2.0 * np.arctan2(num, den),
            fn * np.cross(b, c) + fd * (b + c),
            fn * np.cross(c, a) + fd * (a + c),
            fn * np.cross(a, b) + fd * (a + b))


# plaquette planes (i, k) with i < k; the solid angle is oriented like H_ik
PLANES = ((0, 1), (0, 2), (1, 2))


def plaquette_flux(n, i, k, periodic):
    """Solid angle of every (i, k) plaquette, split along the 00-11 diagonal."""
    c = {(di, dk): _corner(n, i, k, di, dk, periodic) for di in (0, 1) for dk in (0, 1)}
    return triangle_solid_angle(c[0, 0], c[1, 0], c[1, 1]) + triangle_solid_angle(c[0, 0], c[1, 1], c[0, 1])


def _geodesic_densities(n, grid, a, b):
    """Node densities whose h^3-weighted sums are the geodesic e2 and e4.

    Each link energy is split evenly between its two nodes and each
    plaquette energy evenly between its four corners.
    """
    h, periodic = grid.h, grid.periodic
    dens2 = np.zeros(grid.shape)
    dens4 = np.zeros(grid.shape)
    for ax in range(3):
        lo, hi = _lo_hi(n, ax, periodic)
        link = a * link_angle(lo, hi) ** 2 / (h * h)
        _scatter_link(dens2, 0.5 * link, ax, 0, periodic)
        _scatter_link(dens2, 0.5 * link, ax, 1, periodic)
    for i, k in PLANES:
        om = plaquette_flux(n, i, k, periodic)
        quarter = 0.5 * b * om * om / h ** 4
        for di in (0, 1):
            for dk in (0, 1):
                _scatter_corner(dens4, quarter, i, k, di, dk, periodic)
    return dens2, dens4


def _geodesic_gradient(n, grid, a, b):
    h, periodic = grid.h, grid.periodic
    g = np.zeros_like(n)
    for ax in range(3):
        lo, hi = _lo_hi(n, ax, periodic)
        th = link_angle(lo, hi)
        s = np.sin(th)
        # d(theta^2)/d lo = -2 theta / sin(theta) * hi (tangential part)
        f = np.where(s > 1e-12, th / np.where(s > 1e-12, s, 1.0), 1.0)
        w = (-2.0 * a * h * f)[..., None]
        _scatter_link(g, w * hi, ax, 0, periodic)
        _scatter_link(g, w * lo, ax, 1, periodic)
    for i, k in PLANES:
        c = {(di, dk): _corner(n, i, k, di, dk, periodic) for di in (0, 1) for dk in (0, 1)}
        o1, a1, b1, c1 = _triangle_grad(c[0, 0], c[1, 0], c[1, 1])
        o2, a2, b2, c2 = _triangle_grad(c[0, 0], c[1, 1], c[0, 1])
        w = (4.0 * b / h * (o1 + o2))[..., None]
        _scatter_corner(g, w * (a1 + a2), i, k, 0, 0, periodic)
        _scatter_corner(g, w * b1, i, k, 1, 0, periodic)
        _scatter_corner(g, w * (c1 + b2), i, k, 1, 1, periodic)
        _scatter_corner(g, w * c2, i, k, 0, 1, periodic)
    return g


def _central_densities(n, grid, a, b):
    d, _, B = _terms(n, grid)
    dens2 = a * sum(_dot(dk, dk) for dk in d)
    dens4 = 2.0 * b * _dot(B, B)
    return dens2, dens4


def energy_densities(n: np.ndarray, grid, a: float, b: float, stencil: str = DEFAULT_STENCIL):
    if stencil == "geodesic":
        return _geodesic_densities(n, grid, a, b)
    if stencil == "central":
        return _central_densities(n, grid, a, b)
    raise ValueError(f"unknown stencil {stencil!r}")


def energy_arrays(n: np.ndarray, grid, a: float = 1.0, b: float = 1.0, stencil: str = DEFAULT_STENCIL):
    """(e2, e4) for a raw ``(nx, ny, nz, 3)`` array."""
    dens2, dens4 = energy_densities(n, grid, a, b, stencil)
    vol = grid.cell_volume
    return vol * _pairwise_sum(dens2), vol * _pairwise_sum(dens4)


def energy(n: DirectorField, a: float = 1.0, b: float = 1.0, with_density: bool = False,
           stencil: str = DEFAULT_STENCIL) -> EnergyReport:
    if not (a > 0 and b > 0):
        raise ValueError("couplings a and b must be positive")
    dens2, dens4 = energy_densities(n.data, n.grid, a, b, stencil)
    vol = n.grid.cell_volume
    e2 = vol * _pairwise_sum(dens2)
    e4 = vol * _pairwise_sum(dens4)
    ratio = e2 / e4 if e4 > 0 else math.inf
    density = ScalarField(n.grid, dens2 + dens4) if with_density else None
    return EnergyReport(a, b, e2, e4, e2 + e4, ratio, density)


def gradient_array(n: np.ndarray, grid, a: float = 1.0, b: float = 1.0, project: bool = True,
                   stencil: str = DEFAULT_STENCIL) -> np.ndarray:
    """dE/dn_node of the lattice energy, tangentially projected, zero on the vacuum shell."""
    if stencil == "geodesic":
        g = _geodesic_gradient(n, grid, a, b)
    elif stencil == "central":
        g = _central_gradient(n, grid, a, b)
    else:
        raise ValueError(f"unknown stencil {stencil!r}")
    if project:
        g -= _dot(g, n)[..., None] * n
    if not grid.periodic:
        g[grid.boundary_mask()] = 0.0
    return g


def _central_gradient(n, grid, a, b):
    d, cross, B = _terms(n, grid)
    h, periodic = grid.h, grid.periodic
    # H_ik for the ordered pairs, indexed [i][k]
    H = [[None] * 3 for _ in range(3)]
    for j, (i, k) in enumerate(PAIRS):
        H[i][k] = B[..., j]
        H[k][i] = -B[..., j]
    dxn = [np.cross(dk, n) for dk in d]
    g = np.zeros_like(n)
    for j, (i, k) in enumerate(PAIRS):
        g += (4.0 * b) * B[..., j, None] * cross[j]
    for i in range(3):
        p = 2.0 * a * d[i]
        for k in range(3):
            if k != i:
                p += (4.0 * b) * H[i][k][..., None] * dxn[k]
        g += diff_adjoint(p, i, h, periodic)
    g *= grid.cell_volume
    return g


def gradient(n: DirectorField, a: float = 1.0, b: float = 1.0, stencil: str = DEFAULT_STENCIL) -> np.ndarray:
    """Exact derivative of the lattice energy w.r.t. each node, projected onto T_n S^2.

    Returned as an ``(nx, ny, nz, 3)`` array; the fixed-vacuum shell is zero.
    """
    return gradient_array(n.data, n.grid, a, b, stencil=stencil)


def virial_check(report: EnergyReport, tol: float) -> bool:
    if not report.e4 > 0:
        raise ValueError("virial check needs a positive quartic energy")
    return abs(report.e2 / report.e4 - 1.0) <= tol


def rescale_field(n: DirectorField, lam: float) -> DirectorField:
    """Dilated field ``n(x / lam)`` resampled on the same grid.

    Points whose preimage falls outside a walled box take the vacuum value.
    """
    if not lam > 0:
        raise ValueError("scale factor must be positive")
    grid = n.grid
    pts = grid.positions() / lam
    if grid.periodic:
        vals = sample_array(n.data, grid, pts)
    else:
        lo = np.asarray(grid.origin)
        hi = grid.upper
        inside = np.all((pts >= lo) & (pts <= hi), axis=-1)
        vals = np.broadcast_to(np.asarray(n.vacuum), pts.shape).copy()
        vals[inside] = sample_array(n.data, grid, pts[inside])
    out = DirectorField(grid, normalize_array(vals), n.vacuum)
    return out.apply_boundary()


def vk_check(n: DirectorField, a: float = 1.0, b: float = 1.0, charge: float | None = None) -> VKReport:
    """Bundle the rounded Hopf charge, total energy and E/|Q|^(3/4)."""
    if charge is None:
        from .topology import hopf_charge_whitehead
        charge = hopf_charge_whitehead(n)
    q = int(round(charge))
    e = energy(n, a, b).total
    c = e / abs(q) ** 0.75 if q != 0 else None
    return VKReport(q, e, c)


def sublinear(e1: float, e2: float) -> bool:
    """Energy ratio of the charge-2 and charge-1 minima lies strictly in (1, 2)."""
    return 1.0 < e2 / e1 < 2.0
