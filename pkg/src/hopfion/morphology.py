"""Shape diagnostics for relaxed solitons: axial symmetry and center-loop geometry."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .energy import energy_densities
from .errors import NotLocalized
from .lattice import DirectorField, sample_array

SHELL_FRACTION = 0.125  # outer shell thickness per face, as a fraction of the node count
SHELL_ENERGY_MAX = 0.05


@dataclass
class AxisFit:
    score: float
    center: np.ndarray
    direction: np.ndarray


def _frame(u):
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    t = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(u, t)
    e1 /= np.linalg.norm(e1)
    return u, e1, np.cross(u, e1)


def shell_energy_fraction(density: np.ndarray) -> float:
    mask = np.zeros(density.shape, dtype=bool)
    for ax, m in enumerate(density.shape):
        w = max(1, int(round(SHELL_FRACTION * m)))
        idx = [slice(None)] * 3
        idx[ax] = slice(0, w)
        mask[tuple(idx)] = True
        idx[ax] = slice(m - w, m)
        mask[tuple(idx)] = True
    total = float(density.sum())
    return float(density[mask].sum()) / total if total > 0 else 0.0


class _CircleScorer:
    """Relative standard deviation of a density on coaxial circles."""

    def __init__(self, density, grid, center, n_radii=16, n_heights=16, n_angles=48):
        self.density, self.grid = density, grid
        self.center = np.asarray(center, dtype=float)
        pos = grid.positions().reshape(-1, 3) - self.center
        w = density.reshape(-1)
        # sampling extent: radius holding ~all of the energy, kept inside the box
        r = np.linalg.norm(pos, axis=1)
        order = np.argsort(r)
        cum = np.cumsum(w[order])
        r99 = r[order][min(np.searchsorted(cum, 0.99 * cum[-1]), len(r) - 1)]
        room = float(np.min(np.minimum(self.center - grid.origin, grid.upper - self.center)))
        extent = max(min(r99, room / np.sqrt(2.0) - grid.h), 2 * grid.h)
        self.radii = (np.arange(n_radii) + 0.5) / n_radii * extent
        self.heights = (np.arange(n_heights) + 0.5) / n_heights * 2 * extent - extent
        self.angles = np.arange(n_angles) * 2 * np.pi / n_angles

    def __call__(self, direction) -> float:
        u, e1, e2 = _frame(direction)
        R, Z, A = np.meshgrid(self.radii, self.heights, self.angles, indexing="ij")
        pts = (self.center + Z[..., None] * u + R[..., None] * (np.cos(A)[..., None] * e1 + np.sin(A)[..., None] * e2))
        vals = sample_array(self.density, self.grid, pts)
        mean = vals.mean(axis=-1)
        var = vals.var(axis=-1)
        # circles weighted by their circumference (volume element r dr dz)
        w = self.radii[:, None]
        den = float(np.sum(w * mean ** 2))
        return float(np.sqrt(np.sum(w * var) / den)) if den > 0 else 0.0


def _angles_to_dir(t):
    th, ph = t
    return np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])


def _dir_to_angles(u):
    u = u / np.linalg.norm(u)
    return np.array([np.arccos(np.clip(u[2], -1, 1)), np.arctan2(u[1], u[0])])


def fit_symmetry_axis(n: DirectorField, a: float = 1.0, b: float = 1.0, density=None) -> AxisFit:
    """Best axis through the energy centroid.

    Candidates are the principal axes of the density's second-moment tensor;
    the best one is refined with Nelder-Mead on the direction angles.
    """
    if density is None:
        d2, d4 = energy_densities(n.data, n.grid, a, b)
        density = d2 + d4
    if shell_energy_fraction(density) > SHELL_ENERGY_MAX:
        raise NotLocalized("more than 5% of the energy sits in the outer shell")
    pos = n.grid.positions().reshape(-1, 3)
    w = density.reshape(-1)
    center = (w[:, None] * pos).sum(axis=0) / w.sum()
    rel = pos - center
    M = np.einsum("p,pi,pj->ij", w, rel, rel) / w.sum()
    _, vecs = np.linalg.eigh(M)
    scorer = _CircleScorer(density, n.grid, center)
    cands = [(scorer(vecs[:, i]), vecs[:, i]) for i in range(3)]
    s0, u0 = min(cands, key=lambda c: c[0])
    res = minimize(lambda t: scorer(_angles_to_dir(t)), _dir_to_angles(u0), method="Nelder-Mead",
                   options={"xatol": 1e-3, "fatol": 1e-5, "maxiter": 200})
    if res.fun < s0:
        s0, u0 = float(res.fun), _angles_to_dir(res.x)
    return AxisFit(float(s0), center, u0 / np.linalg.norm(u0))


def axial_symmetry_score(n: DirectorField, axis=None, a: float = 1.0, b: float = 1.0) -> float:
    """Relative standard deviation of the energy density on circles about ``axis``.

    ``axis`` is ``(point, direction)``; when omitted it is fitted through the
    energy centroid.  0 means perfectly axially symmetric.
    """
    d2, d4 = energy_densities(n.data, n.grid, a, b)
    density = d2 + d4
    if axis is None:
        return fit_symmetry_axis(n, a, b, density).score
    if shell_energy_fraction(density) > SHELL_ENERGY_MAX:
        raise NotLocalized("more than 5% of the energy sits in the outer shell")
    point, direction = axis
    return _CircleScorer(density, n.grid, point)(direction)


def loop_radial_variation(points: np.ndarray, center, direction) -> float:
    """Relative standard deviation of the distance of ``points`` from the axis line."""
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    rel = np.asarray(points) - np.asarray(center)
    radial = rel - np.outer(rel @ u, u)
    r = np.linalg.norm(radial, axis=1)
    return float(r.std() / r.mean())
