"""Gauge-invariant variables for two-component Ginzburg-Landau type fields.

Two complex order parameters ``psi_a`` coupled to a vector potential ``A``
are rewritten as a density ``rho``, a unit vector ``n`` and a gauge
invariant vector ``C``::

    rho^2 = |psi_1|^2 + |psi_2|^2,     chi_a = psi_a / rho,
    n_a   = chi^dagger tau_a chi       (tau_a the Pauli matrices),
    J_k   = -i sum_a (conj(psi_a) d_k psi_a - d_k conj(psi_a) psi_a),
    C_k   = A_k + J_k / (2 rho^2).

With these the kinetic and magnetic energy density
``sum |(d_k + i A_k) psi_a|^2 + 1/2 F_ik^2`` becomes, exactly,

    (d rho)^2 + rho^2 (K2 (d n)^2 + C^2) + 1/2 (d_k C_i - d_i C_k + K4 H_ik)^2

with ``K2 = 1/4`` and ``K4 = +1/2`` (sum over ordered index pairs, ``H_ik =
n . (d_i n x d_k n)``).  Both constants come from a symbolic evaluation of
the two sides at a generic point; ``tests/test_glmap.py`` repeats it.
For ``rho`` constant and ``C = 0`` this is the Faddeev energy with
``a = K2 rho^2`` and ``b = K4^2 / 2``; with ``order=2`` the lattice versions
coincide with the ``"central"`` stencil of :mod:`hopfion.energy`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import VortexDetected
from .lattice import DirectorField, Grid, ScalarField, VectorField3, central_diff, gradients
from .topology import h_tensor_array

K2 = 0.25  # coefficient of rho^2 (d n)^2
K4 = 0.5  # coefficient of H_ik inside the field-strength square
RHO_MIN = 1e-6
# derivative order for J, C and both energies; at order 2 the two energies of a
# smooth random 32^3 field differ by ~0.5% through the discrete product rule
ORDER = 4

PAULI = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


@dataclass(eq=False)
class GLFields:
    grid: Grid
    psi1: np.ndarray
    psi2: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        self.psi1 = np.asarray(self.psi1, dtype=complex)
        self.psi2 = np.asarray(self.psi2, dtype=complex)
        self.A = np.asarray(self.A, dtype=float)
        for name, arr, shape in (("psi1", self.psi1, self.grid.shape), ("psi2", self.psi2, self.grid.shape),
                                 ("A", self.A, self.grid.shape + (3,))):
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")

    @property
    def rho(self) -> np.ndarray:
        return np.sqrt(np.abs(self.psi1) ** 2 + np.abs(self.psi2) ** 2)


@dataclass(eq=False)
class ReparamFields:
    rho: ScalarField
    n: DirectorField
    C: VectorField3
    J: VectorField3

    @property
    def grid(self) -> Grid:
        return self.rho.grid


def hopf_map_pauli(chi1: np.ndarray, chi2: np.ndarray) -> np.ndarray:
    """n_a = chi^dagger tau_a chi for a unit spinor field."""
    chi = np.stack([chi1, chi2], axis=-1)
    n = np.einsum("...i,aij,...j->...a", np.conj(chi), PAULI, chi)
    return n.real


def _derivs(arr, grid, order):
    return gradients(arr, grid, order)


def current(psis, grid: Grid, order: int = ORDER) -> np.ndarray:
    """J_k = 2 Im sum_a conj(psi_a) d_k psi_a, shape (..., 3)."""
    J = np.zeros(grid.shape + (3,))
    for psi in psis:
        for k, dpsi in enumerate(_derivs(psi, grid, order)):
            J[..., k] += 2.0 * np.imag(np.conj(psi) * dpsi)
    return J


def reparameterize(f: GLFields, rho_min: float = RHO_MIN, order: int = ORDER) -> ReparamFields:
    rho = f.rho
    low = float(rho.min())
    if low < rho_min:
        idx = np.unravel_index(int(np.argmin(rho)), rho.shape)
        raise VortexDetected(f"rho = {low:.3g} < {rho_min:g} at node {tuple(int(i) for i in idx)}")
    n = hopf_map_pauli(f.psi1 / rho, f.psi2 / rho)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)  # removes rounding only
    J = current((f.psi1, f.psi2), f.grid, order)
    C = f.A + J / (2.0 * rho[..., None] ** 2)
    g = f.grid
    return ReparamFields(ScalarField(g, rho), DirectorField(g, n), VectorField3(g, C), VectorField3(g, J))


def gauge_transform(f: GLFields, lam) -> GLFields:
    """psi -> exp(i lam) psi, A -> A - grad lam."""
    lam = np.asarray(getattr(lam, "data", lam), dtype=float)
    if lam.shape != f.grid.shape:
        raise ValueError(f"lambda has shape {lam.shape}, expected {f.grid.shape}")
    phase = np.exp(1j * lam)
    s = ScalarField(f.grid, lam)
    dlam = np.stack([central_diff(s, k).data for k in range(3)], axis=-1)
    return GLFields(f.grid, phase * f.psi1, phase * f.psi2, f.A - dlam)


def _curl(v, grid, order):
    d = [_derivs(v[..., k], grid, order) for k in range(3)]  # d[k][i] = d_i v_k
    return np.stack([d[2][1] - d[1][2], d[0][2] - d[2][0], d[1][0] - d[0][1]], axis=-1)


def original_density(f: GLFields, potential=None, order: int = ORDER) -> np.ndarray:
    """sum_a |(d_k + i A_k) psi_a|^2 + 1/2 F_ik F_ik + V(|psi_1|, |psi_2|)."""
    dens = np.zeros(f.grid.shape)
    for psi in (f.psi1, f.psi2):
        for k, dpsi in enumerate(_derivs(psi, f.grid, order)):
            dens += np.abs(dpsi + 1j * f.A[..., k] * psi) ** 2
    # 1/2 over ordered pairs is |curl A|^2
    dens += np.sum(_curl(f.A, f.grid, order) ** 2, axis=-1)
    if potential is not None:
        dens += potential(np.abs(f.psi1), np.abs(f.psi2))
    return dens


def reparam_density(r: ReparamFields, potential=None, order: int = ORDER) -> np.ndarray:
    g = r.grid
    rho, n, C = r.rho.data, r.n.data, r.C.data
    dens = sum(d ** 2 for d in _derivs(rho, g, order))
    dn2 = sum(np.sum(d ** 2, axis=-1) for d in _derivs(n, g, order))
    dens = dens + rho ** 2 * (K2 * dn2 + np.sum(C ** 2, axis=-1))
    # d_k C_i - d_i C_k for the cyclic pair (i, k) is minus the curl component
    B = h_tensor_array(n, g, order)
    dens = dens + np.sum((K4 * B - _curl(C, g, order)) ** 2, axis=-1)
    if potential is not None:
        dens = dens + potential(rho, n[..., 2])
    return dens


def energy_original(f: GLFields, potential=None, order: int = ORDER) -> float:
    return float(f.grid.cell_volume * np.sum(original_density(f, potential, order)))


def energy_reparam(r: ReparamFields, potential=None, order: int = ORDER) -> float:
    return float(r.grid.cell_volume * np.sum(reparam_density(r, potential, order)))


def faddeev_couplings(rho: float) -> tuple:
    """(a, b) of the Faddeev energy obtained at constant rho and C = 0."""
    return K2 * rho ** 2, 0.5 * K4 ** 2


def fields_from_spinor(grid: Grid, chi1, chi2, rho=1.0, A=None) -> GLFields:
    """GL fields psi_a = rho chi_a, e.g. from the Hopf ansatz spinor."""
    rho = np.broadcast_to(np.asarray(rho, dtype=float), grid.shape)
    A = np.zeros(grid.shape + (3,)) if A is None else A
    return GLFields(grid, rho * chi1, rho * chi2, A)


def smooth_random(grid: Grid, rng: np.random.Generator, kmax: float = 1.5, shape=()) -> np.ndarray:
    """Real field made of a few random long-wavelength plane waves, unit RMS.

    Wave vectors are integer multiples of ``2 pi / L`` with length up to
    ``kmax``, so the field is periodic on periodic grids.
    """
    L = grid.period
    ints = [np.arange(-int(kmax), int(kmax) + 1)] * 3
    ks = np.array(np.meshgrid(*ints, indexing="ij")).reshape(3, -1).T
    norm = np.linalg.norm(ks, axis=1)
    ks = ks[(norm > 0) & (norm <= kmax)]
    x = grid.mesh()
    out = np.zeros(tuple(shape) + grid.shape)
    phase_arg = sum(2 * np.pi * ks[:, a, None, None, None] / L[a] * x[a][None] for a in range(3))
    for idx in np.ndindex(*shape) if shape else [()]:
        amp = rng.standard_normal(len(ks))
        off = rng.uniform(0, 2 * np.pi, len(ks))
        v = np.tensordot(amp, np.cos(phase_arg + off[:, None, None, None]), axes=1)
        out[idx] = v / np.sqrt(np.mean(v ** 2))
    return out


def random_fields(grid: Grid, seed: int = 0, amplitude: float = 0.3, kmax: float = 1.5) -> GLFields:
    """Smooth random GL fields with rho bounded away from zero."""
    rng = np.random.default_rng(seed)
    r1, r2, t1, t2 = smooth_random(grid, rng, kmax, (4,))
    ang = 0.6 + 0.4 * r1  # mixing angle of the two components
    rho = 1.0 + amplitude * np.tanh(r2)
    psi1 = rho * np.cos(ang) * np.exp(1j * t1)
    psi2 = rho * np.sin(ang) * np.exp(1j * t2)
    A = amplitude * np.moveaxis(smooth_random(grid, rng, kmax, (3,)), 0, -1)
    return GLFields(grid, psi1, psi2, A)


def identity_report(f: GLFields, potential_original=None, potential_reparam=None, n_gauge: int = 3,
                    seed: int = 0, order: int = ORDER) -> dict:
    """Energy identity and gauge residuals as a JSON-ready dict."""
    r = reparameterize(f, order=order)
    e_o = energy_original(f, potential_original, order)
    e_r = energy_reparam(r, potential_reparam, order)
    rng = np.random.default_rng(seed)
    res = {"rho": 0.0, "n": 0.0, "C": 0.0}
    for _ in range(n_gauge):
        lam = smooth_random(f.grid, rng)
        rg = reparameterize(gauge_transform(f, lam), order=order)
        res["rho"] = max(res["rho"], float(np.max(np.abs(rg.rho.data - r.rho.data))))
        res["n"] = max(res["n"], float(np.max(np.abs(rg.n.data - r.n.data))))
        res["C"] = max(res["C"], float(np.max(np.abs(rg.C.data - r.C.data))))
    return {
        "e_original": e_o,
        "e_reparam": e_r,
        "rel_diff": abs(e_o - e_r) / max(abs(e_o), 1e-300),
        "gauge_residuals": res,
    }
