import numpy as np
import pytest

from conftest import random_smooth_director
from hopfion import kernels
from hopfion.ansatz import AnsatzSpec, build_ansatz
from hopfion.energy import (EnergyReport, energy, energy_arrays, gradient, gradient_array, rescale_field,
                            sublinear, triangle_solid_angle, virial_check, vk_check)
from hopfion.lattice import Boundary, DirectorField, Grid, normalize_array

STENCILS = ("geodesic", "central")


def _tangent(rng, n, grid):
    t = rng.standard_normal(n.shape)
    t -= np.einsum("...c,...c->...", t, n)[..., None] * n
    if not grid.periodic:
        t[grid.boundary_mask()] = 0
    return t


@pytest.mark.parametrize("stencil", STENCILS)
def test_vacuum_has_zero_energy_and_gradient(stencil):
    g = Grid.cube(12, 2.0)
    f = DirectorField.uniform(g)
    rep = energy(f, stencil=stencil)
    assert rep.e2 == 0 and rep.e4 == 0 and rep.total == 0
    assert not np.any(gradient(f, stencil=stencil))


@pytest.mark.parametrize("stencil", STENCILS)
def test_coupling_linearity_and_positivity(stencil):
    g = Grid.cube(24, 4.0)
    n = build_ansatz(g, AnsatzSpec(1, 1, 4.0))
    r1 = energy(n, 1.0, 1.0, stencil=stencil)
    r2 = energy(n, 2.0, 1.0, stencil=stencil)
    assert r2.e2 == pytest.approx(2 * r1.e2, rel=1e-14)
    assert r2.e4 == r1.e4
    assert r1.e2 > 0 and r1.e4 > 0 and r1.total == r1.e2 + r1.e4


def test_second_order_convergence():
    # node spacing halves from 25 -> 49 -> 97 nodes on the same box
    totals = []
    for size in (25, 49, 97):
        g = Grid.cube(size, 8.0)
        totals.append(energy(build_ansatz(g, AnsatzSpec(1, 1, 8.0))).total)
    ratio = (totals[0] - totals[1]) / (totals[1] - totals[2])
    assert 3.0 < ratio < 5.0


@pytest.mark.parametrize("stencil", STENCILS)
@pytest.mark.parametrize("boundary", list(Boundary))
def test_gradient_matches_finite_differences(stencil, boundary):
    g = Grid(24, 24, 24, 0.25, (-3.0, -3.0, -3.0), boundary)
    n = random_smooth_director(g, seed=5)
    if not g.periodic:
        n[g.boundary_mask()] = (0.0, 0.0, 1.0)
    a, b, eps = 1.3, 0.7, 1e-5
    G = gradient_array(n, g, a, b, stencil=stencil)
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        t = _tangent(rng, n, g)
        plus = sum(energy_arrays(normalize_array(n + eps * t), g, a, b, stencil))
        minus = sum(energy_arrays(normalize_array(n - eps * t), g, a, b, stencil))
        fd = (plus - minus) / (2 * eps)
        worst = max(worst, abs(fd - np.sum(G * t)) / abs(fd))
    assert worst <= 1e-6


@pytest.mark.parametrize("stencil", STENCILS)
def test_gradient_is_tangential_and_zero_on_walls(stencil):
    g = Grid.cube(20, 3.0)
    n = build_ansatz(g, AnsatzSpec(1, 2, 3.0))
    G = gradient(n, stencil=stencil)
    assert np.abs(np.einsum("...c,...c->...", G, n.data)).max() <= 1e-12
    assert not np.any(G[g.boundary_mask()])


@pytest.mark.parametrize("stencil", STENCILS)
@pytest.mark.parametrize("boundary", list(Boundary))
def test_compiled_kernels_match_reference(stencil, boundary):
    g = Grid(14, 12, 13, 0.3, (-2.0, -2.0, -2.0), boundary)
    n = random_smooth_director(g, seed=2, kmax=0.3)
    if not g.periodic:
        n[g.boundary_mask()] = (0.0, 0.0, 1.0)
    e_ref = energy_arrays(n, g, 1.1, 0.9, stencil)
    e_fast = kernels.energy(n, g, 1.1, 0.9, stencil)
    assert np.allclose(e_fast, e_ref, rtol=1e-12)
    g_ref = gradient_array(n, g, 1.1, 0.9, stencil=stencil)
    g_fast = kernels.gradient(n, g, 1.1, 0.9, stencil)
    assert np.abs(g_fast - g_ref).max() <= 1e-12 * np.abs(g_ref).max()


def test_staggered_mode_curvature():
    """Central differences do not see the checkerboard mode; the geodesic energy does.

    Along a staggered tangential perturbation the central-difference energy
    curves downwards, so smooth solitons are saddles of it.
    """
    g = Grid.cube(32, 4.0)
    n = build_ansatz(g, AnsatzSpec(1, 1, 4.0)).data
    i, j, k = np.indices(g.shape)
    t = np.cross(n, [0.0, 0.0, 1.0]) * ((-1.0) ** (i + j + k))[..., None]
    t[g.boundary_mask()] = 0
    eps = 1e-3
    curv = {}
    for st in STENCILS:
        e = lambda s: sum(energy_arrays(normalize_array(n + s * t), g, 1.0, 1.0, st))  # noqa: E731
        curv[st] = (e(eps) + e(-eps) - 2 * e(0.0)) / eps ** 2
    assert curv["central"] < 0 < curv["geodesic"]


def test_triangle_solid_angle_octant():
    e = np.eye(3)
    assert triangle_solid_angle(e[0], e[1], e[2]) == pytest.approx(np.pi / 2)
    assert triangle_solid_angle(e[0], e[2], e[1]) == pytest.approx(-np.pi / 2)


def test_virial_check():
    assert virial_check(EnergyReport(1, 1, 5.0, 5.0, 10.0, 1.0), 0.05)
    assert not virial_check(EnergyReport(1, 1, 2.0, 1.0, 3.0, 2.0), 0.05)


def test_rescale_identity_and_scaling_law(ansatz64):
    n = ansatz64(1, 1)
    same = rescale_field(n, 1.0)
    assert np.abs(same.data - n.data).max() < 1e-12
    e0 = energy(n)
    for lam in (0.9, 1.1):
        e = energy(rescale_field(n, lam))
        assert e.e2 / e0.e2 == pytest.approx(lam, rel=0.03)
        assert e.e4 / e0.e4 == pytest.approx(1 / lam, rel=0.03)


def test_vk_report():
    g = Grid.cube(16, 3.0)
    assert vk_check(DirectorField.uniform(g)).c_estimate is None
    n = build_ansatz(g, AnsatzSpec(1, 1, 3.0))
    rep = vk_check(n, charge=1.0)
    assert rep.q == 1 and rep.c_estimate == pytest.approx(energy(n).total)
    assert sublinear(100.0, 160.0) and not sublinear(100.0, 210.0)
