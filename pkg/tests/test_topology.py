import numpy as np
import pytest

from hopfion.errors import NotClosed
from hopfion.lattice import Boundary, DirectorField, Grid, VectorField3, diff
from hopfion.topology import (CHARGE_ORDER, HField, charge_report, compute_H, hopf_charge_whitehead,
                              solve_potential)


def test_constant_field_has_no_H_and_no_charge():
    g = Grid.cube(16, 3.0)
    f = DirectorField.uniform(g)
    H = compute_H(f)
    assert not np.any(H.B.data)
    assert hopf_charge_whitehead(f) == 0.0
    sol = solve_potential(H)
    assert not np.any(sol.C.data)
    rep = charge_report(f)
    assert rep.q_rounded == 0 and rep.q_linking == 0


def test_H_antisymmetry(ansatz64):
    H = compute_H(ansatz64(1, 2))
    for i in range(3):
        assert not np.any(H.component(i, i))
        for k in range(3):
            assert np.array_equal(H.component(i, k), -H.component(k, i))
    assert np.array_equal(H.H12.data, H.component(0, 1))


def test_flux_of_q1_field(ansatz64):
    """Net B vanishes; the half-plane bounded by the symmetry axis carries 4 pi.

    The Hopf map sends every meridional half-plane onto the sphere once, so
    the flux of the pulled-back area form through it is the sphere's area.
    Through a full plane the flux of a localized divergence-free field is 0.
    """
    n = ansatz64(1, 1)
    g = n.grid
    B = compute_H(n, CHARGE_ORDER).B.data
    total = np.abs(B).sum()
    assert np.linalg.norm(B.sum(axis=(0, 1, 2))) <= 1e-3 * total
    j = g.ny // 2  # y = 0 lies midway between planes j - 1 and j
    By = 0.5 * (B[:, j - 1, :, 1] + B[:, j, :, 1])
    x = g.axes()[0]
    half = By[x > 0].sum() * g.h ** 2
    assert half == pytest.approx(4 * np.pi, rel=0.02)
    assert abs(By.sum() * g.h ** 2) <= 1e-10


def test_constant_B_on_periodic_grid_rejected():
    g = Grid(16, 16, 16, 0.5, (0, 0, 0), Boundary.PERIODIC)
    B = np.zeros(g.shape + (3,))
    B[..., 2] = 1.0
    with pytest.raises(NotClosed):
        solve_potential(HField(g, VectorField3(g, B)))


def test_potential_residuals(ansatz64):
    sol = solve_potential(compute_H(ansatz64(1, 1), CHARGE_ORDER))
    assert sol.curl_residual <= 1e-6
    assert sol.div_residual <= 1e-8
    assert sol.longitudinal_fraction < 0.01


def test_iterative_solver_agrees():
    from hopfion.ansatz import AnsatzSpec, build_ansatz
    from hopfion.topology import whitehead_integral

    g = Grid.cube(48, 6.0)
    n = build_ansatz(g, AnsatzSpec(1, 1, 6.0))
    H = compute_H(n, CHARGE_ORDER)
    cg = solve_potential(H, method="cg")
    assert cg.curl_residual <= 1e-5
    assert np.all(cg.C.data[g.boundary_mask()] == 0)
    q_cg = whitehead_integral(H.B.data, cg.C.data, g)
    q_spectral = whitehead_integral(H.B.data, solve_potential(H).C.data, g)
    assert q_cg == pytest.approx(q_spectral, abs=0.02)


def test_gauge_independence(ansatz64):
    from hopfion.topology import whitehead_integral

    n = ansatz64(1, 1)
    g = n.grid
    H = compute_H(n, CHARGE_ORDER)
    C = solve_potential(H).C.data
    q0 = whitehead_integral(H.B.data, C, g)
    x, y, z = g.mesh()
    chi = np.exp(-(x ** 2 + y ** 2 + z ** 2) / 8.0) * np.sin(x + 2 * y) * 3.0
    grad = np.stack([diff(chi, k, g.h) for k in range(3)], axis=-1)
    assert abs(whitehead_integral(H.B.data, C + grad, g) - q0) < 1e-3


def test_reflections(ansatz64):
    """Q scales with the square of the target degree and flips with a spatial mirror.

    n3 -> -n3 reverses the sphere's orientation, which flips both B and C, so
    the helicity is unchanged.  Mirroring space x -> -x flips the sign.
    """
    n = ansatz64(1, 1)
    q = hopf_charge_whitehead(n)
    target = n.data.copy()
    target[..., 2] *= -1
    q_target = hopf_charge_whitehead(DirectorField(n.grid, target, (0.0, 0.0, -1.0)))
    assert q_target == pytest.approx(q, abs=1e-9)
    mirrored = DirectorField(n.grid, n.data[::-1].copy())
    assert hopf_charge_whitehead(mirrored) == pytest.approx(-q, abs=1e-9)


@pytest.mark.parametrize("m,k,tol", [(1, 1, 0.02), (1, 2, 0.05)])
def test_whitehead_charge_of_ansatz(ansatz64, m, k, tol):
    assert abs(hopf_charge_whitehead(ansatz64(m, k)) - m * k) <= tol


def test_charge_report_agrees(ansatz64):
    rep = charge_report(ansatz64(1, 1))
    assert rep.q_rounded == 1 and rep.q_linking == 1
    d = rep.to_dict()
    assert set(d) == {"q_whitehead", "q_linking", "q_rounded", "residuals"}
