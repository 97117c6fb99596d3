import numpy as np
import pytest

from hopfion.ansatz import AnsatzSpec, Profile, build_ansatz, hopf_map, hopf_spinor, perturb
from hopfion.lattice import Grid
from hopfion.topology import hopf_charge_whitehead


def test_spec_validation():
    with pytest.raises(ValueError):
        AnsatzSpec(0, 0)
    with pytest.raises(ValueError):
        AnsatzSpec(1, 0)
    with pytest.raises(ValueError):
        AnsatzSpec(1, 1, 4.0, core_radius=2.5)
    assert AnsatzSpec(1, 1, 8.0).core_radius == pytest.approx(2.5)
    assert AnsatzSpec(2, -3).charge == -6


def test_unit_norm_and_center_value():
    g = Grid.cube(33, 4.0)
    n = build_ansatz(g, AnsatzSpec(1, 1, 4.0))
    assert np.abs(np.linalg.norm(n.data, axis=-1) - 1).max() < 1e-12
    # the origin maps to the antipode of infinity on S^3, whose Hopf image is again the north pole;
    # the south pole is taken on the circle f(r) = pi/2 in the plane z = 0
    assert np.allclose(n.data[16, 16, 16], (0.0, 0.0, 1.0))
    chi1, chi2 = hopf_spinor(g, AnsatzSpec(1, 1, 4.0))
    assert np.allclose(np.abs(chi1) ** 2 + np.abs(chi2) ** 2, 1.0)
    assert np.allclose(hopf_map(chi1, chi2)[1:-1, 1:-1, 1:-1], n.data[1:-1, 1:-1, 1:-1])


@pytest.mark.parametrize("m,k", [(1, 1), (1, 2)])
def test_boundary_compliance(m, k):
    # two outer shells within 1e-3 of the vacuum whenever half_width >= 4 core_radius
    hw = 8.0
    g = Grid.cube(64, hw)
    n = build_ansatz(g, AnsatzSpec(m, k, hw, Profile.GAUSSIAN, hw / 4))
    shell = np.zeros(g.shape, dtype=bool)
    shell[:2] = shell[-2:] = True
    shell[:, :2] = shell[:, -2:] = True
    shell[:, :, :2] = shell[:, :, -2:] = True
    dev = np.linalg.norm(n.data[shell] - (0.0, 0.0, 1.0), axis=-1)
    assert dev.max() <= 1e-3


def test_mirror_flips_charge():
    g = Grid.cube(48, 6.0)
    q = hopf_charge_whitehead(build_ansatz(g, AnsatzSpec(1, 1, 6.0)))
    qm = hopf_charge_whitehead(build_ansatz(g, AnsatzSpec(-1, 1, 6.0)))
    assert round(q) == 1 and round(qm) == -1
    assert qm == pytest.approx(-q, rel=1e-6)


def test_perturb_contract():
    g = Grid.cube(48, 6.0)
    n = build_ansatz(g, AnsatzSpec(1, 1, 6.0))
    assert np.array_equal(perturb(n, 0.0, 3).data, n.data)
    p1, p2 = perturb(n, 0.05, 3), perturb(n, 0.05, 3)
    assert np.array_equal(p1.data, p2.data)
    assert not np.array_equal(p1.data, perturb(n, 0.05, 4).data)
    assert np.all(p1.data[g.boundary_mask()] == (0.0, 0.0, 1.0))
    assert np.abs(np.linalg.norm(p1.data, axis=-1) - 1).max() < 1e-12
    assert round(hopf_charge_whitehead(p1)) == 1
    with pytest.raises(ValueError):
        perturb(n, 0.3, 0)
