import numpy as np
import pytest

from conftest import random_smooth_director
from hopfion.errors import NotLocalized
from hopfion.lattice import DirectorField, Grid
from hopfion.morphology import axial_symmetry_score, fit_symmetry_axis, loop_radial_variation


def test_symmetric_ansatz_scores_low(ansatz64):
    n = ansatz64(1, 1)
    assert axial_symmetry_score(n, ((0, 0, 0), (0, 0, 1))) <= 0.02


def test_score_is_frame_independent(ansatz64):
    n = ansatz64(1, 1)
    fit = fit_symmetry_axis(n)
    # rotate space by 90 degrees about x: n'(x, y, z) = n(x, z, -y)
    rot = DirectorField(n.grid, np.transpose(n.data, (0, 2, 1, 3))[:, ::-1].copy())
    fit_rot = fit_symmetry_axis(rot)
    assert abs(fit_rot.score - fit.score) <= 0.01
    assert abs(fit.direction[2]) > 0.999
    assert abs(fit_rot.direction[1]) > 0.999


def test_tilted_axis_scores_high(ansatz64):
    n = ansatz64(1, 1)
    s = np.sqrt(0.5)
    assert axial_symmetry_score(n, ((0, 0, 0), (s, 0, s))) > 0.2


def test_delocalized_field_rejected():
    g = Grid.cube(24, 3.0)
    f = DirectorField(g, random_smooth_director(g, seed=1))
    with pytest.raises(NotLocalized):
        axial_symmetry_score(f)


def test_loop_radial_variation():
    t = np.linspace(0, 2 * np.pi, 100, endpoint=False)
    ring = np.stack([2 * np.cos(t), 2 * np.sin(t), np.zeros_like(t)], axis=-1) + (1.0, -1.0, 0.5)
    assert loop_radial_variation(ring, (1.0, -1.0, 0.0), (0, 0, 1)) < 1e-12
    ellipse = ring * (1.1, 0.9, 1.0)
    assert loop_radial_variation(ellipse, (1.1, -0.9, 0.0), (0, 0, 1)) > 0.05
