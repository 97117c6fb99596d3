import time

import numpy as np
import pytest

from hopfion.ansatz import AnsatzSpec, build_ansatz
from hopfion.lattice import Grid
from hopfion.relax import RelaxParams, RunWriter, relax

# lines printed at the end of the session by the acceptance suite
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])


class Run:
    """A finished relaxation with the pieces the tests look at."""

    def __init__(self, state, log_path, seconds):
        self.state = state
        self.n = state.n
        self.log_path = log_path
        self.seconds = seconds


def _relax(tmp_path_factory, name, size, half_width, m, k, **params):
    grid = Grid.cube(size, half_width)
    n0 = build_ansatz(grid, AnsatzSpec(m, k, half_width))
    out = tmp_path_factory.mktemp(name)
    p = RelaxParams(charge_check_every=50, **params)
    t = time.time()
    state = relax(n0, p, 1.0, 1.0, writer=RunWriter(out, p, 1.0, 1.0))
    return Run(state, out / "run.jsonl", time.time() - t)


@pytest.fixture(scope="session")
def relaxed_q1(tmp_path_factory):
    return _relax(tmp_path_factory, "q1_48", 48, 6.0, 1, 1)


@pytest.fixture(scope="session")
def relaxed_q2(tmp_path_factory):
    return _relax(tmp_path_factory, "q2_48", 48, 6.0, 2, 1)


@pytest.fixture(scope="session")
def relaxed_q1_large(tmp_path_factory):
    # same spacing as 48^3 / half-width 6, box 5/3 wider
    return _relax(tmp_path_factory, "q1_80", 80, 10.0, 1, 1)


@pytest.fixture(scope="session")
def ansatz64():
    """Analytic fields on the 64^3, half-width 8 box keyed by (m, k)."""
    grid = Grid.cube(64, 8.0)
    cache = {}

    def get(m, k):
        if (m, k) not in cache:
            cache[m, k] = build_ansatz(grid, AnsatzSpec(m, k, 8.0))
        return cache[m, k]

    return get


def random_smooth_director(grid, seed, kmax=0.125):
    """Unit field from band-limited Gaussian noise (periodic-smooth, O(1) gradients)."""
    rng = np.random.default_rng(seed)
    comps = []
    for _ in range(3):
        spec = np.fft.fftn(rng.standard_normal(grid.shape))
        k = np.meshgrid(*[np.abs(np.fft.fftfreq(m)) for m in grid.shape], indexing="ij")
        spec[np.sqrt(sum(c ** 2 for c in k)) > kmax] = 0
        comps.append(np.fft.ifftn(spec).real)
    v = np.stack(comps, axis=-1)
    v /= v.std()
    v[..., 2] += 0.5
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def tapered_random_director(grid, seed, kmax=0.125):
    """Random smooth field that goes to the vacuum smoothly at the walls (no clamping kink)."""
    v = random_smooth_director(grid, seed, kmax)
    w = np.ones(grid.shape)
    for axis, m in enumerate(grid.shape):
        s = np.sin(np.pi * np.arange(m) / (m - 1)) ** 2
        w *= s.reshape([-1 if a == axis else 1 for a in range(3)])
    v = w[..., None] * v + (1 - w)[..., None] * np.array([0.0, 0.0, 1.0])
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    v[grid.boundary_mask()] = (0.0, 0.0, 1.0)
    return v
