"""Gradient-flow relaxation of a director field at fixed Hopf sector.

The flow is ``dn/ds = -(1/h^3) dE/dn`` projected onto the sphere, i.e. the
L2 gradient of the lattice energy, integrated by explicit Euler steps with
renormalization and backtracking so that accepted energies never increase.
Pseudo-time ``s`` therefore has units of length squared.

Optionally the gradient is smoothed by ``(1 - alpha Laplacian)^-1`` before
the tangential projection (an H1 or Sobolev gradient).  This keeps the
direction a descent direction and has the same fixed points, but removes
the stiffness of short wavelengths that otherwise pins ``ds`` near
``0.01 h^2`` while the soliton's slow size mode needs pseudo-times of order
ten to settle.
"""
from __future__ import annotations

import enum
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import fft as sp_fft

from . import kernels
from .errors import FieldCollapse
from .fieldio import atomic_write_bytes, encode_field, write_json
from .lattice import DirectorField, normalize_array
from .topology import hopf_charge_whitehead

log = logging.getLogger(__name__)


class Status(str, enum.Enum):
    RUNNING = "Running"
    CONVERGED = "Converged"
    STALLED = "Stalled"
    CHARGE_JUMP = "ChargeJump"
    FIELD_COLLAPSE = "FieldCollapse"


@dataclass
class RelaxParams:
    """Step control and stopping rules; step sizes default to multiples of h^2."""

    ds0: float | None = None
    ds_min: float | None = None
    ds_max: float | None = None
    grad_tol: float = 1e-4
    energy_flat_tol: float = 1e-6
    flat_window: int = 50
    max_steps: int = 20000
    charge_check_every: int = 200
    checkpoint_every: int = 0
    seed: int = 0
    precondition: float = 1.0  # alpha (length^2) of the H1 smoothing; 0 = plain L2 flow
    max_rotation: float = 0.1  # cap on the largest per-node rotation of one step (radians)

    def resolved(self, h: float) -> "RelaxParams":
        p = RelaxParams(**asdict(self))
        if p.ds0 is None:
            p.ds0 = 0.01 * h * h
        if p.ds_min is None:
            p.ds_min = min(1e-6 * h * h, p.ds0)
        if p.ds_max is None:
            p.ds_max = max(4.0 * h * h, p.ds0)
        p.validate()
        return p

    def validate(self):
        for name in ("ds0", "ds_min", "ds_max"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")
        if self.ds0 is not None and self.ds_min is not None and self.ds_min > self.ds0:
            raise ValueError("ds_min must not exceed ds0")
        if self.ds0 is not None and self.ds_max is not None and self.ds0 > self.ds_max:
            raise ValueError("ds0 must not exceed ds_max")
        if not (self.grad_tol > 0 and self.energy_flat_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.flat_window < 1 or self.max_steps < 0:
            raise ValueError("flat_window must be >= 1 and max_steps >= 0")
        if self.charge_check_every < 0 or self.checkpoint_every < 0:
            raise ValueError("check intervals must be non-negative")
        if self.precondition < 0 or not self.max_rotation > 0:
            raise ValueError("precondition must be >= 0 and max_rotation > 0")


@dataclass
class RelaxState:
    n: DirectorField
    s: float = 0.0
    step: int = 0
    ds: float = 0.0
    energy_history: list = field(default_factory=list)
    charge_history: list = field(default_factory=list)
    status: Status = Status.RUNNING
    grad_max: float = math.inf
    clean_streak: int = 0
    message: str = ""

    @property
    def energy(self) -> float:
        _, e2, e4 = self.energy_history[-1]
        return e2 + e4

    def summary(self) -> dict:
        s, e2, e4 = self.energy_history[-1] if self.energy_history else (self.s, 0.0, 0.0)
        return {
            "status": self.status.value,
            "step": self.step,
            "s": self.s,
            "ds": self.ds,
            "e2": e2,
            "e4": e4,
            "total": e2 + e4,
            "virial_ratio": e2 / e4 if e4 > 0 else None,
            "grad_max": self.grad_max,
            "q": self.charge_history[-1][1] if self.charge_history else None,
            "message": self.message,
        }


def init_state(n: DirectorField, params: RelaxParams, a: float = 1.0, b: float = 1.0) -> RelaxState:
    p = params.resolved(n.grid.h)
    n = n.copy()
    e2, e4 = kernels.energy(n.data, n.grid, a, b)
    return RelaxState(n=n, ds=p.ds0, energy_history=[(0.0, e2, e4)])


def _l2_gradient(state: RelaxState, a, b):
    g = kernels.gradient(state.n.data, state.n.grid, a, b)
    g /= state.n.grid.cell_volume
    return g


def smooth_h1(g: np.ndarray, grid, alpha: float) -> np.ndarray:
    """Apply ``(1 - alpha Laplacian)^-1`` per component.

    Fixed-vacuum grids use the Dirichlet sine transform on the interior
    nodes (the shell stays zero); periodic grids use the FFT.
    """
    if alpha <= 0:
        return g
    h = grid.h
    if grid.periodic:
        lam = [(2 - 2 * np.cos(2 * np.pi * np.arange(m) / m)) / h ** 2 for m in grid.shape]
        denom = 1 + alpha * (lam[0][:, None, None] + lam[1][None, :, None] + lam[2][None, None, :])
        return np.real(sp_fft.ifftn(sp_fft.fftn(g, axes=(0, 1, 2)) / denom[..., None], axes=(0, 1, 2)))
    inner = g[1:-1, 1:-1, 1:-1]
    lam = [(2 - 2 * np.cos(np.pi * np.arange(1, m - 1) / (m - 1))) / h ** 2 for m in grid.shape]
    denom = 1 + alpha * (lam[0][:, None, None] + lam[1][None, :, None] + lam[2][None, None, :])
    out = np.zeros_like(g)
    spec = sp_fft.dstn(inner, type=1, axes=(0, 1, 2))
    out[1:-1, 1:-1, 1:-1] = sp_fft.idstn(spec / denom[..., None], type=1, axes=(0, 1, 2))
    return out


def descent_direction(state: RelaxState, params: RelaxParams, a, b) -> np.ndarray:
    """Tangential descent direction: the L2 gradient, optionally H1-smoothed."""
    g = _l2_gradient(state, a, b)
    if params.precondition > 0:
        n = state.n.data
        g = smooth_h1(g, state.n.grid, params.precondition)
        g -= np.einsum("...c,...c->...", g, n)[..., None] * n
    return g


def flow_step(state: RelaxState, params: RelaxParams, a: float = 1.0, b: float = 1.0,
              grad: np.ndarray | None = None) -> RelaxState:
    """One accepted explicit Euler step with backtracking (mutates and returns ``state``)."""
    if state.status != Status.RUNNING:
        raise ValueError(f"cannot step a run with status {state.status.value}")
    p = params.resolved(state.n.grid.h)
    g = descent_direction(state, p, a, b) if grad is None else grad
    gmax = float(np.sqrt(np.max(np.einsum("...c,...c->...", g, g))))
    if grad is None:
        state.grad_max = gmax
    n0 = state.n
    e_old = state.energy
    ds = state.ds
    if gmax > 0:
        ds = min(ds, p.max_rotation / gmax)
    backtracked = False
    while True:
        try:
            trial = DirectorField(n0.grid, normalize_array(n0.data - ds * g), n0.vacuum).apply_boundary()
        except FieldCollapse as exc:
            state.status = Status.FIELD_COLLAPSE
            state.message = str(exc)
            return state
        e2, e4 = kernels.energy(trial.data, trial.grid, a, b)
        if e2 + e4 <= e_old:
            break
        ds *= 0.5
        backtracked = True
        if ds < p.ds_min:
            state.status = Status.STALLED
            state.message = "step size underflow with energy still increasing"
            return state
    state.n = trial
    state.s += ds
    state.step += 1
    state.energy_history.append((state.s, e2, e4))
    if backtracked:
        state.clean_streak = 0
    else:
        state.clean_streak += 1
        if state.clean_streak >= 2:
            ds = min(1.2 * ds, p.ds_max)
            state.clean_streak = 0
    state.ds = ds
    return state


def _flat(history, window: int, tol: float) -> bool:
    if len(history) <= window:
        return False
    s0, a0, b0 = history[-1 - window]
    s1, a1, b1 = history[-1]
    e0, e1 = a0 + b0, a1 + b1
    if s1 <= s0 or e1 <= 0:
        return False
    return (e0 - e1) / (e1 * (s1 - s0)) <= tol


class RunWriter:
    """Checkpoints (field container + JSON sidecar) and a JSON-lines step log."""

    def __init__(self, out_dir, params: RelaxParams, a: float, b: float, extra: dict | None = None):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.params, self.a, self.b = params, a, b
        self.extra = extra or {}
        self.log_path = self.dir / "run.jsonl"
        self.log_path.write_text("")

    def log_step(self, state: RelaxState, q=None):
        s, e2, e4 = state.energy_history[-1]
        rec = {"step": state.step, "s": s, "ds": state.ds, "e2": e2, "e4": e4, "grad_max": state.grad_max}
        if q is not None:
            rec["q"] = q
        with open(self.log_path, "a") as fh:
            fh.write(json.dumps(rec) + "\n")

    def checkpoint(self, state: RelaxState, name: str = "checkpoint"):
        atomic_write_bytes(self.dir / f"{name}.hpfn", encode_field(state.n.data, state.n.grid))
        write_json(self.dir / f"{name}.json", {
            "params": asdict(self.params),
            "a": self.a,
            "b": self.b,
            "vacuum": list(state.n.vacuum),
            "summary": state.summary(),
            "energy_history": state.energy_history,
            "charge_history": state.charge_history,
            **self.extra,
        })


def relax(n_init: DirectorField, params: RelaxParams | None = None, a: float = 1.0, b: float = 1.0,
          writer: RunWriter | None = None, charge_fn=None, progress=None) -> RelaxState:
    """Run the flow until the gradient or energy-flatness criterion is met.

    Halts with ``ChargeJump`` if the rounded Whitehead charge changes between
    checks, ``Stalled`` on step underflow and ``FieldCollapse`` if a node
    shrinks to zero before renormalization.
    """
    params = params or RelaxParams()
    p = params.resolved(n_init.grid.h)
    charge_fn = charge_fn or (lambda f: hopf_charge_whitehead(f, pad=1))
    state = init_state(n_init, p, a, b)
    q0 = charge_fn(state.n)
    state.charge_history.append((0.0, q0))
    sector = round(q0)
    if writer:
        writer.log_step(state, q0)

    while state.status == Status.RUNNING:
        g = _l2_gradient(state, a, b)
        state.grad_max = float(np.sqrt(np.max(np.einsum("...c,...c->...", g, g))))
        if state.grad_max <= p.grad_tol or _flat(state.energy_history, p.flat_window, p.energy_flat_tol):
            state.status = Status.CONVERGED
            break
        if state.step >= p.max_steps:
            state.message = "max_steps reached"
            break
        if p.precondition > 0:
            g = smooth_h1(g, state.n.grid, p.precondition)
            g -= np.einsum("...c,...c->...", g, state.n.data)[..., None] * state.n.data
        flow_step(state, p, a, b, grad=g)
        if state.status != Status.RUNNING:
            break
        q = None
        if p.charge_check_every and state.step % p.charge_check_every == 0:
            q = charge_fn(state.n)
            state.charge_history.append((state.s, q))
            if round(q) != sector:
                state.status = Status.CHARGE_JUMP
                state.message = f"rounded charge changed {sector} -> {round(q)}"
        if writer:
            writer.log_step(state, q)
            if p.checkpoint_every and state.step % p.checkpoint_every == 0:
                writer.checkpoint(state)
        if progress:
            progress(state)

    if state.status != Status.CHARGE_JUMP:
        q = charge_fn(state.n)
        if not state.charge_history or state.charge_history[-1][0] != state.s:
            state.charge_history.append((state.s, q))
        if round(q) != sector:
            state.status = Status.CHARGE_JUMP
            state.message = f"rounded charge changed {sector} -> {round(q)}"
    if writer:
        writer.checkpoint(state, "final")
    log.info("relax finished: %s", state.summary())
    return state
