"""Preimage lines of the director field and their linking numbers.

The lines of force ``dx/ds = B(x)`` are the preimages ``n^{-1}(v)`` because B
is tangent to the level curves of n.  A preimage is seeded at the node
closest to ``v``, Newton-polished transversally onto ``n = v`` and traced
with RK4 on the unit tangent ``B / |B|``.  The Hopf charge is the linking
number of two such closed curves.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import CurvesTooClose, DegenerateSeed, NoPreimage, OpenCurve, OutOfDomain
from .lattice import DirectorField, Grid, sample_array

# generic values: far from both poles, so that their preimages are regular
# for every twisted ansatz (the south-pole preimage is a double circle when k >= 2)
DEFAULT_VALUES = (
    (np.sin(2.5), 0.0, np.cos(2.5)),
    (0.0, np.sin(2.0), np.cos(2.0)),
)
DRIFT_TOL = 0.02
VACUUM_EXCLUSION = 0.05
SEED_TOL = 0.1


@dataclass
class TraceParams:
    """Tracer controls; lengths default to multiples of the lattice spacing."""

    step: float | None = None  # 0.25 h
    max_steps: int = 20000
    closure_tol: float | None = None  # 0.5 h
    interp: str = "cubic"  # sampling of n and B: "linear" or "cubic"

    def resolved(self, h: float) -> "TraceParams":
        step = self.step if self.step is not None else 0.25 * h
        tol = self.closure_tol if self.closure_tol is not None else 0.5 * h
        if not (step > 0 and tol > 0 and self.max_steps > 10):
            raise ValueError("step and closure_tol must be positive, max_steps > 10")
        if self.interp not in ("linear", "cubic"):
            raise ValueError(f"unknown interpolation {self.interp!r}")
        return TraceParams(step, self.max_steps, tol, self.interp)


@dataclass
class FieldLine:
    points: np.ndarray
    closed: bool
    n_value: np.ndarray
    n_samples: np.ndarray = field(repr=False)
    s: np.ndarray = field(repr=False)
    drift: float = 0.0
    h: float = 1.0
    reason: str = ""

    @property
    def length(self) -> float:
        seg = np.diff(self.points, axis=0)
        total = float(np.sum(np.linalg.norm(seg, axis=1)))
        if self.closed:
            total += float(np.linalg.norm(self.points[0] - self.points[-1]))
        return total

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "x", "y", "z", "n1", "n2", "n3"])
        for s, p, v in zip(self.s, self.points, self.n_samples):
            w.writerow([f"{s:.10g}"] + [f"{c:.10g}" for c in p] + [f"{c:.10g}" for c in v])
        return buf.getvalue()


class Sampler:
    """Interpolates node data (n or B) at arbitrary points of the box."""

    def __init__(self, grid: Grid, data: np.ndarray, interp: str = "cubic"):
        self.grid, self.interp = grid, interp
        self.data = data
        if interp == "cubic":
            mode = "grid-wrap" if grid.periodic else "mirror"
            self._mode = mode
            self._coef = [ndimage.spline_filter(data[..., c], order=3, mode=mode) for c in range(data.shape[-1])]

    def inside(self, p) -> bool:
        if self.grid.periodic:
            return True
        u = (np.asarray(p) - np.asarray(self.grid.origin)) / self.grid.h
        return bool(np.all(u >= 0) and np.all(u <= np.asarray(self.grid.shape) - 1))

    def __call__(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.interp == "linear":
            return sample_array(self.data, self.grid, pts)
        flat = pts.reshape(-1, 3)
        u = (flat - np.asarray(self.grid.origin)) / self.grid.h
        if not self.grid.periodic:
            if np.any(u < -1e-9) or np.any(u > np.asarray(self.grid.shape) - 1 + 1e-9):
                raise OutOfDomain("sample point outside the grid box")
        out = np.stack([ndimage.map_coordinates(c, u.T, order=3, mode=self._mode, prefilter=False)
                        for c in self._coef], axis=-1)
        return out.reshape(pts.shape[:-1] + (self.data.shape[-1],))


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _b_field(H):
    return H.B.data if hasattr(H, "B") else np.asarray(H)


def polish_seed(n_sample: Sampler, x, value, h: float, iters: int = 30):
    """Gauss-Newton onto n(x) = value, moving only across the preimage line.

    The Jacobian dn/dx has rank two with the line tangent in its null space,
    so the minimum-norm pseudo-inverse step is transverse to the line.
    """
    x = np.asarray(x, dtype=float).copy()
    value = _unit(np.asarray(value, dtype=float))
    eps = 0.05 * h
    offs = np.eye(3) * eps
    for _ in range(iters):
        try:
            r = _unit(n_sample(x)) - value
            J = (_unit(n_sample(x + offs)) - _unit(n_sample(x - offs))).T / (2 * eps)
        except OutOfDomain:
            break
        dx = -np.linalg.pinv(J, rcond=1e-3) @ r
        norm = np.linalg.norm(dx)
        if norm > h:
            dx *= h / norm
        if not n_sample.inside(x + dx):
            break
        x += dx
        if norm < 1e-10 * h:
            break
    return x


def trace_field_line(H, seed, params: TraceParams | None = None, n: DirectorField | None = None,
                     n_value=None) -> FieldLine:
    """Integrate dx/ds = B / |B| from ``seed`` until the curve closes or leaves the box.

    ``H`` is an :class:`~hopfion.topology.HField` (its ``n`` is used for the
    drift record unless ``n`` is passed).  The drift is the largest distance
    between the sampled director and ``n_value`` (default: n at the seed).
    """
    grid = H.grid
    n = n if n is not None else H.n
    if n is None:
        raise ValueError("a director field is needed to record the drift")
    p = params.resolved(grid.h) if params else TraceParams().resolved(grid.h)
    B = _b_field(H)
    b_sample = Sampler(grid, B, p.interp)
    n_sample = Sampler(grid, n.data, p.interp)
    x0 = np.asarray(seed, dtype=float)
    if not n_sample.inside(x0):
        raise OutOfDomain("seed outside the grid box")
    b0 = np.linalg.norm(b_sample(x0))
    bmax = float(np.sqrt(np.max(np.einsum("...c,...c->...", B, B))))
    if not b0 > max(1e-8, 1e-6 * bmax):
        raise DegenerateSeed(f"|B| = {b0:.3g} at the seed")
    value = _unit(np.asarray(n_value, dtype=float)) if n_value is not None else _unit(n_sample(x0))

    def tangent(x):
        v = b_sample(x)
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            raise DegenerateSeed("line ran into a zero of B")
        return v / nv

    ds, tol = p.step, p.closure_tol
    pts = [x0.copy()]
    x = x0.copy()
    closed, reason = False, "max_steps"
    travelled = 0.0
    try:
        for step in range(1, p.max_steps + 1):
            k1 = tangent(x)
            k2 = tangent(x + 0.5 * ds * k1)
            k3 = tangent(x + 0.5 * ds * k2)
            k4 = tangent(x + ds * k3)
            xn = x + ds / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not n_sample.inside(xn):
                reason = "left_box"
                break
            travelled += float(np.linalg.norm(xn - x))
            if step >= 10 and travelled > 4 * tol and _segment_distance(x0, x, xn) < tol:
                closed, reason = True, "closed"
                break
            pts.append(xn)
            x = xn
    except OutOfDomain:
        reason = "left_box"
    except DegenerateSeed:
        reason = "zero_of_B"
    P = np.asarray(pts)
    N = _unit(n_sample(P))
    seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    drift = float(np.max(np.linalg.norm(N - value, axis=1)))
    return FieldLine(P, closed, value, N, s, drift, grid.h, reason)


def _segment_distance(p, a, b) -> float:
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / max(np.dot(ab, ab), 1e-300), 0.0, 1.0)
    return float(np.linalg.norm(a + t * ab - p))


def find_seed(n: DirectorField, value, interp: str = "cubic"):
    """Polished point on the preimage of ``value``.

    Starts from the interior node whose director is closest to ``value`` and
    Newton-polishes it; NoPreimage if the polished point is still more than
    0.1 away from ``value``.  (Testing the raw node instead would reject
    regular values whose preimage runs between node planes.)
    """
    value = _unit(np.asarray(value, dtype=float))
    dist = np.linalg.norm(n.data - value, axis=-1)
    if not n.grid.periodic:
        dist = np.where(n.grid.boundary_mask(), np.inf, dist)
    idx = np.unravel_index(np.argmin(dist), dist.shape)
    x0 = np.asarray(n.grid.origin) + n.grid.h * np.asarray(idx, dtype=float)
    sampler = Sampler(n.grid, n.data, interp)
    x = polish_seed(sampler, x0, value, n.grid.h)
    miss = float(np.linalg.norm(_unit(sampler(x)) - value))
    if not miss <= SEED_TOL:
        raise NoPreimage(f"no point within {SEED_TOL} of {tuple(np.round(value, 4))}")
    return x


def trace_preimage(n: DirectorField, value, H=None, params: TraceParams | None = None) -> FieldLine:
    from .topology import CHARGE_ORDER, compute_H

    value = _unit(np.asarray(value, dtype=float))
    H = H if H is not None else compute_H(n, CHARGE_ORDER)
    p = params.resolved(n.grid.h) if params else TraceParams().resolved(n.grid.h)
    seed = find_seed(n, value, p.interp)
    return trace_field_line(H, seed, p, n=n, n_value=value)


# -- linking ----------------------------------------------------------------

class Linking(NamedTuple):
    number: int
    raw: float


def _closed_polyline(line) -> np.ndarray:
    if isinstance(line, FieldLine):
        if not line.closed:
            raise OpenCurve("linking needs closed curves")
        return np.asarray(line.points)
    return np.asarray(line, dtype=float)


def gauss_linking(a: np.ndarray, b: np.ndarray, chunk: int = 256) -> float:
    """Gauss linking integral of two closed polygons (vertex arrays, implicitly closed).

    Each segment pair contributes its exact signed solid angle / 4 pi
    (the quadrilateral formula of Klenin and Langowski).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a1, a2 = a, np.roll(a, -1, axis=0)
    b1, b2 = b, np.roll(b, -1, axis=0)
    total = 0.0
    for s in range(0, len(a1), chunk):
        p1 = a1[s:s + chunk, None, :]
        p2 = a2[s:s + chunk, None, :]
        p3, p4 = b1[None], b2[None]
        r13, r14, r23, r24 = p3 - p1, p4 - p1, p3 - p2, p4 - p2
        faces = [np.cross(r13, r14), np.cross(r14, r24), np.cross(r24, r23), np.cross(r23, r13)]
        norms = [np.linalg.norm(f, axis=-1, keepdims=True) for f in faces]
        with np.errstate(invalid="ignore", divide="ignore"):
            u = [np.where(nm > 0, f / nm, 0.0) for f, nm in zip(faces, norms)]
        om = sum(np.arcsin(np.clip(np.einsum("...c,...c->...", u[i], u[(i + 1) % 4]), -1, 1)) for i in range(4))
        sign = np.sign(np.einsum("...c,...c->...", np.cross(p4 - p3, p2 - p1), r13))
        total += float(np.sum(om * sign))
    return total / (4 * np.pi)


def _min_distance(a: np.ndarray, b: np.ndarray) -> float:
    best = np.inf
    for s in range(0, len(a), 512):
        d = np.linalg.norm(a[s:s + 512, None, :] - b[None], axis=-1)
        best = min(best, float(d.min()))
    return best


def linking_number(a, b, min_separation: float | None = None) -> Linking:
    """Linking number of two closed curves (FieldLines or vertex arrays).

    Lines closer than ``min_separation`` raise CurvesTooClose, since the
    polygons may not resolve the gap.  The default for FieldLines is h / 2,
    two default tracer steps: the polygons follow the interpolated field far
    more finely than h, and preimages of nearby values on coarse grids are
    routinely less than 2 h apart.
    """
    pa, pb = _closed_polyline(a), _closed_polyline(b)
    if min_separation is None:
        hs = [ln.h for ln in (a, b) if isinstance(ln, FieldLine)]
        min_separation = 0.5 * max(hs) if hs else 0.0
    if min_separation > 0 and _min_distance(pa, pb) <= min_separation:
        raise CurvesTooClose(f"curves come within {min_separation:.3g}")
    raw = gauss_linking(pa, pb)
    return Linking(int(round(raw)), raw)


def _check_value(n: DirectorField, v):
    v = _unit(np.asarray(v, dtype=float))
    if np.linalg.norm(v - np.asarray(n.vacuum)) < VACUUM_EXCLUSION:
        raise NoPreimage("value too close to the vacuum; its preimage reaches the boundary")
    return v


def hopf_charge_linking(n: DirectorField, value_a=DEFAULT_VALUES[0], value_b=DEFAULT_VALUES[1], H=None,
                        params: TraceParams | None = None, return_lines: bool = False):
    """Hopf charge as the linking number of the preimages of two values."""
    from .topology import CHARGE_ORDER, compute_H

    va, vb = _check_value(n, value_a), _check_value(n, value_b)
    if np.allclose(va, vb):
        raise ValueError("the two values must differ")
    H = H if H is not None else compute_H(n, CHARGE_ORDER)
    la = trace_preimage(n, va, H, params)
    lb = trace_preimage(n, vb, H, params)
    q = linking_number(la, lb).number
    return (q, [la, lb]) if return_lines else q
