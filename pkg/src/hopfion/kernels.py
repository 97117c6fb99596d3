"""Compiled energy/gradient loops used by the relaxation.

These compute exactly the same lattice quantities as the array code in
:mod:`hopfion.energy` (which remains the reference), but in one pass over
the links and plaquettes (geodesic stencil) or nodes (central stencil).
Falls back to the array code when numba is unavailable.
"""
from __future__ import annotations

import numpy as np

from . import energy as _ref

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba ships with the test environment
    njit = None


if njit is not None:

    @njit(cache=True, inline="always")
    def _stencil(idx, m, periodic):
        if periodic:
            return (idx - 1) % m, (idx + 1) % m, idx, -1.0, 1.0, 0.0
        if idx == 0:
            return 0, 1, 2, -3.0, 4.0, -1.0
        if idx == m - 1:
            return m - 1, m - 2, m - 3, 3.0, -4.0, 1.0
        return idx - 1, idx + 1, idx, -1.0, 1.0, 0.0

    @njit(cache=True)
    def _derivatives(n, inv2h, periodic):
        nx, ny, nz, _ = n.shape
        d = np.empty((3, nx, ny, nz, 3))
        for i in range(nx):
            a0, a1, a2, p0, p1, p2 = _stencil(i, nx, periodic)
            for j in range(ny):
                b0, b1, b2, q0, q1, q2 = _stencil(j, ny, periodic)
                for k in range(nz):
                    c0, c1, c2, r0, r1, r2 = _stencil(k, nz, periodic)
                    for c in range(3):
                        d[0, i, j, k, c] = (p0 * n[a0, j, k, c] + p1 * n[a1, j, k, c] + p2 * n[a2, j, k, c]) * inv2h
                        d[1, i, j, k, c] = (q0 * n[i, b0, k, c] + q1 * n[i, b1, k, c] + q2 * n[i, b2, k, c]) * inv2h
                        d[2, i, j, k, c] = (r0 * n[i, j, c0, c] + r1 * n[i, j, c1, c] + r2 * n[i, j, c2, c]) * inv2h
        return d

    @njit(cache=True, inline="always")
    def _cross(u0, u1, u2, v0, v1, v2):
        return u1 * v2 - u2 * v1, u2 * v0 - u0 * v2, u0 * v1 - u1 * v0

    @njit(cache=True)
    def _densities(n, inv2h, periodic, a, b):
        nx, ny, nz, _ = n.shape
        d = _derivatives(n, inv2h, periodic)
        dens2 = np.empty((nx, ny, nz))
        dens4 = np.empty((nx, ny, nz))
        for i in range(nx):
            for j in range(ny):
                for k in range(nz):
                    X0, X1, X2 = d[0, i, j, k, 0], d[0, i, j, k, 1], d[0, i, j, k, 2]
                    Y0, Y1, Y2 = d[1, i, j, k, 0], d[1, i, j, k, 1], d[1, i, j, k, 2]
                    Z0, Z1, Z2 = d[2, i, j, k, 0], d[2, i, j, k, 1], d[2, i, j, k, 2]
                    m0, m1, m2 = n[i, j, k, 0], n[i, j, k, 1], n[i, j, k, 2]
                    s0, s1, s2 = _cross(Y0, Y1, Y2, Z0, Z1, Z2)
                    t0, t1, t2 = _cross(Z0, Z1, Z2, X0, X1, X2)
                    u0, u1, u2 = _cross(X0, X1, X2, Y0, Y1, Y2)
                    B0 = s0 * m0 + s1 * m1 + s2 * m2
                    B1 = t0 * m0 + t1 * m1 + t2 * m2
                    B2 = u0 * m0 + u1 * m1 + u2 * m2
                    dens2[i, j, k] = a * (X0 * X0 + X1 * X1 + X2 * X2 + Y0 * Y0 + Y1 * Y1 + Y2 * Y2
                                          + Z0 * Z0 + Z1 * Z1 + Z2 * Z2)
                    dens4[i, j, k] = 2.0 * b * (B0 * B0 + B1 * B1 + B2 * B2)
        return dens2, dens4

    @njit(cache=True)
    def _gradient(n, inv2h, periodic, a, b, vol):
        nx, ny, nz, _ = n.shape
        d = _derivatives(n, inv2h, periodic)
        g = np.zeros((nx, ny, nz, 3))
        P = np.empty((3, 3))
        for i in range(nx):
            a0, a1, a2, p0, p1, p2 = _stencil(i, nx, periodic)
            for j in range(ny):
                b0, b1, b2, q0, q1, q2 = _stencil(j, ny, periodic)
                for k in range(nz):
                    c0, c1, c2, r0, r1, r2 = _stencil(k, nz, periodic)
                    X0, X1, X2 = d[0, i, j, k, 0], d[0, i, j, k, 1], d[0, i, j, k, 2]
                    Y0, Y1, Y2 = d[1, i, j, k, 0], d[1, i, j, k, 1], d[1, i, j, k, 2]
                    Z0, Z1, Z2 = d[2, i, j, k, 0], d[2, i, j, k, 1], d[2, i, j, k, 2]
                    m0, m1, m2 = n[i, j, k, 0], n[i, j, k, 1], n[i, j, k, 2]
                    s0, s1, s2 = _cross(Y0, Y1, Y2, Z0, Z1, Z2)
                    t0, t1, t2 = _cross(Z0, Z1, Z2, X0, X1, X2)
                    u0, u1, u2 = _cross(X0, X1, X2, Y0, Y1, Y2)
                    B0 = s0 * m0 + s1 * m1 + s2 * m2  # H_yz
                    B1 = t0 * m0 + t1 * m1 + t2 * m2  # H_zx
                    B2 = u0 * m0 + u1 * m1 + u2 * m2  # H_xy
                    f = 4.0 * b
                    g[i, j, k, 0] += f * (B0 * s0 + B1 * t0 + B2 * u0)
                    g[i, j, k, 1] += f * (B0 * s1 + B1 * t1 + B2 * u1)
                    g[i, j, k, 2] += f * (B0 * s2 + B1 * t2 + B2 * u2)
                    xn0, xn1, xn2 = _cross(X0, X1, X2, m0, m1, m2)
                    yn0, yn1, yn2 = _cross(Y0, Y1, Y2, m0, m1, m2)
                    zn0, zn1, zn2 = _cross(Z0, Z1, Z2, m0, m1, m2)
                    # P_i = 2a d_i + 4b sum_k H_ik (d_k x n)
                    P[0, 0] = 2.0 * a * X0 + f * (B2 * yn0 - B1 * zn0)
                    P[0, 1] = 2.0 * a * X1 + f * (B2 * yn1 - B1 * zn1)
                    P[0, 2] = 2.0 * a * X2 + f * (B2 * yn2 - B1 * zn2)
                    P[1, 0] = 2.0 * a * Y0 + f * (-B2 * xn0 + B0 * zn0)
                    P[1, 1] = 2.0 * a * Y1 + f * (-B2 * xn1 + B0 * zn1)
                    P[1, 2] = 2.0 * a * Y2 + f * (-B2 * xn2 + B0 * zn2)
                    P[2, 0] = 2.0 * a * Z0 + f * (B1 * xn0 - B0 * yn0)
                    P[2, 1] = 2.0 * a * Z1 + f * (B1 * xn1 - B0 * yn1)
                    P[2, 2] = 2.0 * a * Z2 + f * (B1 * xn2 - B0 * yn2)
                    for c in range(3):
                        v = P[0, c] * inv2h
                        g[a0, j, k, c] += p0 * v
                        g[a1, j, k, c] += p1 * v
                        g[a2, j, k, c] += p2 * v
                        v = P[1, c] * inv2h
                        g[i, b0, k, c] += q0 * v
                        g[i, b1, k, c] += q1 * v
                        g[i, b2, k, c] += q2 * v
                        v = P[2, c] * inv2h
                        g[i, j, c0, c] += r0 * v
                        g[i, j, c1, c] += r1 * v
                        g[i, j, c2, c] += r2 * v
        for i in range(nx):
            for j in range(ny):
                for k in range(nz):
                    edge = (not periodic) and (i == 0 or j == 0 or k == 0
                                               or i == nx - 1 or j == ny - 1 or k == nz - 1)
                    if edge:
                        g[i, j, k, 0] = 0.0
                        g[i, j, k, 1] = 0.0
                        g[i, j, k, 2] = 0.0
                        continue
                    g0, g1, g2 = g[i, j, k, 0] * vol, g[i, j, k, 1] * vol, g[i, j, k, 2] * vol
                    m0, m1, m2 = n[i, j, k, 0], n[i, j, k, 1], n[i, j, k, 2]
                    dot = g0 * m0 + g1 * m1 + g2 * m2
                    g[i, j, k, 0] = g0 - dot * m0
                    g[i, j, k, 1] = g1 - dot * m1
                    g[i, j, k, 2] = g2 - dot * m2
        return g


    @njit(cache=True, inline="always")
    def _ld(n, p, c):
        return n[p[0], p[1], p[2], c]

    @njit(cache=True, inline="always")
    def _add(g, p, f, v0, v1, v2):
        g[p[0], p[1], p[2], 0] += f * v0
        g[p[0], p[1], p[2], 1] += f * v1
        g[p[0], p[1], p[2], 2] += f * v2

    @njit(cache=True, inline="always")
    def _triangle(n, g, f, pa, pb, pc, want_grad):
        """Solid angle of (n_a, n_b, n_c); if want_grad adds f * dOmega/dn to g."""
        a0, a1, a2 = _ld(n, pa, 0), _ld(n, pa, 1), _ld(n, pa, 2)
        b0, b1, b2 = _ld(n, pb, 0), _ld(n, pb, 1), _ld(n, pb, 2)
        c0, c1, c2 = _ld(n, pc, 0), _ld(n, pc, 1), _ld(n, pc, 2)
        x0, x1, x2 = _cross(b0, b1, b2, c0, c1, c2)
        num = a0 * x0 + a1 * x1 + a2 * x2
        ab = a0 * b0 + a1 * b1 + a2 * b2
        bc = b0 * c0 + b1 * c1 + b2 * c2
        ca = c0 * a0 + c1 * a1 + c2 * a2
        den = 1.0 + ab + bc + ca
        om = 2.0 * np.arctan2(num, den)
        if want_grad:
            r2 = num * num + den * den
            fn = 2.0 * den / r2 * f
            fd = -2.0 * num / r2 * f
            _add(g, pa, fn, x0, x1, x2)
            _add(g, pa, fd, b0 + c0, b1 + c1, b2 + c2)
            y0, y1, y2 = _cross(c0, c1, c2, a0, a1, a2)
            _add(g, pb, fn, y0, y1, y2)
            _add(g, pb, fd, a0 + c0, a1 + c1, a2 + c2)
            z0, z1, z2 = _cross(a0, a1, a2, b0, b1, b2)
            _add(g, pc, fn, z0, z1, z2)
            _add(g, pc, fd, a0 + b0, a1 + b1, a2 + b2)
        return om

    @njit(cache=True, inline="always")
    def _shift(x, y, z, ax, nx, ny, nz):
        if ax == 0:
            return (x + 1) % nx, y, z
        if ax == 1:
            return x, (y + 1) % ny, z
        return x, y, (z + 1) % nz

    @njit(cache=True)
    def _geodesic(n, h, periodic, a, b, want_grad):
        """Geodesic-stencil (e2, e4) and, optionally, the tangential gradient."""
        nx, ny, nz, _ = n.shape
        g = np.zeros((nx, ny, nz, 3)) if want_grad else np.zeros((1, 1, 1, 3))
        e2 = 0.0
        e4 = 0.0
        f4 = 4.0 * b / h
        for x in range(nx):
            ex = x == nx - 1 and not periodic
            for y in range(ny):
                ey = y == ny - 1 and not periodic
                for z in range(nz):
                    ez = z == nz - 1 and not periodic
                    c00 = (x, y, z)
                    m0, m1, m2 = n[x, y, z, 0], n[x, y, z, 1], n[x, y, z, 2]
                    for ax in range(3):
                        if (ax == 0 and ex) or (ax == 1 and ey) or (ax == 2 and ez):
                            continue
                        q = _shift(x, y, z, ax, nx, ny, nz)
                        q0, q1, q2 = _ld(n, q, 0), _ld(n, q, 1), _ld(n, q, 2)
                        w0, w1, w2 = _cross(m0, m1, m2, q0, q1, q2)
                        sn = np.sqrt(w0 * w0 + w1 * w1 + w2 * w2)
                        th = np.arctan2(sn, m0 * q0 + m1 * q1 + m2 * q2)
                        e2 += a * h * th * th
                        if want_grad:
                            f = -2.0 * a * h * (th / sn if sn > 1e-12 else 1.0)
                            _add(g, c00, f, q0, q1, q2)
                            _add(g, q, f, m0, m1, m2)
                    for pl in range(3):
                        i = 0 if pl < 2 else 1
                        k = 1 if pl == 0 else 2
                        if (i == 0 and ex) or (i == 1 and ey) or (k == 1 and ey) or (k == 2 and ez):
                            continue
                        c10 = _shift(x, y, z, i, nx, ny, nz)
                        c01 = _shift(x, y, z, k, nx, ny, nz)
                        c11 = _shift(c10[0], c10[1], c10[2], k, nx, ny, nz)
                        om = _triangle(n, g, 0.0, c00, c10, c11, False) + _triangle(n, g, 0.0, c00, c11, c01, False)
                        e4 += om * om
                        if want_grad:
                            _triangle(n, g, f4 * om, c00, c10, c11, True)
                            _triangle(n, g, f4 * om, c00, c11, c01, True)
        e4 *= 2.0 * b / h
        if want_grad:
            for x in range(nx):
                for y in range(ny):
                    for z in range(nz):
                        edge = (not periodic) and (x == 0 or y == 0 or z == 0
                                                   or x == nx - 1 or y == ny - 1 or z == nz - 1)
                        if edge:
                            g[x, y, z, 0] = 0.0
                            g[x, y, z, 1] = 0.0
                            g[x, y, z, 2] = 0.0
                            continue
                        m0, m1, m2 = n[x, y, z, 0], n[x, y, z, 1], n[x, y, z, 2]
                        dot = g[x, y, z, 0] * m0 + g[x, y, z, 1] * m1 + g[x, y, z, 2] * m2
                        g[x, y, z, 0] -= dot * m0
                        g[x, y, z, 1] -= dot * m1
                        g[x, y, z, 2] -= dot * m2
        return e2, e4, g


def energy(n: np.ndarray, grid, a: float = 1.0, b: float = 1.0, stencil: str = _ref.DEFAULT_STENCIL):
    """(e2, e4) of a raw director array."""
    if njit is None:
        return _ref.energy_arrays(n, grid, a, b, stencil)
    n = np.ascontiguousarray(n, dtype=float)
    if stencil == "geodesic":
        e2, e4, _ = _geodesic(n, grid.h, grid.periodic, a, b, False)
        return e2, e4
    if stencil != "central":
        raise ValueError(f"unknown stencil {stencil!r}")
    dens2, dens4 = _densities(n, 0.5 / grid.h, grid.periodic, a, b)
    vol = grid.cell_volume
    return vol * float(np.sum(dens2)), vol * float(np.sum(dens4))


def gradient(n: np.ndarray, grid, a: float = 1.0, b: float = 1.0, stencil: str = _ref.DEFAULT_STENCIL) -> np.ndarray:
    """Tangential lattice-energy gradient of a raw director array."""
    if njit is None:
        return _ref.gradient_array(n, grid, a, b, stencil=stencil)
    n = np.ascontiguousarray(n, dtype=float)
    if stencil == "geodesic":
        return _geodesic(n, grid.h, grid.periodic, a, b, True)[2]
    if stencil != "central":
        raise ValueError(f"unknown stencil {stencil!r}")
    return _gradient(n, 0.5 / grid.h, grid.periodic, a, b, grid.cell_volume)
