"""Fused explicit-Euler kernels for the cubic reaction (numba).

IEEE-strict (`fastmath=False`) so runs are bit-reproducible.  The generic
numpy path in `pde` remains the reference implementation and the fallback
for tabulated reactions.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(fastmath=False, nogil=True)
def euler_2d_cubic(u, out, dt, ihx2, ihy2, theta, adv, idy):
    nx, ny = u.shape
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            c = u[i, j]
            lap = (u[i - 1, j] - 2.0 * c + u[i + 1, j]) * ihx2 \
                + (u[i, j - 1] - 2.0 * c + u[i, j + 1]) * ihy2
            rhs = lap + c * (c - theta) * (1.0 - c)
            if adv > 0.0:
                rhs += adv * (u[i, j + 1] - c) * idy
            elif adv < 0.0:
                rhs += adv * (c - u[i, j - 1]) * idy
            out[i, j] = c + dt * rhs


@njit(fastmath=False, nogil=True)
def bernstein_scalar(coef, x0, dx, xi):
    """Evaluate a uniform-grid Bernstein piecewise polynomial at one point."""
    ncell = coef.shape[1]
    i = int((xi - x0) / dx)
    if i < 0:
        i = 0
    elif i > ncell - 1:
        i = ncell - 1
    t = (xi - (x0 + i * dx)) / dx
    k = coef.shape[0]
    b = np.empty(k)
    for a in range(k):
        b[a] = coef[a, i]
    for level in range(k - 1):
        for a in range(k - 1 - level):
            b[a] = b[a] * (1.0 - t) + b[a + 1] * t
    return b[0]


@njit(fastmath=False, nogil=True)
def height_increment(w0, B, dq, rho0, decreasing, max_iter):
    """Scalar safeguarded Newton for the surface-height increment.

    Solves sum w0_a expm1(-(dq_a + B_a D)) + rho0 = 0; mirrors the reference
    implementation in `surface.SurfaceLocal.delta` exactly.
    Returns (D, converged_flag).
    """
    n = w0.shape[0]
    D = 0.0
    lo = -np.inf
    hi = np.inf
    prev = np.inf
    for _ in range(max_iter):
        F = rho0
        scale = abs(rho0)
        dF = 0.0
        for a in range(n):
            arg = -(dq[a] + B[a] * D)
            if arg > 700.0:
                arg = 700.0
            elif arg < -700.0:
                arg = -700.0
            r = np.expm1(arg)
            F += w0[a] * r
            scale += abs(w0[a] * r)
            dF -= B[a] * (w0[a] * (1.0 + r))
        absF = abs(F)
        if absF <= 1e-16 * max(scale, 1e-30):
            return D, True
        if absF >= prev and absF <= 1e-12 * max(scale, 1.0):
            return D, True
        prev = absF
        if (F > 0.0) == decreasing:
            if D > lo:
                lo = D
        else:
            if D < hi:
                hi = D
        D_new = D - F / dF
        if D_new == D:
            return D, True
        if not np.isfinite(D_new) or not (lo < D_new < hi):
            if np.isfinite(lo) and np.isfinite(hi):
                D_new = 0.5 * (lo + hi)
            else:
                step = abs(D)
                if step < 1.0:
                    step = 1.0
                if np.isfinite(lo) and not np.isfinite(hi):
                    D_new = D + step
                else:
                    D_new = D - step
            if D_new == D:
                return D, True
        D = D_new
    return D, False


@njit(fastmath=False, nogil=True)
def euler_3d_cubic(u, out, dt, ihx2, ihy2, ihz2, theta, adv, idz):
    nx, ny, nz = u.shape
    for i in range(1, nx - 1):
        for j in range(1, ny - 1):
            for k in range(1, nz - 1):
                c = u[i, j, k]
                lap = (u[i - 1, j, k] - 2.0 * c + u[i + 1, j, k]) * ihx2 \
                    + (u[i, j - 1, k] - 2.0 * c + u[i, j + 1, k]) * ihy2 \
                    + (u[i, j, k - 1] - 2.0 * c + u[i, j, k + 1]) * ihz2
                rhs = lap + c * (c - theta) * (1.0 - c)
                if adv > 0.0:
                    rhs += adv * (u[i, j, k + 1] - c) * idz
                elif adv < 0.0:
                    rhs += adv * (c - u[i, j, k - 1]) * idz
                out[i, j, k] = c + dt * rhs
