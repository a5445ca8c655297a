"""Implicit smoothing surfaces over a plane arrangement.

Both surfaces used by the sub/supersolution machinery are level sets of a
sum of exponentials of affine forms

    F(t, x, y) = sum_a exp(-(A_a . x + B_a y + C_a t + D_a)) = 1,

solved for y as a graph y = height(t, x):

  * the upper smoothing surface uses the raw plane coordinates
    (B_a = sin(theta_a) > 0, F strictly decreasing in y);
  * the per-facet mirrored surface uses the rotated coordinates
    q_ij = -gamma q_i + lambda q_j (B_a < 0, F strictly increasing in y).

At the root every exponent is >= 0 (the weights sum to 1), so a bracket with
guaranteed signs exists on both sides and safeguarded Newton is globally
convergent.  All first/second derivatives of the height come out of one
weighted-sum pattern; the flatness measure is 1 - sum(w^2) via the identity
sum(w) = 1, and the normal-speed excess is evaluated through a pair-sum
formula that stays accurate when the weights are strongly unbalanced.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import FrontArrangement, RotatedFamily


class SurfaceError(RuntimeError):
    """Raised when the height solve fails; indicates a bug or bad input."""


@dataclass(frozen=True)
class ImplicitSurface:
    """One exponential-sum surface: plane family plus solver parameters."""

    kind: str                  # "upper" (convex graph) or "facet" (mirrored)
    A: np.ndarray              # (n, N-1) x-coefficients
    B: np.ndarray              # (n,) y-coefficients, one sign per kind
    C: np.ndarray              # (n,) t-coefficients
    D: np.ndarray              # (n,) constant offsets (scaled shifts)
    c_f: float
    newton_tol: float = 1e-13
    max_iter: int = 60
    # precomputed n x n matrix for the stable speed-excess pair sum
    excess_matrix: np.ndarray = field(default=None, repr=False)
    speed_scale: float = field(default=1.0, repr=False)  # +1 upper, -1 facet


def phi_surface(arr: FrontArrangement, tau_scale: float = 1.0,
                newton_tol: float = 1e-13, max_iter: int = 60) -> ImplicitSurface:
    """Upper smoothing surface of the arrangement's enclosed region."""
    e = arr.e
    A = e[:, :-1].copy()
    B = e[:, -1].copy()
    C = np.full(arr.n, -arr.c_f)
    D = tau_scale * arr.tau
    # excess pair matrix: 1 - e_a . e_b  (diagonal vanishes)
    M = 1.0 - e @ e.T
    return ImplicitSurface(kind="upper", A=A, B=B, C=C, D=D, c_f=arr.c_f,
                           newton_tol=newton_tol, max_iter=max_iter,
                           excess_matrix=M, speed_scale=1.0)


def psi_surface(arr: FrontArrangement, fam: RotatedFamily, tau_scale: float = 1.0,
                newton_tol: float = 1e-13, max_iter: int = 60) -> ImplicitSurface:
    """Mirrored surface attached to facet fam.i, built from rotated planes."""
    e = arr.e
    i = fam.i
    g = fam.gamma[:, None]
    l = fam.lam[:, None]
    normals = -g * e[i][None, :] + l * e  # (n, N) full-space normals of q_ij
    A = normals[:, :-1].copy()
    B = normals[:, -1].copy()
    if np.any(B >= 0.0):
        raise SurfaceError("rotated family violates the downward-normal condition")
    C = arr.c_f * (fam.gamma - fam.lam)
    D = tau_scale * (-fam.gamma * arr.tau[i] + fam.lam * arr.tau)
    # den^2 - num^2 = sum w_a w_b [ n_a.n_b - (gamma_a-lam_a)(gamma_b-lam_b) ]
    M = normals @ normals.T - np.outer(fam.gamma - fam.lam, fam.gamma - fam.lam)
    return ImplicitSurface(kind="facet", A=A, B=B, C=C, D=D, c_f=arr.c_f,
                           newton_tol=newton_tol, max_iter=max_iter,
                           excess_matrix=M, speed_scale=-1.0)


def _points(t, x) -> tuple[np.ndarray, np.ndarray]:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), (x.shape[0],))
    return t, x


def _exponents(surf: ImplicitSurface, t, x, y) -> np.ndarray:
    """q_a(t, x, y) for all planes, shape (n, m)."""
    return surf.A @ x.T + np.outer(surf.B, y) + np.outer(surf.C, t) + surf.D[:, None]


def solve_height(surf: ImplicitSurface, t, x, return_weights: bool = False):
    """Vectorized safeguarded Newton for the unique graph height.

    The anchor is the extreme plane height (max for the upper kind, min for
    the facet kind): there every exponent is nonnegative and F >= 1; one step
    of ln(n)/min|B| in the direction of decreasing F gives F <= 1.
    """
    t, x = _points(t, x)
    m = x.shape[0]
    n = surf.B.size
    # plane heights: y solving q_a = 0
    plane_h = -(surf.A @ x.T + np.outer(surf.C, t) + surf.D[:, None]) / surf.B[:, None]
    if surf.kind == "upper":
        anchor = plane_h.max(axis=0)
        step = np.log(max(n, 2)) / np.min(np.abs(surf.B))
        lo, hi = anchor, anchor + step   # F(lo) >= 1 >= F(hi), F decreasing
    else:
        anchor = plane_h.min(axis=0)
        step = np.log(max(n, 2)) / np.min(np.abs(surf.B))
        lo, hi = anchor - step, anchor   # F(lo) <= 1 <= F(hi), F increasing
    y = 0.5 * (lo + hi)
    converged = np.zeros(m, dtype=bool)
    for _ in range(surf.max_iter):
        q = _exponents(surf, t, x, y)
        w = np.exp(-np.minimum(q, 700.0))
        F = w.sum(axis=0) - 1.0
        dF = -(surf.B[:, None] * w).sum(axis=0)
        converged = np.abs(F) <= surf.newton_tol
        if converged.all():
            break
        # maintain the bracket: for the upper kind F >= 0 on the low side
        pos = F > 0.0
        if surf.kind == "upper":
            lo = np.where(pos, np.maximum(lo, y), lo)
            hi = np.where(~pos, np.minimum(hi, y), hi)
        else:
            hi = np.where(pos, np.minimum(hi, y), hi)
            lo = np.where(~pos, np.maximum(lo, y), lo)
        with np.errstate(divide="ignore", invalid="ignore"):
            y_new = y - F / dF
        bad = ~np.isfinite(y_new) | (y_new <= lo) | (y_new >= hi)
        y = np.where(bad & ~converged, 0.5 * (lo + hi), np.where(converged, y, y_new))
    else:
        if not converged.all():
            raise SurfaceError("surface solve failed")
    if return_weights:
        q = _exponents(surf, t, x, y)
        return y, np.exp(-q)
    return y


@dataclass(frozen=True)
class SurfaceEval:
    """Height plus analytic derivatives and flatness data at (t, x)."""

    y: np.ndarray              # (m,)
    weights: np.ndarray        # (n, m), sums to 1 per point
    dt: np.ndarray             # (m,)
    grad: np.ndarray           # (m, N-1)
    hess: np.ndarray           # (m, N-1, N-1)
    grad_dt: np.ndarray        # (m, N-1)
    flatness: np.ndarray       # (m,)   sum_{a != b} w_a w_b
    speed_excess: np.ndarray   # (m,)   |normal speed - c_f| with sign folded
    flatness_dt: np.ndarray    # (m,)
    flatness_lap: np.ndarray   # (m,)


def evaluate(surf: ImplicitSurface, t, x) -> SurfaceEval:
    """Solve the height and assemble every derived quantity in one pass."""
    t, x = _points(t, x)
    y, w = solve_height(surf, t, x, return_weights=True)
    return _derived(surf, w, y)


def _derived(surf: ImplicitSurface, w: np.ndarray, y: np.ndarray) -> SurfaceEval:
    A, B, C = surf.A, surf.B, surf.C
    S = B @ w                                  # (m,)
    V = A.T @ w                                # (N-1, m)
    T = C @ w
    dt = -T / S
    grad = (-V / S).T                          # (m, N-1)
    # b_a = A_a + B_a grad, the surface-tangential part of each plane normal
    b = A[None, :, :] + B[None, :, None] * grad[:, None, :]   # (m, n, d)
    c = C[None, :] + B[None, :] * dt[:, None]                  # (m, n)
    wT = w.T                                                   # (m, n)
    hess = np.einsum("pa,pak,pal->pkl", wT, b, b) / S[:, None, None]
    grad_dt = np.einsum("pa,pak,pa->pk", wT, b, c) / S[:, None]

    n = B.size
    offdiag = 1.0 - np.eye(n)
    # flatness as the direct off-diagonal pair sum: exact to relative precision
    # even when one weight dominates (the 1 - sum w^2 identity floors at the
    # Newton-residual scale ~1e-13 and is useless for far-field ratios)
    flat = np.einsum("ap,ab,bp->p", w, offdiag, w)
    # stable speed excess: den^2 - G^2 equals the pair sum  sum w_a w_b M_ab
    P = np.einsum("ap,ab,bp->p", w, surf.excess_matrix, w)
    den = np.sqrt(S * S + np.sum(V * V, axis=0))
    G = surf.speed_scale * (-T) / surf.c_f     # 1 for the upper kind
    excess = surf.c_f * P / (den * (den + G))

    # flatness derivatives (needed for calibration ratios)
    # d/dt sum_{a!=b} w_a w_b = -2 sum_{a!=b} w_a c_a w_b
    other = wT @ offdiag                       # (m, n): sum_{b != a} w_b
    flat_dt = -2.0 * np.sum(wT * c * other, axis=1)
    # laplacian: sum_{a!=b} w_a w_b [ |b_a + b_b|^2 - (B_a + B_b) tr(hess) ]
    trH = np.einsum("pkk->p", hess)
    bb = np.einsum("pak,pbk->pab", b, b)       # (m, n, n)
    norm2 = np.einsum("pak,pak->pa", b, b)     # (m, n)
    pair = norm2[:, :, None] + norm2[:, None, :] + 2.0 * bb \
        - (B[None, :, None] + B[None, None, :]) * trH[:, None, None]
    W2 = wT[:, :, None] * wT[:, None, :] * offdiag[None, :, :]
    flat_lap = np.einsum("pab,pab->p", W2, pair)

    return SurfaceEval(y=y, weights=w, dt=dt, grad=grad, hess=hess, grad_dt=grad_dt,
                       flatness=flat, speed_excess=excess,
                       flatness_dt=flat_dt, flatness_lap=flat_lap)


def flatness(surf: ImplicitSurface, t, x) -> np.ndarray:
    """Off-diagonal pair-sum flatness measure on the surface."""
    t, x = _points(t, x)
    _, w = solve_height(surf, t, x, return_weights=True)
    offdiag = 1.0 - np.eye(surf.B.size)
    return np.einsum("ap,ab,bp->p", w, offdiag, w)


class SurfaceLocal:
    """Increment-stable view of the surface around one base point.

    Residual probes difference the evaluators at stencil offsets ~1e-3 while
    the absolute coordinates can be as large as 1/alpha.  Solving each stencil
    point from scratch would bury the differences in coordinate roundoff, so
    the base solve is done once and every offset is solved as a height
    *increment* from exactly-representable exponent increments.
    """

    def __init__(self, surf: ImplicitSurface, t0: float, x0: np.ndarray):
        self.surf = surf
        self.t0 = float(t0)
        self.x0 = np.asarray(x0, dtype=float).reshape(1, -1)
        y0, w0 = solve_height(surf, self.t0, self.x0, return_weights=True)
        self.y0 = float(y0[0])
        self.w0 = w0[:, 0]
        # fixed base residual: the increment equation below absorbs it so the
        # solved increments inherit no absolute-scale Newton noise
        self.rho0 = self.w0.sum() - 1.0
        self._offdiag = 1.0 - np.eye(surf.B.size)

    def delta(self, dt: float, dx: np.ndarray) -> tuple[float, np.ndarray]:
        """(height increment, weights) at (t0 + dt, x0 + dx).

        With r_a = expm1(-(dq_a + B_a D)) the root condition sum w_a = 1 reads
        sum w0_a r_a + rho0 = 0: every floating-point quantity is then of the
        size of the increment itself, so nearby offsets difference cleanly.
        """
        surf = self.surf
        dq = surf.A @ np.asarray(dx, dtype=float).ravel() + surf.C * dt
        D, ok = _kernels.height_increment(self.w0, surf.B, dq, self.rho0,
                                          surf.kind == "upper", surf.max_iter)
        if not ok:
            raise SurfaceError("surface solve failed")
        r = np.expm1(-np.clip(dq + surf.B * D, -700.0, 700.0))
        return D, self.w0 * (1.0 + r)

    def eval(self, dt: float, dx: np.ndarray) -> tuple[float, np.ndarray, float, float]:
        """(height increment, weights, |grad|^2, flatness) at the offset point."""
        D, ww = self.delta(dt, dx)
        S = self.surf.B @ ww
        V = self.surf.A.T @ ww
        grad2 = float(V @ V) / (S * S)
        flat = float(ww @ (self._offdiag @ ww))
        return D, ww, grad2, flat
