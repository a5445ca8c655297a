"""Moving hyperplane arrangements, their polytope, ridges, and rotations.

An arrangement is a list of unit directions written in the canonical frame
where the common ascent axis is the last coordinate: each front direction is
e_i = (nu_i cos(theta_i), sin(theta_i)) with nu_i a unit vector one dimension
down and theta_i in (0, pi/2].  The moving plane coordinate of front i is

    q_i(t, x, y) = x . nu_i cos(theta_i) + y sin(theta_i) - c_f t + s tau_i

with a caller-chosen scale s on the offsets (s = 1 for the raw arrangement,
s = alpha for the smoothed-surface variant).  The enclosed region is
{min_i q_i >= 0}; pairwise intersections of its facets are the ridges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class GeometryError(ValueError):
    """Raised for invalid arrangements or degenerate queries."""


@dataclass(frozen=True)
class FrontArrangement:
    """n moving planes in R^N sharing the wave speed c_f."""

    N: int
    nu: np.ndarray            # (n, N-1) unit vectors
    theta: np.ndarray         # (n,) angles in (0, pi/2]
    tau: np.ndarray           # (n,) offsets
    c_f: float

    def __post_init__(self):
        nu = np.atleast_2d(np.asarray(self.nu, dtype=float))
        theta = np.asarray(self.theta, dtype=float)
        tau = np.asarray(self.tau, dtype=float)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "tau", tau)
        n = theta.size
        if self.N < 2:
            raise GeometryError("need space dimension N >= 2")
        if nu.shape != (n, self.N - 1) or tau.shape != (n,):
            raise GeometryError("inconsistent arrangement arrays")
        if n < 1:
            raise GeometryError("need at least one front")
        if np.any(np.abs(np.linalg.norm(nu, axis=1) - 1.0) > 1e-12):
            raise GeometryError("nu vectors must be unit length")
        if np.any(theta <= 0.0) or np.any(theta > np.pi / 2.0 + 1e-15):
            raise GeometryError("angles must lie in (0, pi/2]")
        for i in range(n):
            for j in range(i + 1, n):
                if abs(theta[i] - theta[j]) < 1e-12 and np.all(np.abs(nu[i] - nu[j]) < 1e-12):
                    raise GeometryError("front directions must be pairwise distinct")

    @property
    def n(self) -> int:
        return self.theta.size

    @property
    def e(self) -> np.ndarray:
        """(n, N) full unit direction vectors."""
        return np.column_stack([self.nu * np.cos(self.theta)[:, None], np.sin(self.theta)])

    @property
    def spacetime_normals(self) -> np.ndarray:
        """(n, N+1) gradients of q_i in (t, x, y)."""
        return np.column_stack([np.full(self.n, -self.c_f), self.e])


def from_raw_directions(e_list, e0, tau, c_f: float) -> FrontArrangement:
    """Build an arrangement from raw unit vectors plus a common ascent axis.

    A Householder reflection maps e0 to the last coordinate axis; the e_i are
    carried along and decomposed into (nu_i, theta_i).
    """
    e_arr = np.atleast_2d(np.asarray(e_list, dtype=float))
    e0 = np.asarray(e0, dtype=float)
    N = e0.size
    if abs(np.linalg.norm(e0) - 1.0) > 1e-10 or np.any(np.abs(np.linalg.norm(e_arr, axis=1) - 1.0) > 1e-10):
        raise GeometryError("direction vectors must be unit length")
    if np.any(e_arr @ e0 <= 0.0):
        raise GeometryError("every direction must have positive dot product with the ascent axis")
    last = np.zeros(N)
    last[-1] = 1.0
    v = e0 - last
    if np.linalg.norm(v) < 1e-14:
        H = np.eye(N)
    else:
        H = np.eye(N) - 2.0 * np.outer(v, v) / (v @ v)
    rotated = e_arr @ H.T
    sines = np.clip(rotated[:, -1], -1.0, 1.0)
    theta = np.arcsin(sines)
    nu = np.zeros((e_arr.shape[0], N - 1))
    for i, row in enumerate(rotated):
        c = np.linalg.norm(row[:-1])
        if c < 1e-14:
            nu[i, 0] = 1.0  # vertical direction: nu is immaterial
        else:
            nu[i] = row[:-1] / c
    return FrontArrangement(N=N, nu=nu, theta=theta, tau=np.asarray(tau, dtype=float), c_f=c_f)


def _prep_points(x, y):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape[0] != y.shape[0] and x.shape == (1, y.shape[0]):
        # allow a single-column convenience layout for N=2
        x = x.T
    return x, y


def signed_plane_coord(arr: FrontArrangement, i: int, t, x, y, tau_scale: float = 1.0):
    """q_i at (t, x, y); x has shape (m, N-1) (scalars broadcast)."""
    x, y = _prep_points(x, y)
    e = arr.e[i]
    out = x @ e[:-1] + y * e[-1] - arr.c_f * np.asarray(t, dtype=float) + tau_scale * arr.tau[i]
    return out if out.shape != (1,) else float(out[0])


def plane_coords(arr: FrontArrangement, t, x, y, tau_scale: float = 1.0) -> np.ndarray:
    """All q_i stacked, shape (n, m)."""
    x, y = _prep_points(x, y)
    e = arr.e
    vals = e[:, :-1] @ x.T + np.outer(e[:, -1], y)
    vals -= arr.c_f * np.asarray(t, dtype=float)
    vals += (tau_scale * arr.tau)[:, None]
    return vals


def min_plane_coord(arr: FrontArrangement, t, x, y, tau_scale: float = 1.0):
    """(min_i q_i, argmin index); ties go to the lowest index."""
    vals = plane_coords(arr, t, x, y, tau_scale)
    idx = np.argmin(vals, axis=0)
    mins = vals[idx, np.arange(vals.shape[1])]
    if mins.shape == (1,):
        return float(mins[0]), int(idx[0])
    return mins, idx


def ridge_distance_proxy(arr: FrontArrangement, t, x, y, tau_scale: float = 1.0):
    """Distance from (t, x, y) to the nearest pairwise plane intersection.

    Every pair i < j contributes the full affine set {q_i = 0, q_j = 0} in
    space-time (a superset of the true ridge set), so the result is a lower
    bound on the distance to the ridges: conservative for decay checks.
    """
    if arr.n < 2:
        raise GeometryError("no ridges: need at least two fronts")
    q = plane_coords(arr, t, x, y, tau_scale)
    normals = arr.spacetime_normals
    best = np.full(q.shape[1], np.inf)
    for i in range(arr.n):
        for j in range(i + 1, arr.n):
            g11 = normals[i] @ normals[i]
            g12 = normals[i] @ normals[j]
            g22 = normals[j] @ normals[j]
            det = g11 * g22 - g12 * g12
            # distance^2 = v^T G^{-1} v for v = (q_i, q_j)
            d2 = (g22 * q[i] ** 2 - 2.0 * g12 * q[i] * q[j] + g11 * q[j] ** 2) / det
            np.minimum(best, np.sqrt(np.maximum(d2, 0.0)), out=best)
    return best if best.shape != (1,) else float(best[0])


@dataclass(frozen=True)
class RotatedFamily:
    """Mixing weights turning the i-th facet's neighbours into a mirrored polytope."""

    i: int
    gamma: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        l = np.asarray(self.lam, dtype=float)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "lam", l)
        if np.any(np.abs(g + l - 1.0) > 1e-12):
            raise GeometryError("weights must satisfy gamma + lambda = 1")
        if l[self.i] != 0.0 or g[self.i] != 1.0:
            raise GeometryError("the self-weight must be (gamma, lambda) = (1, 0)")


def choose_rotation_weights(arr: FrontArrangement, i: int) -> RotatedFamily:
    """Pick weights satisfying the tilt constraints with a factor-2 margin.

    For each j != i:  lambda_ij = 1/2 * min( sin(theta_i)/(sin(theta_i)+sin(theta_j)),
                                             min_{l != i} (1 - e_i.e_l)/(2 - e_i.e_l) ),
    which keeps gamma sin(theta_i) - lambda sin(theta_j) > 0 and
    gamma (1 - e_i.e_l) - lambda > 0 strict for every l != i.
    """
    if arr.n < 2:
        raise GeometryError("rotation weights need at least two fronts")
    e = arr.e
    sin = np.sin(arr.theta)
    dots = e @ e[i]
    others = [l for l in range(arr.n) if l != i]
    bound2 = min((1.0 - dots[l]) / (2.0 - dots[l]) for l in others)
    if bound2 <= 0.0:
        raise GeometryError("front directions must be pairwise distinct")
    gamma = np.ones(arr.n)
    lam = np.zeros(arr.n)
    for j in others:
        bound1 = sin[i] / (sin[i] + sin[j])
        lam[j] = 0.5 * min(bound1, bound2)
        gamma[j] = 1.0 - lam[j]
    fam = RotatedFamily(i=i, gamma=gamma, lam=lam)
    assert_rotation_weights(arr, fam)
    return fam


def assert_rotation_weights(arr: FrontArrangement, fam: RotatedFamily) -> None:
    """Check both strict inequality families; raises on violation."""
    e = arr.e
    sin = np.sin(arr.theta)
    i = fam.i
    for j in range(arr.n):
        if fam.gamma[j] * sin[i] - fam.lam[j] * sin[j] <= 0.0:
            raise GeometryError("tilt constraint violated: facet normal flips")
        if j == i:
            continue
        for l in range(arr.n):
            if l == i:
                continue
            if fam.gamma[j] * (1.0 - e[i] @ e[l]) - fam.lam[j] <= 0.0:
                raise GeometryError("tilt constraint violated: mixing weight too large")


def rotated_coord(arr: FrontArrangement, fam: RotatedFamily, j: int, t, x, y, tau_scale: float = 1.0):
    """q_ij = -gamma_ij q_i + lambda_ij q_j."""
    qi = signed_plane_coord(arr, fam.i, t, x, y, tau_scale)
    qj = signed_plane_coord(arr, j, t, x, y, tau_scale)
    return -fam.gamma[j] * qi + fam.lam[j] * qj


def symmetric_pair(alpha0: float, c_f: float, tau=(0.0, 0.0)) -> FrontArrangement:
    """2-D pair with mirror directions at angle alpha0 from the horizontal."""
    return FrontArrangement(
        N=2, nu=np.array([[1.0], [-1.0]]), theta=np.array([alpha0, alpha0]),
        tau=np.asarray(tau, dtype=float), c_f=c_f,
    )


def hamel_triple(alpha0: float, c_f: float, tau=(0.0, 0.0, 0.0)) -> FrontArrangement:
    """Symmetric 2-D pair plus a vertical third direction."""
    return FrontArrangement(
        N=2, nu=np.array([[1.0], [-1.0], [1.0]]),
        theta=np.array([alpha0, alpha0, np.pi / 2.0]),
        tau=np.asarray(tau, dtype=float), c_f=c_f,
    )


def pyramid4(alpha0: float, c_f: float, tau=(0.0, 0.0, 0.0, 0.0)) -> FrontArrangement:
    """3-D four-sided pyramid with equal inclination angles."""
    return FrontArrangement(
        N=3,
        nu=np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]),
        theta=np.full(4, alpha0),
        tau=np.asarray(tau, dtype=float),
        c_f=c_f,
    )
