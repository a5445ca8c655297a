"""Explicit barrier functions built from the profile and smoothing surfaces.

The lower barrier is the plain maximum of the planar fronts.  The upper
barrier rides the smoothed surface: with a scale parameter alpha applied to
both the coordinates fed to the surface and the plane offsets,

    upper(t, x, y) = min{ g(xi_bar) + eps * flatness(alpha t, alpha x), 1 },
    xi_bar = (alpha y - height(alpha t, alpha x)) / (alpha sqrt(1 + |grad|^2)),

and each facet i carries a mirrored lower barrier

    sub_i(t, x, y) = max{ g(xi_i) - eps * flatness_i(alpha t, alpha x), 0 }

on the rotated-plane surface.  Admissible (eps, alpha) come from closed-form
budgets in the reaction/profile constants plus one empirical surface constant
C_emp; the time-shift combinator upgrades either barrier into one valid for
the Cauchy problem from t = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import FrontArrangement, RotatedFamily, choose_rotation_weights, plane_coords
from .profile import FrontProfile, eval_g, eval_g_scalar, profile_constants
from .reaction import ReactionSpec
from .surface import ImplicitSurface, SurfaceLocal, phi_surface, psi_surface, solve_height


class BoundsError(ValueError):
    """Raised for inadmissible barrier parameters."""


@dataclass(frozen=True)
class BoundParams:
    """Correction size eps, surface scale alpha, and the shift constants."""

    epsilon: float
    alpha: float
    epsilon0: float
    C_emp: float
    mu: float
    omega: float
    delta: float
    fprime0: float
    fprime1: float
    alpha_denom: float         # 2 (6 C M + c_f + C)
    alpha_shrink: float = 0.5
    vetted: bool = True        # False marks deliberately inadmissible (canary) params

    def alpha_of_eps(self, eps: float) -> float:
        return min(1.0, -self.fprime0 * eps / self.alpha_denom,
                   -self.fprime1 * eps / self.alpha_denom)


def admissible_params(
    spec: ReactionSpec,
    prof: FrontProfile,
    arr: FrontArrangement,
    C_emp: float,
    eps_fraction: float = 0.5,
    delta: float | None = None,
    alpha_shrink: float = 0.5,
) -> BoundParams:
    """Derive (eps, alpha, omega, mu, delta) from the frozen surface constant.

    eps0 = min{sigma/n^2, k/(2 C L), 1}; alpha(eps) is proportional to eps
    with the 6CM + c_f + C budget; omega = (mu + L)/(mu k).  alpha_shrink
    (default 1/2) is the extra safety margin applied after alpha(eps).
    """
    if C_emp <= 0.0:
        raise BoundsError("need a positive calibrated surface constant")
    if not (0.0 < eps_fraction < 1.0):
        raise BoundsError("eps_fraction must lie in (0, 1)")
    consts = profile_constants(prof, spec)
    k, M = consts["k_min"], consts["M_bound"]
    n = arr.n
    eps0 = min(spec.sigma / n**2, k / (2.0 * C_emp * spec.L), 1.0)
    eps = eps_fraction * eps0
    denom = 2.0 * (6.0 * C_emp * M + prof.c_f + C_emp)
    if delta is None:
        delta = spec.sigma
    if not (0.0 < delta <= spec.sigma):
        raise BoundsError("shift amplitude delta must lie in (0, sigma]")
    omega = (spec.mu + spec.L) / (spec.mu * k)
    params = BoundParams(
        epsilon=eps, alpha=1.0, epsilon0=eps0, C_emp=C_emp, mu=spec.mu,
        omega=omega, delta=delta, fprime0=spec.fprime0, fprime1=spec.fprime1,
        alpha_denom=denom, alpha_shrink=alpha_shrink, vetted=True,
    )
    return replace(params, alpha=params.alpha_of_eps(eps) * alpha_shrink)


def canary_params(params: BoundParams, eps_factor: float = 2.0,
                  alpha_override: float | None = None) -> BoundParams:
    """Deliberately inadmissible parameters for violation (power) runs."""
    eps = eps_factor * params.epsilon0
    alpha = alpha_override if alpha_override is not None \
        else params.alpha_of_eps(eps) * params.alpha_shrink
    return replace(params, epsilon=eps, alpha=alpha, vetted=False)


def eval_lower(arr: FrontArrangement, prof: FrontProfile, t, x, y, return_argmax: bool = False):
    """max_i g(q_i) with unscaled offsets; equals g(min_i q_i)."""
    q = plane_coords(arr, t, x, y, tau_scale=1.0)
    idx = np.argmin(q, axis=0)
    vals = eval_g(prof, q[idx, np.arange(q.shape[1])])
    vals = np.atleast_1d(vals)
    if return_argmax:
        return vals, idx
    return vals


class UpperSolution:
    """Callable upper barrier; vectorized over points at a common time."""

    def __init__(self, arr: FrontArrangement, prof: FrontProfile, params: BoundParams,
                 require_vetted: bool = True):
        if require_vetted and not params.vetted:
            raise BoundsError("parameters outside the admissible range")
        if require_vetted and not (0.0 < params.epsilon < params.epsilon0):
            raise BoundsError("parameters outside the admissible range")
        self.arr = arr
        self.prof = prof
        self.params = params
        self.surf = phi_surface(arr, tau_scale=params.alpha)

    def components(self, t, x, y):
        """(profile part, correction part) before the clip at 1."""
        a = self.params.alpha
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        ts = np.broadcast_to(np.asarray(t, dtype=float) * a, (x.shape[0],))
        hgt, w = solve_height(self.surf, ts, a * x, return_weights=True)
        S = self.surf.B @ w
        V = self.surf.A.T @ w
        grad2 = np.sum(V * V, axis=0) / (S * S)
        xi = (a * y - hgt) / (a * np.sqrt(1.0 + grad2))
        offdiag = 1.0 - np.eye(self.surf.B.size)
        flat = np.einsum("ap,ab,bp->p", w, offdiag, w)
        return eval_g(self.prof, xi), self.params.epsilon * flat

    def __call__(self, t, x, y):
        base, corr = self.components(t, x, y)
        return np.minimum(base + corr, 1.0)

    def local(self, t0: float, x0: np.ndarray, y0: float):
        """Increment-stable point evaluator for finite-difference probes."""
        a = self.params.alpha
        x0 = np.asarray(x0, dtype=float).ravel()
        frame = SurfaceLocal(self.surf, a * t0, a * x0)
        K0 = a * y0 - frame.y0

        def value(dt: float = 0.0, dx=0.0, dy: float = 0.0) -> float:
            dxv = np.zeros_like(x0) + np.asarray(dx, dtype=float)
            D, _, grad2, flat = frame.eval(a * dt, a * dxv)
            xi = (K0 + a * dy - D) / (a * np.sqrt(1.0 + grad2))
            return min(eval_g_scalar(self.prof, xi) + self.params.epsilon * flat, 1.0)

        return value


class FacetSubSolution:
    """Callable facet-i lower barrier on the mirrored surface."""

    def __init__(self, arr: FrontArrangement, prof: FrontProfile, params: BoundParams,
                 i: int, fam: RotatedFamily | None = None, require_vetted: bool = True):
        if require_vetted and not params.vetted:
            raise BoundsError("parameters outside the admissible range")
        if require_vetted and not (0.0 < params.epsilon < params.epsilon0):
            raise BoundsError("parameters outside the admissible range")
        self.arr = arr
        self.prof = prof
        self.params = params
        self.i = i
        self.fam = fam if fam is not None else choose_rotation_weights(arr, i)
        self.surf = psi_surface(arr, self.fam, tau_scale=params.alpha)

    def components(self, t, x, y):
        a = self.params.alpha
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        ts = np.broadcast_to(np.asarray(t, dtype=float) * a, (x.shape[0],))
        hgt, w = solve_height(self.surf, ts, a * x, return_weights=True)
        S = self.surf.B @ w
        V = self.surf.A.T @ w
        grad2 = np.sum(V * V, axis=0) / (S * S)
        xi = (a * y - hgt) / (a * np.sqrt(1.0 + grad2))
        offdiag = 1.0 - np.eye(self.surf.B.size)
        flat = np.einsum("ap,ab,bp->p", w, offdiag, w)
        return eval_g(self.prof, xi), self.params.epsilon * flat

    def __call__(self, t, x, y):
        base, corr = self.components(t, x, y)
        return np.maximum(base - corr, 0.0)

    def local(self, t0: float, x0: np.ndarray, y0: float):
        a = self.params.alpha
        x0 = np.asarray(x0, dtype=float).ravel()
        frame = SurfaceLocal(self.surf, a * t0, a * x0)
        K0 = a * y0 - frame.y0

        def value(dt: float = 0.0, dx=0.0, dy: float = 0.0) -> float:
            dxv = np.zeros_like(x0) + np.asarray(dx, dtype=float)
            D, _, grad2, flat = frame.eval(a * dt, a * dxv)
            xi = (K0 + a * dy - D) / (a * np.sqrt(1.0 + grad2))
            return max(eval_g_scalar(self.prof, xi) - self.params.epsilon * flat, 0.0)

        return value


class ShiftedEvaluator:
    """Time-shifted, exponentially-offset barrier for the Cauchy problem.

    sign=+1: min{ base(t + omega delta (1 - e^{-mu t}), x, y) + delta e^{-mu t}, 1 }
    sign=-1: max{ base(t - omega delta (1 - e^{-mu t}), x, y) - delta e^{-mu t}, 0 }
    """

    def __init__(self, base, params: BoundParams, sign: int):
        if sign not in (+1, -1):
            raise BoundsError("sign must be +1 or -1")
        self.base = base
        self.params = params
        self.sign = sign

    def _shift(self, t):
        p = self.params
        return p.omega * p.delta * -np.expm1(-p.mu * t)

    def __call__(self, t, x, y):
        p = self.params
        off = p.delta * np.exp(-p.mu * np.asarray(t, dtype=float))
        inner_t = np.asarray(t, dtype=float) + self.sign * self._shift(t)
        vals = self.base(inner_t, x, y)
        if self.sign > 0:
            return np.minimum(vals + off, 1.0)
        return np.maximum(vals - off, 0.0)

    def local(self, t0: float, x0: np.ndarray, y0: float):
        p = self.params
        t1 = t0 + self.sign * self._shift(t0)
        inner = self.base.local(t1, x0, y0)
        base_shift = p.omega * p.delta * np.exp(-p.mu * t0)

        def value(dt: float = 0.0, dx=0.0, dy: float = 0.0) -> float:
            # increment of the inner time argument, kept small-by-structure
            dshift = base_shift * -np.expm1(-p.mu * dt)
            v = inner(dt + self.sign * dshift, dx, dy)
            off = p.delta * np.exp(-p.mu * (t0 + dt))
            if self.sign > 0:
                return min(v + off, 1.0)
            return max(v - off, 0.0)

        return value


def shift_combinator(base, params: BoundParams, sign: int) -> ShiftedEvaluator:
    """Wrap a barrier with the forward/backward time-shift construction."""
    return ShiftedEvaluator(base, params, sign)
