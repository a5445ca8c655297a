"""Traveling-wave profile solver for the 1-D front equation.

Solves g'' + c g' + f(g) = 0 with g(-inf) = 1, g(+inf) = 0, g decreasing,
normalized by g(0) = 1/2.  The wave speed c is the unique value separating
two trajectory classes when shooting off the unstable manifold of the g = 1
equilibrium:

  overshoot   g crosses 0 while still falling      -> c too small
  undershoot  g' reaches 0 while g is still positive -> c too large

(the orientation is detected from probes, not assumed).  Bisection on c is
therefore robust.  The converged trajectory is translated so g(0) = 1/2 and
tabulated on a uniform grid; beyond the window where shooting is trustworthy
the tails are replaced by the one-term exponential with the characteristic
decay exponent, amplitude matched at the stitch node.  Shooting inevitably
loses the far tail: the c = c* heteroclinic is unstable there, so any
bisection-size error in c grows like exp(lambda_u * xi).  The stitch point is
chosen where the profile is ~1e-5, well before that contamination surfaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly
from scipy.optimize import brentq

from . import _kernels
from .reaction import ReactionSpec, eval_f, eval_fprime

_G_FLOOR = 1e-300
_G_CEIL = 1.0 - 1e-16
_DELTA0 = 1e-8           # off-manifold start distance from g = 1
_STITCH_LEVEL = 1e-5     # profile value at which tails take over


class ProfileError(RuntimeError):
    """Raised when the shooting solve cannot produce a valid profile."""


@dataclass(frozen=True)
class FrontProfile:
    """Tabulated decreasing front profile with exponential tail extensions."""

    c_f: float
    Xi: float
    dxi: float
    xi_grid: np.ndarray = field(repr=False)
    g_vals: np.ndarray = field(repr=False)
    gp_vals: np.ndarray = field(repr=False)
    gpp_vals: np.ndarray = field(repr=False)
    lambda_plus: float          # decay exponent of g as xi -> +inf (< 0)
    lambda_minus: float         # growth exponent of 1 - g as xi -> -inf (> 0)
    tail_amp_plus: float
    tail_amp_minus: float
    stitch_plus: float          # grid location where the right tail takes over
    stitch_minus: float
    tail_slope_gap_plus: float  # |g' - tail slope| at the stitch (recorded, not hidden)
    tail_slope_gap_minus: float
    _spline_g: BPoly = field(repr=False, compare=False, default=None)
    _spline_gp: BPoly = field(repr=False, compare=False, default=None)
    _spline_gpp: BPoly = field(repr=False, compare=False, default=None)
    _bern_c: np.ndarray = field(repr=False, compare=False, default=None)


def _char_roots(spec: ReactionSpec, c: float) -> tuple[float, float]:
    """(lambda_plus, lambda_minus): stable root at g=0, unstable at g=1."""
    lam_p = 0.5 * (-c - np.sqrt(c * c - 4.0 * spec.fprime0))
    lam_m = 0.5 * (-c + np.sqrt(c * c - 4.0 * spec.fprime1))
    return lam_p, lam_m


def _shoot(spec: ReactionSpec, c: float, xi_max: float, rtol: float, dense: bool):
    lam_m = _char_roots(spec, c)[1]

    def rhs(_, z):
        return (z[1], -c * z[1] - eval_f(spec, z[0]))

    def ev_over(_, z):      # g falls through 0
        return z[0]

    ev_over.terminal = True
    ev_over.direction = -1.0

    def ev_under(_, z):     # g' turns around while g > 0
        return z[1]

    ev_under.terminal = True
    ev_under.direction = 1.0

    z0 = (1.0 - _DELTA0, -lam_m * _DELTA0)
    return solve_ivp(
        rhs,
        (0.0, xi_max),
        z0,
        method="DOP853",
        rtol=rtol,
        atol=1e-14,
        events=(ev_over, ev_under),
        dense_output=dense,
    )


def _classify(spec: ReactionSpec, c: float, xi_max: float) -> str:
    sol = _shoot(spec, c, xi_max, rtol=1e-10, dense=False)
    if sol.t_events[0].size:
        return "overshoot"
    if sol.t_events[1].size:
        return "undershoot"
    return "neither"


def solve_profile(
    spec: ReactionSpec,
    Xi: float = 40.0,
    dxi: float = 0.01,
    tol_c: float = 1e-10,
    xi_max: float = 500.0,
) -> FrontProfile:
    """Shoot + bisect for (g, c_f); tabulate g, g', g'' on [-Xi, Xi]."""
    c_lo, c_hi = 1e-6, 1.0
    cls_lo = _classify(spec, c_lo, xi_max)
    cls_hi = _classify(spec, c_hi, xi_max)
    expansions = 0
    while cls_lo == cls_hi and expansions < 20:
        c_hi *= 2.0
        cls_hi = _classify(spec, c_hi, xi_max)
        expansions += 1
    if cls_lo == cls_hi or "neither" in (cls_lo, cls_hi):
        raise ProfileError("bisection bracket failure")
    positive_class = cls_hi  # classification on the high-c side

    while c_hi - c_lo > tol_c:
        c_mid = 0.5 * (c_lo + c_hi)
        cls = _classify(spec, c_mid, xi_max)
        if cls == "neither":
            raise ProfileError("bisection bracket failure")
        if cls == positive_class:
            c_hi = c_mid
        else:
            c_lo = c_mid

    c_f = 0.5 * (c_lo + c_hi)
    if c_f <= 0.0:
        raise ProfileError("non-positive wave speed; reaction must be unbalanced toward 1")
    lam_p, lam_m = _char_roots(spec, c_f)

    sol = _shoot(spec, c_f, xi_max, rtol=1e-12, dense=True)
    chi_end = sol.t[-1]
    dense = sol.sol

    # translate so g = 1/2 at the origin
    mesh = np.linspace(0.0, chi_end, 4000)
    gm = dense(mesh)[0]
    below = np.nonzero(gm <= 0.5)[0]
    if below.size == 0:
        raise ProfileError("trajectory never reaches 1/2; increase xi_max")
    k = below[0]
    chi_half = brentq(lambda s: dense(s)[0] - 0.5, mesh[k - 1], mesh[k], xtol=1e-14)

    npts = int(round(2.0 * Xi / dxi)) + 1
    xi_grid = np.linspace(-Xi, Xi, npts)
    chi = xi_grid + chi_half

    # usable trajectory window: right of the start, left of the point where
    # g drops to the stitch level (contamination margin, see module docstring)
    g_line = dense(np.clip(chi, 0.0, chi_end))
    g_tab, gp_tab = g_line[0].copy(), g_line[1].copy()
    in_range = (chi >= 0.0) & (chi <= chi_end)

    small = in_range & (g_tab <= _STITCH_LEVEL)
    idx_right = int(np.nonzero(small)[0][0]) if small.any() else int(np.nonzero(in_range)[0][-1])
    idx_left = int(np.nonzero(in_range)[0][0])

    stitch_plus = xi_grid[idx_right]
    stitch_minus = xi_grid[idx_left]
    amp_plus = g_tab[idx_right] * np.exp(-lam_p * stitch_plus)
    amp_minus = (1.0 - g_tab[idx_left]) * np.exp(-lam_m * stitch_minus)
    gap_plus = abs(gp_tab[idx_right] - lam_p * g_tab[idx_right])
    gap_minus = abs(gp_tab[idx_left] + lam_m * (1.0 - g_tab[idx_left]))

    right = xi_grid > stitch_plus
    g_tab[right] = amp_plus * np.exp(lam_p * xi_grid[right])
    gp_tab[right] = lam_p * g_tab[right]
    left = xi_grid < stitch_minus
    tail = amp_minus * np.exp(lam_m * xi_grid[left])
    g_tab[left] = 1.0 - tail
    gp_tab[left] = -lam_m * tail

    if np.any(gp_tab >= 0.0) or np.any(np.diff(g_tab) >= 0.0):
        raise ProfileError("profile monotonicity failure")
    if not (np.all(g_tab > 0.0) and np.all(g_tab < 1.0)):
        raise ProfileError("profile monotonicity failure")
    if amp_plus * np.exp(lam_p * Xi) >= 1e-10 or amp_minus * np.exp(-lam_m * Xi) >= 1e-10:
        raise ProfileError("Xi too small: tails exceed 1e-10 at the grid edge")

    gpp_tab = -c_f * gp_tab - eval_f(spec, g_tab)
    gppp_tab = -c_f * gpp_tab - eval_fprime(spec, g_tab) * gp_tab

    # quintic pieces from (g, g', g''): the residual of the interpolant in the
    # wave equation then sits at the 1e-10 level instead of cubic's 1e-7
    spline_g = BPoly.from_derivatives(xi_grid, np.column_stack([g_tab, gp_tab, gpp_tab]))
    spline_gp = spline_g.derivative()
    spline_gpp = BPoly.from_derivatives(xi_grid, np.column_stack([gpp_tab, gppp_tab]))

    return FrontProfile(
        c_f=c_f,
        Xi=Xi,
        dxi=dxi,
        xi_grid=xi_grid,
        g_vals=g_tab,
        gp_vals=gp_tab,
        gpp_vals=gpp_tab,
        lambda_plus=lam_p,
        lambda_minus=lam_m,
        tail_amp_plus=amp_plus,
        tail_amp_minus=amp_minus,
        stitch_plus=stitch_plus,
        stitch_minus=stitch_minus,
        tail_slope_gap_plus=gap_plus,
        tail_slope_gap_minus=gap_minus,
        _spline_g=spline_g,
        _spline_gp=spline_gp,
        _spline_gpp=spline_gpp,
        _bern_c=np.ascontiguousarray(spline_g.c, dtype=float),
    )


def eval_g_scalar(prof: FrontProfile, xi: float) -> float:
    """Scalar fast path for the probe evaluators (same values as eval_g)."""
    if xi > prof.Xi:
        out = prof.tail_amp_plus * np.exp(prof.lambda_plus * xi)
    elif xi < -prof.Xi:
        out = 1.0 - prof.tail_amp_minus * np.exp(prof.lambda_minus * xi)
    else:
        out = _kernels.bernstein_scalar(prof._bern_c, -prof.Xi, prof.dxi, xi)
    return min(max(out, _G_FLOOR), _G_CEIL)


def eval_g(prof: FrontProfile, xi) -> np.ndarray | float:
    """Profile value; exponential tails beyond the table, clamped to (0, 1)."""
    xi = np.asarray(xi, dtype=float)
    out = np.empty_like(xi)
    lo = xi < -prof.Xi
    hi = xi > prof.Xi
    mid = ~(lo | hi)
    out[mid] = prof._spline_g(xi[mid])
    out[hi] = prof.tail_amp_plus * np.exp(prof.lambda_plus * xi[hi])
    out[lo] = 1.0 - prof.tail_amp_minus * np.exp(prof.lambda_minus * xi[lo])
    out = np.clip(out, _G_FLOOR, _G_CEIL)
    return out if out.shape else float(out)


def eval_gp(prof: FrontProfile, xi) -> np.ndarray | float:
    xi = np.asarray(xi, dtype=float)
    out = np.empty_like(xi)
    lo = xi < -prof.Xi
    hi = xi > prof.Xi
    mid = ~(lo | hi)
    out[mid] = prof._spline_gp(xi[mid])
    out[hi] = prof.lambda_plus * prof.tail_amp_plus * np.exp(prof.lambda_plus * xi[hi])
    out[lo] = -prof.lambda_minus * prof.tail_amp_minus * np.exp(prof.lambda_minus * xi[lo])
    return out if out.shape else float(out)


def eval_gpp(prof: FrontProfile, xi) -> np.ndarray | float:
    xi = np.asarray(xi, dtype=float)
    out = np.empty_like(xi)
    lo = xi < -prof.Xi
    hi = xi > prof.Xi
    mid = ~(lo | hi)
    out[mid] = prof._spline_gpp(xi[mid])
    out[hi] = prof.lambda_plus ** 2 * prof.tail_amp_plus * np.exp(prof.lambda_plus * xi[hi])
    out[lo] = -prof.lambda_minus ** 2 * prof.tail_amp_minus * np.exp(prof.lambda_minus * xi[lo])
    return out if out.shape else float(out)


def profile_constants(prof: FrontProfile, spec: ReactionSpec, sigma: float | None = None) -> dict:
    """Constants tied to the level sigma: half-width R, slope floor k, sup M.

    R is the smallest value with g(R) <= sigma and g(-R) >= 1 - sigma;
    k = min(-g') on [-R, R]; M bounds |g'| + |g' xi| + |g'' xi| + |g'' xi^2|.
    """
    s = spec.sigma if sigma is None else sigma
    if not (0.0 < s < 0.5):
        raise ValueError("sigma level must lie in (0, 1/2)")
    r_hi = brentq(lambda x: eval_g(prof, x) - s, 0.0, prof.Xi, xtol=1e-13)
    r_lo = brentq(lambda x: eval_g(prof, x) - (1.0 - s), -prof.Xi, 0.0, xtol=1e-13)
    R = max(r_hi, -r_lo)
    band = np.linspace(-R, R, 20_001)
    k_min = float(np.min(-eval_gp(prof, band)))
    if k_min <= 0.0:
        raise ProfileError("profile monotonicity failure")
    wide = np.linspace(-(prof.Xi + 10.0), prof.Xi + 10.0, 100_001)
    gp = eval_gp(prof, wide)
    gpp = eval_gpp(prof, wide)
    M = float(np.max(np.abs(gp) + np.abs(gp * wide) + np.abs(gpp * wide) + np.abs(gpp * wide * wide)))
    return {"R_sigma": R, "k_min": k_min, "M_bound": M}
