"""Bistable reaction terms and the constants derived from them.

A reaction term f on [0,1] is *bistable* when f(0) = f(theta) = f(1) = 0,
f < 0 on (0, theta), f > 0 on (theta, 1), and both end slopes are negative.
Everything downstream (front profile, correction budgets, time-shift
combinators) is driven by a handful of constants of f:

  sigma      largest value in (0, 1/8) such that f'(u) <= f'(0)/2 on
             [0, 4*sigma] and f'(u) <= f'(1)/2 on [1-4*sigma, 1]
  L          max of |f'| over [0,1]
  mu         min{1, -f'(0)/4, -f'(1)/4}
  integral_f integral of f over [0,1]; must be positive (unbalanced case)

The cubic family f(u) = u(u-theta)(1-u) with theta in (0, 1/2) is the
reference model; tabulated data is accepted through a monotonicity-preserving
cubic interpolant so the sign pattern survives interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

_SIGMA_CAP = 0.125
_SIGMA_GRID = 10_000


class ReactionError(ValueError):
    """Raised when a reaction term violates the bistable assumptions."""


@dataclass(frozen=True)
class ReactionSpec:
    """A validated bistable nonlinearity plus its derived constants."""

    kind: str                 # "cubic" or "tabulated"
    theta: float              # interior zero of f
    fprime0: float            # f'(0) < 0
    fprime1: float            # f'(1) < 0
    sigma: float              # flat-slope radius, in (0, 1/8)
    L: float                  # Lipschitz bound max |f'|
    mu: float                 # min{1, -f'(0)/4, -f'(1)/4}
    integral_f: float         # int_0^1 f > 0
    _pchip: PchipInterpolator | None = field(default=None, repr=False, compare=False)
    _pchip_d: PchipInterpolator | None = field(default=None, repr=False, compare=False)


def _cubic_f(theta: float, u: np.ndarray) -> np.ndarray:
    return u * (u - theta) * (1.0 - u)


def _cubic_fprime(theta: float, u: np.ndarray) -> np.ndarray:
    return -3.0 * u * u + 2.0 * (1.0 + theta) * u - theta


def eval_f(spec: ReactionSpec, u) -> np.ndarray | float:
    """Evaluate f(u).

    The cubic kind accepts any real argument (its polynomial formula is the
    natural extension); tabulated data is extended linearly outside [0,1].
    Both extensions exist only so residual probes may straddle the clip sets.
    """
    u = np.asarray(u, dtype=float)
    if np.isnan(u).any():
        raise ReactionError("NaN passed to reaction evaluation")
    if spec.kind == "cubic":
        out = _cubic_f(spec.theta, u)
    else:
        out = np.where(
            u < 0.0,
            spec.fprime0 * u,
            np.where(u > 1.0, spec.fprime1 * (u - 1.0), spec._pchip(np.clip(u, 0.0, 1.0))),
        )
    return out if out.shape else float(out)


def eval_fprime(spec: ReactionSpec, u) -> np.ndarray | float:
    """Evaluate f'(u); same extension rules as :func:`eval_f`."""
    u = np.asarray(u, dtype=float)
    if np.isnan(u).any():
        raise ReactionError("NaN passed to reaction evaluation")
    if spec.kind == "cubic":
        out = _cubic_fprime(spec.theta, u)
    else:
        out = np.where(
            u < 0.0,
            spec.fprime0,
            np.where(u > 1.0, spec.fprime1, spec._pchip_d(np.clip(u, 0.0, 1.0))),
        )
    return out if out.shape else float(out)


def _sigma_ok(fprime, fprime0: float, fprime1: float, sigma: float) -> bool:
    lo = np.linspace(0.0, 4.0 * sigma, _SIGMA_GRID)
    hi = np.linspace(1.0 - 4.0 * sigma, 1.0, _SIGMA_GRID)
    return bool(np.all(fprime(lo) <= fprime0 / 2.0) and np.all(fprime(hi) <= fprime1 / 2.0))


def _largest_sigma(fprime, fprime0: float, fprime1: float) -> float:
    # ok(sigma) is monotone (shrinking sigma only shrinks the intervals), so
    # bisect for the largest admissible value, then keep the proven-good end.
    hi = _SIGMA_CAP * (1.0 - 1e-9)
    lo = 1e-6
    if not _sigma_ok(fprime, fprime0, fprime1, lo):
        raise ReactionError("no admissible flat-slope radius sigma; end slopes too shallow")
    if _sigma_ok(fprime, fprime0, fprime1, hi):
        return hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _sigma_ok(fprime, fprime0, fprime1, mid):
            lo = mid
        else:
            hi = mid
    return lo


def make_cubic(theta: float) -> ReactionSpec:
    """Build the cubic model f(u) = u(u-theta)(1-u) for theta in (0, 1/2)."""
    if not (0.0 < theta < 0.5):
        raise ReactionError("unbalanced condition violated")
    fprime0 = -theta
    fprime1 = theta - 1.0
    grid = np.linspace(0.0, 1.0, _SIGMA_GRID)
    # |f'| attains its max at an endpoint or at the vertex of the parabola f'.
    vertex = (1.0 + theta) / 3.0
    cand = np.abs(_cubic_fprime(theta, np.append(grid, vertex)))
    L = float(cand.max())
    sigma = _largest_sigma(lambda u: _cubic_fprime(theta, u), fprime0, fprime1)
    return ReactionSpec(
        kind="cubic",
        theta=theta,
        fprime0=fprime0,
        fprime1=fprime1,
        sigma=sigma,
        L=L,
        mu=min(1.0, -fprime0 / 4.0, -fprime1 / 4.0),
        integral_f=(1.0 - 2.0 * theta) / 12.0,
    )


def make_tabulated(u_samples: np.ndarray, f_samples: np.ndarray) -> ReactionSpec:
    """Build a spec from sampled (u, f(u)) data on [0, 1].

    Monotone-piecewise-cubic interpolation keeps the sampled sign pattern
    intact, which is what the bistability checks below rely on.
    """
    u_samples = np.asarray(u_samples, dtype=float)
    f_samples = np.asarray(f_samples, dtype=float)
    if u_samples.ndim != 1 or u_samples.shape != f_samples.shape or u_samples.size < 5:
        raise ReactionError("tabulated reaction needs matching 1-d sample arrays (>= 5 points)")
    if u_samples[0] != 0.0 or u_samples[-1] != 1.0 or np.any(np.diff(u_samples) <= 0):
        raise ReactionError("tabulated u samples must increase strictly from 0 to 1")
    pch = PchipInterpolator(u_samples, f_samples)
    pch_d = pch.derivative()

    fine = np.linspace(0.0, 1.0, _SIGMA_GRID)
    vals = pch(fine)
    sign_change = np.where(np.diff(np.signbit(vals[1:-1])))[0]
    if sign_change.size != 1:
        raise ReactionError("tabulated reaction is not bistable (need one interior sign change)")
    from scipy.optimize import brentq

    theta = float(brentq(pch, fine[sign_change[0]], fine[sign_change[0] + 2]))
    fprime0 = float(pch_d(0.0))
    fprime1 = float(pch_d(1.0))
    if not (fprime0 < 0.0 and fprime1 < 0.0):
        raise ReactionError("tabulated reaction needs negative slopes at u=0 and u=1")
    if abs(float(pch(0.0))) > 1e-12 or abs(float(pch(1.0))) > 1e-12:
        raise ReactionError("tabulated reaction must vanish at u=0 and u=1")
    lo_side = fine[(fine > 1e-3) & (fine < theta - 1e-3)]
    hi_side = fine[(fine > theta + 1e-3) & (fine < 1.0 - 1e-3)]
    if not (np.all(pch(lo_side) < 0.0) and np.all(pch(hi_side) > 0.0)):
        raise ReactionError("tabulated reaction violates the bistable sign pattern")
    integral_f = float(pch.integrate(0.0, 1.0))
    if integral_f <= 1e-12:
        raise ReactionError("unbalanced condition violated")
    sigma = _largest_sigma(pch_d, fprime0, fprime1)
    L = float(np.max(np.abs(pch_d(fine))))
    return ReactionSpec(
        kind="tabulated",
        theta=theta,
        fprime0=fprime0,
        fprime1=fprime1,
        sigma=sigma,
        L=L,
        mu=min(1.0, -fprime0 / 4.0, -fprime1 / 4.0),
        integral_f=integral_f,
        _pchip=pch,
        _pchip_d=pch_d,
    )


def load_tabulated_csv(path) -> ReactionSpec:
    """Read (u, f(u)) CSV rows and build a tabulated spec."""
    data = np.loadtxt(path, delimiter=",", dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ReactionError("tabulated CSV must have two columns: u, f(u)")
    return make_tabulated(data[:, 0], data[:, 1])
