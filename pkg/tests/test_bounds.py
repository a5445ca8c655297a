import numpy as np
import pytest

from front_forge.bounds import (
    BoundsError,
    FacetSubSolution,
    UpperSolution,
    admissible_params,
    canary_params,
    eval_lower,
    shift_combinator,
)
from front_forge.geometry import FrontArrangement, ridge_distance_proxy, symmetric_pair
from front_forge.probes import probe_many, residual_at
from front_forge.profile import eval_g, profile_constants, solve_profile
from front_forge.reaction import eval_f, make_cubic
from front_forge.surface import solve_height


@pytest.fixture(scope="module")
def spec():
    return make_cubic(0.25)


@pytest.fixture(scope="module")
def prof(spec):
    return solve_profile(spec, Xi=40.0, dxi=0.01, tol_c=1e-10)


@pytest.fixture(scope="module")
def pair(prof):
    return symmetric_pair(np.pi / 4, prof.c_f)


@pytest.fixture(scope="module")
def params(spec, prof, pair):
    return admissible_params(spec, prof, pair, C_emp=8.0)


def target_points(evaluator, rng, m, s_lo, s_hi, x_half=4.0, t_half=6.0):
    """Sample physical points with prescribed surface-crossing coordinates."""
    a = evaluator.params.alpha
    d = evaluator.arr.N - 1
    ts = rng.uniform(-t_half, t_half, size=m)       # scaled time
    xs = rng.uniform(-x_half, x_half, size=(m, d))  # scaled x
    s = rng.uniform(s_lo, s_hi, size=m)
    hgt, w = solve_height(evaluator.surf, ts, xs, return_weights=True)
    S = evaluator.surf.B @ w
    V = evaluator.surf.A.T @ w
    grad2 = np.sum(V * V, axis=0) / (S * S)
    y = hgt / a + s * np.sqrt(1.0 + grad2)
    pts = np.column_stack([ts / a, xs / a, y])
    return pts


def test_param_formulas(spec, prof, pair, params):
    consts = profile_constants(prof, spec)
    k, M = consts["k_min"], consts["M_bound"]
    assert params.epsilon0 == pytest.approx(min(spec.sigma / 4.0, k / (2.0 * 8.0 * spec.L), 1.0))
    assert params.epsilon == pytest.approx(0.5 * params.epsilon0)
    denom = 2.0 * (6.0 * 8.0 * M + prof.c_f + 8.0)
    expected_alpha = min(1.0, 0.25 * params.epsilon / denom, 0.75 * params.epsilon / denom)
    assert params.alpha == pytest.approx(0.5 * expected_alpha)
    assert params.omega == pytest.approx((spec.mu + spec.L) / (spec.mu * k))
    assert params.epsilon0 <= 1.0
    assert params.omega > 1.0 / k  # mu <= 1 makes (mu + L)/mu > 1


def test_param_validation(spec, prof, pair):
    with pytest.raises(BoundsError):
        admissible_params(spec, prof, pair, C_emp=-1.0)
    with pytest.raises(BoundsError):
        admissible_params(spec, prof, pair, C_emp=8.0, delta=spec.sigma * 2.0)
    with pytest.raises(BoundsError):
        admissible_params(spec, prof, pair, C_emp=8.0, eps_fraction=1.5)


def test_inadmissible_params_rejected_by_evaluators(spec, prof, pair, params):
    bad = canary_params(params)
    with pytest.raises(BoundsError):
        UpperSolution(pair, prof, bad)
    with pytest.raises(BoundsError):
        FacetSubSolution(pair, prof, bad, i=0)
    # explicit opt-out for violation runs
    UpperSolution(pair, prof, bad, require_vetted=False)


def test_lower_single_front(prof):
    arr = FrontArrangement(N=2, nu=np.array([[1.0]]), theta=np.array([0.7]),
                           tau=np.array([0.3]), c_f=prof.c_f)
    rng = np.random.default_rng(0)
    x = rng.normal(size=(50, 1), scale=3.0)
    y = rng.normal(size=50, scale=3.0)
    e = arr.e[0]
    xi = x @ e[:-1] + y * e[-1] - prof.c_f * 0.8 + 0.3
    assert np.allclose(eval_lower(arr, prof, 0.8, x, y), eval_g(prof, xi))


def test_lower_symmetry_and_interior(pair, prof):
    rng = np.random.default_rng(1)
    x = rng.uniform(0.5, 8.0, size=(40, 1))
    y = rng.uniform(-5.0, 20.0, size=40)
    left = eval_lower(pair, prof, 0.0, -x, y)
    right = eval_lower(pair, prof, 0.0, x, y)
    assert np.allclose(left, right, atol=1e-14)
    # deep inside the enclosed region the barrier is tiny
    deep = eval_lower(pair, prof, 0.0, np.zeros((1, 1)), np.array([40.0]))
    assert deep[0] < make_cubic(0.25).sigma


def test_lower_monotonicity(pair, prof):
    rng = np.random.default_rng(2)
    x = rng.normal(size=(60, 1), scale=4.0)
    y = rng.normal(size=60, scale=4.0)
    u0 = eval_lower(pair, prof, 0.0, x, y)
    u1 = eval_lower(pair, prof, 0.5, x, y)
    assert np.all(u1 >= u0 - 1e-15)  # nondecreasing in t
    raised = FrontArrangement(N=2, nu=pair.nu, theta=pair.theta,
                              tau=pair.tau + np.array([0.4, 0.0]), c_f=pair.c_f)
    u2, idx = eval_lower(raised, prof, 0.0, x, y, return_argmax=True)
    assert np.all(u2 <= u0 + 1e-15)  # increasing tau_i lowers the barrier
    strict = idx == 0
    assert np.all(u2[strict] < u0[strict])


def test_upper_single_front_reduces_to_planar(spec, prof):
    arr = FrontArrangement(N=2, nu=np.array([[1.0]]), theta=np.array([0.7]),
                           tau=np.array([0.3]), c_f=prof.c_f)
    params = admissible_params(spec, prof, arr, C_emp=8.0)
    upper = UpperSolution(arr, prof, params)
    rng = np.random.default_rng(3)
    x = rng.normal(size=(40, 1), scale=3.0)
    y = rng.normal(size=40, scale=3.0)
    e = arr.e[0]
    xi = x @ e[:-1] + y * e[-1] - prof.c_f * 1.1 + 0.3
    vals = upper(1.1, x, y)
    # value-path noise floor ~1e-16/alpha from the scaled-coordinate roundtrip
    assert np.max(np.abs(vals - eval_g(prof, xi))) < 1e-9
    # planar front solves the equation; the ~1e-8 floor is the probe stencil
    # straddling knots of the tabulated profile
    r = residual_at(upper, lambda u: eval_f(spec, u), 1.1, np.array([0.4]), 1.0)
    assert r is not None and abs(r) < 2e-8


def test_upper_above_lower(pair, prof, params, spec):
    upper = UpperSolution(pair, prof, params)
    rng = np.random.default_rng(4)
    pts = target_points(upper, rng, 200, -20.0, 20.0)
    for t0 in (0.0,):
        lo = eval_lower(pair, prof, pts[:, 0], pts[:, 1:2], pts[:, 2])
        hi = upper(pts[:, 0], pts[:, 1:2], pts[:, 2])
        assert np.all(hi > lo)


def test_upper_no_clip_far_above(pair, prof, params, spec):
    upper = UpperSolution(pair, prof, params)
    rng = np.random.default_rng(5)
    consts = profile_constants(prof, spec)
    pts = target_points(upper, rng, 50, consts["R_sigma"] + 1.0, consts["R_sigma"] + 6.0)
    vals = upper(pts[:, 0], pts[:, 1:2], pts[:, 2])
    assert np.all(vals <= 2.0 * spec.sigma)
    assert np.all(vals < 1.0)


def test_facet_sub_dominated_by_planar(pair, prof, params):
    sub = FacetSubSolution(pair, prof, params, i=0)
    rng = np.random.default_rng(6)
    pts = target_points(sub, rng, 200, -15.0, 15.0)
    e = pair.e[0]
    xi = pts[:, 1:2] @ e[:-1] + pts[:, 2] * e[-1] - pair.c_f * pts[:, 0] + pair.tau[0]
    vals = sub(pts[:, 0], pts[:, 1:2], pts[:, 2])
    assert np.all(vals < eval_g(prof, xi) + 1e-14)


def test_facet_sub_far_field_approaches_planar(pair, prof, params):
    sub = FacetSubSolution(pair, prof, params, i=0)
    a = params.alpha
    e = pair.e[0]
    # walk along facet 0 (the x < 0 branch) away from the ridge at bounded
    # plane distance
    gaps = []
    for xs in (-2.0, -18.0, -60.0, -150.0):
        x = np.array([[xs / a]])
        y = (pair.c_f * 0.0 - pair.tau[0] - x[0, 0] * e[0]) / e[1] + 1.0
        xi = x[0, 0] * e[0] + y * e[1] + pair.tau[0]
        gaps.append(abs(float(sub(0.0, x, np.array([y]))[0]) - float(eval_g(prof, xi))))
    assert gaps[-1] < 1e-6
    # decreasing down to the coordinate-roundtrip noise floor
    assert all(gaps[i + 1] <= gaps[i] + 2e-8 for i in range(len(gaps) - 1))


def test_shift_combinator_values(pair, prof, params):
    upper = UpperSolution(pair, prof, params)
    plus = shift_combinator(upper, params, +1)
    rng = np.random.default_rng(7)
    pts = target_points(upper, rng, 50, -10.0, 10.0)
    x, y = pts[:, 1:2], pts[:, 2]
    # at t = 0 the shift vanishes and the offset is the full delta
    v0 = plus(0.0, x, y)
    assert np.allclose(v0, np.minimum(upper(0.0, x, y) + params.delta, 1.0), atol=1e-14)
    # monotone: the shifted barrier dominates the base (base nondecreasing in t)
    for t0 in (0.0, 1.0, 10.0):
        assert np.all(plus(t0, x, y) >= upper(t0, x, y) - 1e-14)
    # large-time limit: shift -> omega delta, offset -> 0
    tl = 2000.0
    ref = upper(tl + params.omega * params.delta, x, y)
    assert np.max(np.abs(plus(tl, x, y) - ref)) < 1e-8


def test_shift_combinator_minus(pair, prof, params):
    sub = FacetSubSolution(pair, prof, params, i=0)
    minus = shift_combinator(sub, params, -1)
    rng = np.random.default_rng(8)
    pts = target_points(sub, rng, 40, -10.0, 10.0)
    x, y = pts[:, 1:2], pts[:, 2]
    v0 = minus(0.0, x, y)
    assert np.allclose(v0, np.maximum(sub(0.0, x, y) - params.delta, 0.0), atol=1e-14)
    assert np.all(minus(3.0, x, y) <= sub(3.0, x, y) + 1e-14)


def test_gap_decays_along_facet_ray(pair, prof, params):
    # |upper - lower| shrinks monotonically walking a facet away from the
    # ridge at bounded plane distance (scaled-frame evaluation)
    from front_forge.surface import phi_surface, solve_height
    from front_forge.geometry import plane_coords

    a = params.alpha
    surf = phi_surface(pair, tau_scale=a)
    gaps = []
    for xt in (-1.0, -4.0, -9.0, -16.0):
        xs = np.array([[xt]])
        hgt, w = solve_height(surf, np.zeros(1), xs, return_weights=True)
        S = surf.B @ w
        V = surf.A.T @ w
        grad2 = float(V[:, 0] @ V[:, 0]) / float(S[0] * S[0])
        s = 1.0
        y_scaled = hgt[0] + a * s * np.sqrt(1.0 + grad2)
        flat = float(w[0, 0] * w[1, 0] * 2.0)
        up = min(float(eval_g(prof, s)) + params.epsilon * flat, 1.0)
        q = plane_coords(pair, 0.0, xs, np.array([y_scaled]), tau_scale=a)
        low = float(eval_g(prof, q.min(axis=0)[0] / a))
        gaps.append(abs(up - low))
    assert all(b <= g + 1e-15 for g, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < gaps[0]


def test_ridge_far_gap_budget(pair, prof, params, spec):
    # doubling search: beyond some rho the upper/lower gap drops below
    # (n^2 + 1) eps at sampled points
    upper = UpperSolution(pair, prof, params)
    budget = (pair.n**2 + 1) * params.epsilon
    rng = np.random.default_rng(9)
    rho = 1.0
    ok = False
    for _ in range(40):
        # points near the boundary slab at ridge distance ~ rho
        xs = rho + rng.uniform(0.0, rho, size=(30, 1))
        xs = np.vstack([xs, -xs])
        e = pair.e[0]
        ys = (pair.c_f * 0.0 - pair.tau[0] - np.abs(xs[:, 0]) * e[0]) / e[1] + rng.uniform(-3, 3, 60)
        gap = upper(0.0, xs, ys) - eval_lower(pair, prof, 0.0, xs, ys)
        d = ridge_distance_proxy(pair, 0.0, xs, ys)
        sel = d >= rho
        if sel.any() and np.max(gap[sel]) <= budget:
            ok = True
            break
        rho *= 2.0
    assert ok, "no finite rho reached the gap budget"
    assert rho < 2.0**40
