import numpy as np
import pytest

from front_forge.profile import (
    ProfileError,
    eval_g,
    eval_gp,
    eval_gpp,
    profile_constants,
    solve_profile,
)
from front_forge.reaction import eval_f, make_cubic

SQRT2 = np.sqrt(2.0)


def closed_form_g(xi):
    # decreasing wave of the cubic model, normalized to 1/2 at the origin
    return 1.0 / (1.0 + np.exp(xi / SQRT2))


def closed_form_speed(theta):
    return (1.0 - 2.0 * theta) / SQRT2


@pytest.fixture(scope="session")
def spec025():
    return make_cubic(0.25)


@pytest.fixture(scope="session")
def prof025(spec025):
    return solve_profile(spec025, Xi=40.0, dxi=0.01, tol_c=1e-10)


def test_closed_form_is_a_wave(spec025):
    # independent oracle check: the logistic profile satisfies the wave ODE
    xi = np.linspace(-30.0, 30.0, 2001)
    g = closed_form_g(xi)
    gp = -g * (1.0 - g) / SQRT2
    gpp = 0.5 * g * (1.0 - g) * (1.0 - 2.0 * g)
    resid = gpp + closed_form_speed(0.25) * gp + eval_f(spec025, g)
    assert np.max(np.abs(resid)) < 1e-14


def test_wave_speed_against_closed_form(prof025):
    assert abs(prof025.c_f - closed_form_speed(0.25)) < 1e-8


def test_profile_matches_closed_form(prof025):
    xi = np.linspace(-20.0, 20.0, 4001)
    err = np.abs(eval_g(prof025, xi) - closed_form_g(xi))
    assert np.max(err) < 1e-5


def test_normalization_and_tails(prof025):
    assert eval_g(prof025, 0.0) == pytest.approx(0.5, abs=1e-9)
    assert eval_g(prof025, 50.0) < 1e-10
    assert eval_g(prof025, -50.0) > 1.0 - 1e-10
    assert eval_gp(prof025, 0.0) == pytest.approx(-1.0 / (4.0 * SQRT2), abs=1e-7)


def test_decay_exponents(prof025):
    c = prof025.c_f
    lam_p_expected = 0.5 * (-c - np.sqrt(c * c + 1.0))  # f'(0) = -1/4
    assert prof025.lambda_plus == pytest.approx(lam_p_expected, abs=1e-12)
    assert prof025.lambda_plus == pytest.approx(-1.0 / SQRT2, abs=1e-8)
    assert prof025.lambda_minus == pytest.approx(1.0 / SQRT2, abs=1e-8)


def test_monotone_and_bounded(prof025):
    assert np.all(prof025.gp_vals < 0.0)
    assert np.all(prof025.g_vals > 0.0) and np.all(prof025.g_vals < 1.0)
    assert np.all(np.diff(prof025.g_vals) < 0.0)


def test_ode_residual_on_grid(prof025, spec025):
    resid = prof025.gpp_vals + prof025.c_f * prof025.gp_vals + eval_f(spec025, prof025.g_vals)
    assert np.max(np.abs(resid)) <= 1e-8  # identity construction makes this exact


def test_offgrid_residual(prof025, spec025):
    # spline-level consistency away from the nodes
    rng = np.random.default_rng(3)
    xi = rng.uniform(-35.0, 35.0, 500)
    resid = eval_gpp(prof025, xi) + prof025.c_f * eval_gp(prof025, xi) + eval_f(spec025, eval_g(prof025, xi))
    assert np.max(np.abs(resid)) < 1e-6


def test_gp_matches_finite_differences(prof025):
    rng = np.random.default_rng(11)
    xi = np.concatenate([rng.uniform(-20, 20, 800), rng.uniform(35, 60, 100), rng.uniform(-60, -35, 100)])
    h = 1e-4
    fd = (eval_g(prof025, xi + h) - eval_g(prof025, xi - h)) / (2.0 * h)
    assert np.max(np.abs(fd - eval_gp(prof025, xi))) < 1e-6


def test_constants_closed_form(prof025, spec025):
    # at level 0.1 the half-width of the logistic wave is sqrt(2) ln 9
    consts = profile_constants(prof025, spec025, sigma=0.1)
    assert consts["R_sigma"] == pytest.approx(SQRT2 * np.log(9.0), abs=1e-5)
    assert consts["k_min"] > 0.0
    assert consts["M_bound"] >= abs(eval_gp(prof025, 0.0))
    # default level: g(R) == sigma on both sides
    c2 = profile_constants(prof025, spec025)
    assert eval_g(prof025, c2["R_sigma"]) <= spec025.sigma + 1e-12
    assert eval_g(prof025, -c2["R_sigma"]) >= 1.0 - spec025.sigma - 1e-12


def test_speed_decreasing_in_theta():
    speeds = []
    for theta in (0.1, 0.25, 0.4):
        prof = solve_profile(make_cubic(theta), Xi=40.0, tol_c=1e-8)
        speeds.append(prof.c_f)
        assert prof.c_f == pytest.approx(closed_form_speed(theta), abs=1e-6)
    assert speeds[0] > speeds[1] > speeds[2]


def test_grid_refinement_consistency(spec025, prof025):
    prof_fine = solve_profile(spec025, Xi=40.0, dxi=0.005, tol_c=1e-10)
    assert abs(prof_fine.c_f - prof025.c_f) < 10 * 1e-10


def test_small_Xi_rejected(spec025):
    with pytest.raises(ProfileError, match="Xi too small"):
        solve_profile(spec025, Xi=20.0, tol_c=1e-8)
