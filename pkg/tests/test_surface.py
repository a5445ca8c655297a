import numpy as np
import pytest

from front_forge.geometry import (
    FrontArrangement,
    choose_rotation_weights,
    hamel_triple,
    min_plane_coord,
    plane_coords,
    pyramid4,
    ridge_distance_proxy,
    symmetric_pair,
)
from front_forge.surface import (
    SurfaceLocal,
    evaluate,
    flatness,
    phi_surface,
    psi_surface,
    solve_height,
)

CF = 0.3535533905932738


@pytest.fixture(scope="module")
def pair():
    return symmetric_pair(np.pi / 4, CF)


@pytest.fixture(scope="module")
def triple():
    return hamel_triple(np.pi / 4, CF)


@pytest.fixture(scope="module")
def pyramid():
    return pyramid4(np.pi / 4, CF)


def rand_points(rng, arr, m, scale=4.0):
    x = rng.normal(size=(m, arr.N - 1), scale=scale)
    t = rng.normal(scale=scale / arr.c_f)
    return t, x


def test_single_front_height_is_plane():
    arr = FrontArrangement(N=2, nu=np.array([[1.0]]), theta=np.array([0.9]),
                           tau=np.array([0.4]), c_f=CF)
    surf = phi_surface(arr)
    t = 0.7
    x = np.array([[1.3]])
    y = solve_height(surf, t, x)
    plane = (CF * t - 0.4 - 1.3 * np.cos(0.9)) / np.sin(0.9)
    assert y[0] == pytest.approx(plane, abs=1e-12)
    ev = evaluate(surf, t, x)
    assert ev.dt[0] == pytest.approx(CF / np.sin(0.9), abs=1e-12)
    assert ev.grad[0, 0] == pytest.approx(-np.cos(0.9) / np.sin(0.9), abs=1e-12)
    assert abs(ev.hess[0, 0, 0]) < 1e-12
    assert ev.flatness[0] == 0.0


def test_symmetric_pair_closed_form(pair):
    surf = phi_surface(pair)
    y = solve_height(surf, 0.0, np.array([[0.0]]))
    assert y[0] == pytest.approx(np.log(2.0) / np.sin(np.pi / 4), abs=1e-12)
    ev = evaluate(surf, 0.0, np.array([[0.0]]))
    assert ev.dt[0] == pytest.approx(CF / np.sin(np.pi / 4), abs=1e-12)
    # flatness at the apex: both weights are 1/2
    assert ev.flatness[0] == pytest.approx(0.5, abs=1e-12)


def test_root_residual_and_region(pair, triple, pyramid):
    rng = np.random.default_rng(0)
    for arr in (pair, triple, pyramid):
        surf = phi_surface(arr)
        t, x = rand_points(rng, arr, 2000)
        y, w = solve_height(surf, t, x, return_weights=True)
        assert np.max(np.abs(w.sum(axis=0) - 1.0)) <= 1e-12
        # the surface lies inside the enclosed region
        mins, _ = min_plane_coord(arr, t, x, y)
        assert np.min(mins) >= -1e-12
        # and above the piecewise-plane boundary
        heights = -(surf.A @ x.T + np.outer(surf.C, np.full(x.shape[0], t)) + surf.D[:, None]) / surf.B[:, None]
        assert np.min(y - heights.max(axis=0)) >= -1e-12


def test_monotone_along_bracket(pair):
    surf = phi_surface(pair)
    rng = np.random.default_rng(1)
    t, x = rand_points(rng, pair, 100)
    y = solve_height(surf, t, x)
    for dy in (0.3, 0.9, 2.7):
        q_up = surf.A @ x.T + np.outer(surf.B, y + dy) + np.outer(surf.C, np.full(x.shape[0], t)) + surf.D[:, None]
        q_dn = surf.A @ x.T + np.outer(surf.B, y - dy) + np.outer(surf.C, np.full(x.shape[0], t)) + surf.D[:, None]
        assert np.all(np.exp(-q_up).sum(axis=0) < 1.0)
        assert np.all(np.exp(-q_dn).sum(axis=0) > 1.0)


def test_derivatives_match_finite_differences(triple):
    surf = phi_surface(triple)
    rng = np.random.default_rng(2)
    t, x = rand_points(rng, triple, 60, scale=2.5)
    ev = evaluate(surf, t, x)
    h = 1e-5
    fd_dt = (solve_height(surf, t + h, x) - solve_height(surf, t - h, x)) / (2 * h)
    assert np.max(np.abs(fd_dt - ev.dt)) < 1e-7
    for k in range(x.shape[1]):
        dxk = np.zeros_like(x)
        dxk[:, k] = h
        fd_g = (solve_height(surf, t, x + dxk) - solve_height(surf, t, x - dxk)) / (2 * h)
        assert np.max(np.abs(fd_g - ev.grad[:, k])) < 1e-7
        # hessian and mixed time derivative against FD of the analytic gradient
        evp = evaluate(surf, t, x + dxk)
        evm = evaluate(surf, t, x - dxk)
        fd_h = (evp.grad - evm.grad) / (2 * h)
        assert np.max(np.abs(fd_h - ev.hess[:, k, :])) < 1e-6
        fd_gdt = (evp.dt - evm.dt) / (2 * h)
        assert np.max(np.abs(fd_gdt - ev.grad_dt[:, k])) < 1e-6


def test_flatness_identity_and_derivatives(triple):
    surf = phi_surface(triple)
    rng = np.random.default_rng(3)
    t, x = rand_points(rng, triple, 50, scale=2.0)
    ev = evaluate(surf, t, x)
    # identity 1 - sum w^2 against the explicit pair sum
    pair_sum = np.einsum("ap,bp->p", ev.weights, ev.weights) - np.sum(ev.weights**2, axis=0)
    assert np.max(np.abs(ev.flatness - pair_sum)) < 1e-14
    h = 1e-5
    fd_dt = (flatness(surf, t + h, x) - flatness(surf, t - h, x)) / (2 * h)
    assert np.max(np.abs(fd_dt - ev.flatness_dt)) < 1e-6
    lap = np.zeros(x.shape[0])
    for k in range(x.shape[1]):
        dxk = np.zeros_like(x)
        dxk[:, k] = h
        lap += (flatness(surf, t, x + dxk) - 2 * flatness(surf, t, x) + flatness(surf, t, x - dxk)) / h**2
    assert np.max(np.abs(lap - ev.flatness_lap)) < 2e-4


def test_hessian_positive_semidefinite(pair, triple, pyramid):
    rng = np.random.default_rng(4)
    for arr in (pair, triple, pyramid):
        surf = phi_surface(arr)
        t, x = rand_points(rng, arr, 500)
        ev = evaluate(surf, t, x)
        eigs = np.linalg.eigvalsh(ev.hess)
        assert eigs.min() >= -1e-10


def test_speed_excess_stable_formula(pair):
    surf = phi_surface(pair)
    rng = np.random.default_rng(5)
    t, x = rand_points(rng, pair, 200, scale=2.0)
    ev = evaluate(surf, t, x)
    direct = ev.dt / np.sqrt(1.0 + np.sum(ev.grad**2, axis=1)) - CF
    assert np.max(np.abs(direct - ev.speed_excess)) < 1e-10
    # bounded ratio against the flatness (finite positive constants)
    ratio = ev.speed_excess / ev.flatness
    assert np.all(ratio > 0.0)
    assert ratio.max() / ratio.min() < 10.0


def test_speed_excess_far_field_no_cancellation(pair):
    surf = phi_surface(pair)
    # far from the ridge both excess and flatness underflow smoothly; their
    # ratio stays near c_f / (den (den+1)) with den -> 1
    x = np.array([[40.0]])
    ev = evaluate(surf, 0.0, x)
    assert ev.flatness[0] < 1e-20
    ratio = ev.speed_excess[0] / ev.flatness[0]
    assert ratio == pytest.approx(CF / 2.0, rel=1e-6)


def test_exponential_approach_to_boundary(pair):
    # gap to the piecewise-plane boundary decays exponentially in the
    # ridge distance along a facet-interior ray
    surf = phi_surface(pair)
    xs = np.linspace(2.0, 14.0, 25)[:, None]
    y = solve_height(surf, 0.0, xs)
    psi = np.abs(xs[:, 0]) / np.tan(np.pi / 4)  # boundary height at tau=0, t=0
    gap = y - psi
    d = ridge_distance_proxy(pair, 0.0, xs, y)
    mask = gap > 1e-14
    slope, intercept = np.polyfit(d[mask], np.log(gap[mask]), 1)
    pred = slope * d[mask] + intercept
    ss_res = np.sum((np.log(gap[mask]) - pred) ** 2)
    ss_tot = np.sum((np.log(gap[mask]) - np.log(gap[mask]).mean()) ** 2)
    assert slope < 0.0
    assert 1.0 - ss_res / ss_tot >= 0.99


def test_gap_sandwich_by_offfacet_weights(triple):
    # (height - plane max) stays within constant multiples of the sum of
    # the other fronts' weights, sampled over one facet's interior
    surf = phi_surface(triple)
    rng = np.random.default_rng(6)
    xs = rng.uniform(3.0, 12.0, size=(200, 1))
    t = 0.0
    y, w = solve_height(surf, t, xs, return_weights=True)
    heights = -(surf.A @ xs.T + surf.D[:, None]) / surf.B[:, None]
    dominant = heights.argmax(axis=0)
    gap = y - heights.max(axis=0)
    others = w.sum(axis=0) - w[dominant, np.arange(len(xs))]
    ratio = gap / others
    good = others > 1e-250
    assert np.all(ratio[good] > 0.1) and np.all(ratio[good] < 10.0)


def test_translation_covariance_via_time_shift(triple):
    # shifting every tau by delta equals evaluating at t - delta/c_f
    delta = 0.37
    shifted = FrontArrangement(N=2, nu=triple.nu, theta=triple.theta,
                               tau=triple.tau + delta, c_f=triple.c_f)
    s1 = phi_surface(shifted)
    s0 = phi_surface(triple)
    rng = np.random.default_rng(7)
    t, x = rand_points(rng, triple, 50)
    y1 = solve_height(s1, t, x)
    y0 = solve_height(s0, t - delta / CF, x)
    assert np.max(np.abs(y1 - y0)) < 1e-12


def test_facet_surface_single_front():
    arr = FrontArrangement(N=2, nu=np.array([[1.0]]), theta=np.array([0.9]),
                           tau=np.array([0.4]), c_f=CF)
    from front_forge.geometry import RotatedFamily

    fam = RotatedFamily(i=0, gamma=np.array([1.0]), lam=np.array([0.0]))
    surf = psi_surface(arr, fam)
    t, x = 0.7, np.array([[1.3]])
    y = solve_height(surf, t, x)
    plane = (CF * t - 0.4 - 1.3 * np.cos(0.9)) / np.sin(0.9)
    assert y[0] == pytest.approx(plane, abs=1e-12)
    ev = evaluate(surf, t, x)
    assert ev.dt[0] == pytest.approx(CF / np.sin(0.9), abs=1e-12)
    assert ev.flatness[0] == 0.0


def test_facet_surface_properties(triple):
    rng = np.random.default_rng(8)
    for i in range(triple.n):
        fam = choose_rotation_weights(triple, i)
        surf = psi_surface(triple, fam)
        t, x = rand_points(rng, triple, 300)
        y, w = solve_height(surf, t, x, return_weights=True)
        assert np.max(np.abs(w.sum(axis=0) - 1.0)) <= 1e-12
        # sits below the i-th plane
        e = triple.e[i]
        plane = (CF * t - triple.tau[i] - x @ e[:-1]) / e[-1]
        assert np.max(y - plane) <= 1e-12
        ev = evaluate(surf, t, x)
        # mirrored surface is concave
        eigs = np.linalg.eigvalsh(ev.hess)
        assert eigs.max() <= 1e-10
        # speed deficit positive, ratio to flatness bounded
        direct = CF - ev.dt / np.sqrt(1.0 + np.sum(ev.grad**2, axis=1))
        assert np.max(np.abs(direct - ev.speed_excess)) < 1e-10
        good = ev.flatness > 1e-250
        ratio = ev.speed_excess[good] / ev.flatness[good]
        assert np.all(ratio > 0.0)
        assert ev.flatness.max() <= triple.n**2


def test_facet_derivatives_match_fd(triple):
    fam = choose_rotation_weights(triple, 0)
    surf = psi_surface(triple, fam)
    rng = np.random.default_rng(9)
    t, x = rand_points(rng, triple, 40, scale=2.0)
    ev = evaluate(surf, t, x)
    h = 1e-5
    fd_dt = (solve_height(surf, t + h, x) - solve_height(surf, t - h, x)) / (2 * h)
    assert np.max(np.abs(fd_dt - ev.dt)) < 1e-7
    dxk = np.full_like(x, h)
    fd_g = (solve_height(surf, t, x + dxk) - solve_height(surf, t, x - dxk)) / (2 * h)
    assert np.max(np.abs(fd_g - ev.grad[:, 0])) < 1e-7


def test_local_frame_matches_direct(triple):
    surf = phi_surface(triple, tau_scale=1.0)
    loc = SurfaceLocal(surf, t0=0.4, x0=np.array([1.1]))
    for dt, dx in ((0.0, 0.0), (1e-3, 0.0), (0.0, -2e-3), (5e-4, 7e-4)):
        D, ww, grad2, flat = loc.eval(dt, np.array([dx]))
        y_direct = solve_height(surf, 0.4 + dt, np.array([[1.1 + dx]]))
        assert loc.y0 + D == pytest.approx(y_direct[0], abs=1e-12)
        ev = evaluate(surf, 0.4 + dt, np.array([[1.1 + dx]]))
        assert grad2 == pytest.approx(float(np.sum(ev.grad**2)), abs=1e-11)
        assert flat == pytest.approx(ev.flatness[0], abs=1e-12)


def test_local_frame_increment_precision(pair):
    # differences of nearby height increments are smooth at the 1e-22 level,
    # far below what independent absolute solves could resolve
    surf = phi_surface(pair)
    loc = SurfaceLocal(surf, t0=0.0, x0=np.array([0.3]))
    h = 1e-7
    d2 = loc.delta(0.0, np.array([h]))[0] - 2 * loc.delta(0.0, np.array([0.0]))[0] + loc.delta(0.0, np.array([-h]))[0]
    ev = evaluate(surf, 0.0, np.array([[0.3]]))
    assert d2 / h**2 == pytest.approx(ev.hess[0, 0, 0], rel=1e-4)
