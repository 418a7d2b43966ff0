import numpy as np
import pytest

from entropic_bb.bridge import BridgePath, BridgeSlice
from entropic_bb.certify.bounds import hessian_bounds_endpoint, tail_envelope
from entropic_bb.certify.checks import (
    check_gaussian_tail,
    check_gradient_growth,
    check_gradient_growth_path,
    check_hessian_sandwich,
    check_hessian_sandwich_path,
    check_polynomial_moments,
    check_tail_ode,
    envelope_for_path,
    hessian_slack,
    signed_moment,
    slice_moments,
    tail_mass,
)
from entropic_bb.errors import OriginNotInGrid, RadiusOutsideGrid
from entropic_bb.grid import Field, Grid

from conftest import CERT_TOL


def test_sandwich_gaussian(gauss):
    hb = hessian_bounds_endpoint(2.0, 1.0)
    rep = check_hessian_sandwich_path(gauss.path, hb, hessian_slack(gauss.grid, CERT_TOL))
    assert rep.passed
    end = check_hessian_sandwich(gauss.path[-1], hb, 1e-6)
    assert abs(end.metadata["hessian_max"]) < 1e-6
    assert end.metadata["lower"] == pytest.approx(hb.m_eps)


def test_sandwich_mixture_records_violation(mixture):
    # D^2 psi_1 = sech^2 reaches 1, far above M = 0.236
    hb = hessian_bounds_endpoint(2.0, 1.0)
    rep = check_hessian_sandwich(mixture.path[-1], hb, hessian_slack(mixture.grid, CERT_TOL))
    assert not rep.passed
    assert rep.metadata["hessian_max"] == pytest.approx(1.0, abs=1e-3)
    assert rep.lhs == pytest.approx(1.0 - hb.M_eps, abs=1e-3)


def test_sandwich_affine_always_passes(gauss):
    sl = gauss.path[10]
    psi = sl.psi_t.with_values(3.0 * gauss.grid.axes[0] - 7.0)
    hb = hessian_bounds_endpoint(5.0, 0.5)
    assert check_hessian_sandwich(BridgeSlice.from_potential(sl.t, sl.rho_t, psi), hb, 1e-8).passed


def test_gradient_growth(gauss, mixture):
    hb = hessian_bounds_endpoint(2.0, 1.0)
    rep = check_gradient_growth(gauss.path[20], hb.growth_at(gauss.path[20].t))
    assert rep.passed and rep.metadata["b_t"] == pytest.approx(1.0, abs=1e-9)
    assert check_gradient_growth_path(gauss.path, hb).passed
    assert check_gradient_growth_path(mixture.path, hessian_bounds_endpoint(20.0, 1.0)).passed
    # with C = 2 the growth coefficient at t = 1 is too small for tanh
    assert not check_gradient_growth_path(mixture.path, hb).passed


def test_gradient_growth_constant_potential(gauss):
    sl = gauss.path[5]
    flat = BridgeSlice.from_potential(sl.t, sl.rho_t, sl.psi_t.with_values(np.full(gauss.grid.shape, 2.0)))
    rep = check_gradient_growth(flat, 0.0)
    assert rep.passed and rep.metadata["b_t"] == 0.0


def test_origin_not_in_grid():
    g = Grid.uniform(1.0, 5.0, 16)
    rho = Field(g, np.ones(16), "density")
    sl = BridgeSlice.from_potential(0.5, rho, Field(g, g.axes[0]))
    with pytest.raises(OriginNotInGrid):
        check_gradient_growth(sl, 1.0)


def test_gaussian_tails(gauss_wide, mixture_wide):
    for s, C in ((gauss_wide, 2.0), (mixture_wide, 20.0)):
        hb = hessian_bounds_endpoint(C, 1.0)
        env = envelope_for_path(s.path, hb, 1 / (4 * C))
        assert env.I >= 1.0 - 1e-9
        for rep in check_gaussian_tail(s.path, env, [4, 6, 8]):
            assert rep.passed, rep.summary()
        assert check_tail_ode(env).passed


def test_gaussian_tail_small_k(gauss_wide):
    env = envelope_for_path(gauss_wide.path, hessian_bounds_endpoint(2.0, 1.0), 0.05)
    reports = check_gaussian_tail(gauss_wide.path, env, [4, 6, 8])
    assert all(r.passed for r in reports)


def test_tail_mass_matches_normal_cdf(gauss_wide):
    from scipy.stats import norm

    # rho_1 = N(2, 2): mass outside [-R, R]
    R = 4.0
    exact = norm.sf(R, 2, np.sqrt(2)) + norm.cdf(-R, 2, np.sqrt(2))
    # the sharp mask is first order: error up to one cell of density at |x| = R
    h = gauss_wide.grid.spacing[0]
    assert tail_mass(gauss_wide.path[-1], R) == pytest.approx(exact, abs=h * norm.pdf(R, 2, np.sqrt(2)))


def test_tail_radius_zero(gauss_wide):
    env = envelope_for_path(gauss_wide.path, hessian_bounds_endpoint(2.0, 1.0), 0.125)
    rep = check_gaussian_tail(gauss_wide.path, env, [0.0])[0]
    assert rep.lhs == pytest.approx(1.0, abs=1e-6) and rep.passed


def test_tail_radius_outside_grid(gauss):
    env = envelope_for_path(gauss.path, hessian_bounds_endpoint(2.0, 1.0), 0.125)
    with pytest.raises(RadiusOutsideGrid):
        check_gaussian_tail(gauss.path, env, [8.0])


def test_tail_needs_moment_constant(gauss_wide):
    with pytest.raises(ValueError):
        check_gaussian_tail(gauss_wide.path, tail_envelope(0.1, 1.0, 1.0), [4.0])


def test_peaked_density_tail():
    g = Grid.uniform(-10.0, 10.0, 2001)
    x = g.axes[0]
    rho = np.exp(-x ** 2 / (2 * 0.01))
    rho = Field(g, rho / (rho.sum() * g.spacing[0]), "density")
    sl = BridgeSlice.from_potential(0.0, rho, Field(g, np.zeros_like(x)))
    sl1 = BridgeSlice.from_potential(1.0, rho, Field(g, np.zeros_like(x)))
    path = BridgePath(1.0, (sl, sl1))
    env = tail_envelope(0.1, 1.0, 1.0)
    from entropic_bb.grid import quadrature

    I = max(quadrature(Field(g, np.exp(env.W(t) * x ** 2) * rho.values)) for t in (0.0, 1.0))
    env = type(env)(env.k, env.A, env.epsilon, I)
    assert all(r.passed for r in check_gaussian_tail(path, env, [1.0, 2.0, 4.0]))


def test_second_moment_of_gaussian_bridge(gauss):
    for sl in gauss.path.slices[::8]:
        t = sl.t
        assert slice_moments(sl, 2)[2] == pytest.approx((1 + t) + (1 + t) ** 2, abs=1e-4)
        assert slice_moments(sl, 0)[0] == pytest.approx(1.0, abs=1e-8)


def test_mixture_odd_moments(mixture_wide):
    for sl in mixture_wide.path.slices[::8]:
        for k in (1, 3, 5):
            assert abs(signed_moment(sl, k)) < 1e-8


def test_polynomial_moments(gauss, mixture):
    assert check_polynomial_moments(gauss.path, 8).passed
    assert check_polynomial_moments(mixture.path, 4).passed
    with pytest.raises(ValueError):
        check_polynomial_moments(gauss.path, 9)
