import numpy as np
import pytest
from sklearn.exceptions import ConvergenceWarning, NotFittedError

from entropic_bb.bridge import build_path
from entropic_bb.errors import DegenerateMarginal, PlanTooLarge
from entropic_bb.grid import Field, Grid, quadrature
from entropic_bb.oracle import gaussian_example
from entropic_bb.schrodinger import (
    SinkhornReport,
    SinkhornSolver,
    gauge_fix,
    plan_entropy_direct,
    plan_marginals,
    relative_entropy_lebesgue,
    sinkhorn_solve,
    sinkhorn_sweep,
    static_entropic_cost,
    unit_mass_gauge,
)


def test_example_converges(gauss):
    assert gauss.report.converged
    assert gauss.report.final_error <= 1e-12
    # errors decrease overall
    h = gauss.report.marginal_error_history
    assert h[-1] < h[0]


def test_log_g_is_affine(gauss):
    x = gauss.grid.axes[0]
    lg = gauss.pp.log_g.values
    inner = (x > -6) & (x < 8)
    d2 = np.diff(lg, 2)[inner[1:-1]]
    assert np.max(np.abs(d2)) <= 1e-4
    slope = np.diff(lg)[inner[:-1]] / gauss.grid.spacing[0]
    assert np.allclose(slope, 1.0, atol=1e-6)


def test_gauge_is_fixed(gauss):
    val = quadrature(Field(gauss.grid, gauss.pp.log_f.values * gauss.rho0.values))
    assert abs(val) < 1e-12


def test_static_cost_matches_plan_entropy(gauss):
    cost = static_entropic_cost(gauss.pp, gauss.rho0, gauss.rho1)
    direct = plan_entropy_direct(gauss.pp)
    assert direct == pytest.approx(cost, rel=1e-6)


def test_plan_marginals(gauss):
    m0, m1 = plan_marginals(gauss.pp)
    assert np.max(np.abs(m0.values - gauss.rho0.values)) < 1e-10
    assert np.max(np.abs(m1.values - gauss.rho1.values)) < 1e-10


def test_gauge_invariance(gauss):
    shifted = gauss.pp.shifted(2.5)
    assert static_entropic_cost(shifted, gauss.rho0, gauss.rho1) == pytest.approx(
        static_entropic_cost(gauss.pp, gauss.rho0, gauss.rho1), abs=1e-10
    )
    a = build_path(gauss.pp, 4)
    b = build_path(shifted, 4)
    for sa, sb in zip(a.slices, b.slices):
        assert np.allclose(sa.rho_t.values, sb.rho_t.values, rtol=1e-12, atol=1e-300)
        assert np.allclose(sa.v_t.as_array(), sb.v_t.as_array(), atol=1e-9)
    back = gauge_fix(shifted, gauss.rho0)
    assert np.allclose(back.log_f.values, gauss.pp.log_f.values, atol=1e-12)


def test_unit_mass_gauge(gauss):
    pp = unit_mass_gauge(gauss.pp)
    assert quadrature(Field(gauss.grid, np.exp(pp.log_f.values))) == pytest.approx(1.0)
    # f is the N(0, 1) density in that gauge
    x = gauss.grid.axes[0]
    inner = np.abs(x) < 6
    assert np.allclose(pp.log_f.values[inner], gaussian_example().log_f(x[inner]), atol=1e-8)


def test_sweep_is_fixed_point(gauss):
    again = sinkhorn_sweep(gauss.pp, gauss.rho0, gauss.rho1)
    x = gauss.grid.axes[0]
    inner = np.abs(x) < 8
    diff = again.log_f.values - gauss.pp.log_f.values
    assert np.ptp(diff[inner]) < 1e-9


def test_relative_entropy_of_standard_normal():
    g = Grid.uniform(-12.0, 12.0, 1201)
    rho = Field.from_function(g, lambda x: np.exp(-x ** 2 / 2) / np.sqrt(2 * np.pi), "density")
    assert relative_entropy_lebesgue(rho) == pytest.approx(-0.5 * np.log(2 * np.pi * np.e), rel=1e-10)


def test_degenerate_marginal():
    g = Grid.uniform(-5.0, 5.0, 64)
    rho = np.exp(-g.axes[0] ** 2 / 2)
    rho[10] = 0.0
    rho0 = Field(g, rho / quadrature(Field(g, rho)))
    ok = Field(g, np.exp(-g.axes[0] ** 2 / 2) / np.sqrt(2 * np.pi))
    with pytest.raises(DegenerateMarginal):
        sinkhorn_solve(rho0, ok, 1.0)


def test_plan_too_large():
    g = Grid.uniform(-5.0, 5.0, 2049)
    rho = Field(g, np.exp(-g.axes[0] ** 2 / 2) / np.sqrt(2 * np.pi))
    pp, _ = sinkhorn_solve(rho, rho, 1.0, tol=1e-6)
    with pytest.raises(PlanTooLarge):
        plan_entropy_direct(pp)


def test_non_convergence_reported():
    cf = gaussian_example()
    g = Grid.uniform(-14.0, 16.0, 256)
    r0 = Field.from_function(g, cf.rho0, "density")
    r1 = Field.from_function(g, cf.rho1, "density")
    _, rep = sinkhorn_solve(r0, r1, 1.0, tol=1e-15, max_iter=5)
    assert not rep.converged and rep.iterations == 5
    assert len(rep.marginal_error_history) == 5


def test_report_csv(tmp_path):
    rep = SinkhornReport(2, [0.5, 0.25], True)
    text = rep.to_csv(tmp_path / "r.csv").read_text().splitlines()
    assert text == ["iteration,error", "1,0.5", "2,0.25"]


def test_estimator_api():
    cf = gaussian_example()
    g = Grid.uniform(-14.0, 16.0, 256)
    r0 = Field.from_function(g, cf.rho0, "density")
    r1 = Field.from_function(g, cf.rho1, "density")
    est = SinkhornSolver(epsilon=1.0, tol=1e-10, n_times=8)
    assert est.get_params()["n_times"] == 8
    with pytest.raises(NotFittedError):
        est.entropic_cost()
    est.fit(r0, r1)
    assert est.report_.converged
    assert len(est.path()) == 9
    sl = est.interpolate(0.5)
    assert sl.mass() == pytest.approx(1.0, abs=1e-8)
    est.set_params(max_iter=2, tol=1e-15)
    with pytest.warns(ConvergenceWarning):
        est.fit(r0, r1)
