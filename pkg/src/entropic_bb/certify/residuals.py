"""Weak Fokker-Planck residuals, the HJB residual and the dual lift.

The Fokker-Planck pair ``(rho_t, v_t)`` must satisfy, for every test function,

    int_0^1 int (d_t phi + c lap phi + v . grad phi) rho_t dx dt
        = int phi_1 rho_1 - int phi_0 rho_0,        c = eps / 2.

Test functions are separable, ``phi(t, x) = tau(t) s(x)``, with analytic
derivatives in both variables, so the only discretization error is in
``v_t`` and the quadratures.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..bridge import BridgePath, BridgeSlice, _simpson_uniform
from ..errors import TooFewSlices
from ..grid import Field, laplacian, quadrature
from ..heatflow import log_convolve
from .bounds import cutoff, cutoff_derivatives
from .checks import certification_window
from .report import CertificateReport

FP_TOLERANCE = 5e-3
HJB_TOLERANCE = 5e-3


@dataclass(frozen=True)
class TestFunction:
    """Separable test function ``tau(t) s(x)``.

    ``spatial(points)`` returns ``(s, grad s, lap s)`` for points of shape
    ``(..., n)``; ``temporal(t)`` returns ``(tau, tau')``.
    """

    __test__ = False  # not a pytest class

    name: str
    spatial: Callable
    temporal: Callable

    def evaluate(self, grid, t: float):
        s, ds, lap = self.spatial(grid.points())
        tau, dtau = self.temporal(t)
        return tau * s, dtau * s, tau * ds, tau * lap

    def scale(self, grid, times) -> float:
        s = np.max(np.abs(self.spatial(grid.points())[0]))
        tau = max(abs(self.temporal(t)[0]) for t in times)
        return float(s * tau)


# spatial parts ---------------------------------------------------------------


def _constant(points):
    shape = points.shape[:-1]
    return np.ones(shape), np.zeros(points.shape), np.zeros(shape)


def _cutoff_part(R):
    def part(points):
        grad, lap = cutoff_derivatives(points, R)
        return cutoff(points, R), grad, lap
    return part


def _poly_cutoff(R, axis, power):
    """``x_axis^power * zeta_R``."""
    def part(points):
        z = cutoff(points, R)
        dz, lz = cutoff_derivatives(points, R)
        x = points[..., axis]
        p = x ** power
        dp = power * x ** (power - 1) if power >= 1 else np.zeros_like(x)
        ddp = power * (power - 1) * x ** (power - 2) if power >= 2 else np.zeros_like(x)
        grad = p[..., None] * dz
        grad[..., axis] += dp * z
        lap = ddp * z + 2.0 * dp * dz[..., axis] + p * lz
        return p * z, grad, lap
    return part


def _bump(center, width):
    center = np.atleast_1d(np.asarray(center, dtype=float))

    def part(points):
        d = points - center[: points.shape[-1]]
        q = np.sum(d ** 2, axis=-1)
        s = np.exp(-q / (2.0 * width ** 2))
        grad = -(d / width ** 2) * s[..., None]
        n = points.shape[-1]
        lap = (q / width ** 4 - n / width ** 2) * s
        return s, grad, lap
    return part


# time parts ------------------------------------------------------------------


def _steady(t):
    return 1.0, 0.0


def _linear(t):
    return t, 1.0


def _sine(t):
    return np.sin(np.pi * t), np.pi * np.cos(np.pi * t)


def _cosine(t):
    return np.cos(0.5 * np.pi * t), -0.5 * np.pi * np.sin(0.5 * np.pi * t)


def default_test_family(R: float = 4.0, centers=(-1.0, 0.0, 1.5)) -> list[TestFunction]:
    """Twelve test functions: constants, cutoffs, cutoff polynomials and
    Gaussian bumps, with steady, linear and oscillating time factors."""
    fam = [
        TestFunction("one", _constant, _steady),
        TestFunction(f"zeta_{R:g}", _cutoff_part(R), _steady),
        TestFunction(f"x*zeta_{R:g}", _poly_cutoff(R, 0, 1), _steady),
        TestFunction(f"x^2*zeta_{R:g}", _poly_cutoff(R, 0, 2), _steady),
        TestFunction(f"t*x*zeta_{R:g}", _poly_cutoff(R, 0, 1), _linear),
        TestFunction(f"sin(pi t)*x^2*zeta_{R:g}", _poly_cutoff(R, 0, 2), _sine),
        TestFunction(f"cos(pi t/2)*zeta_{2 * R:g}", _cutoff_part(2 * R), _cosine),
    ]
    for c in centers:
        fam.append(TestFunction(f"bump({c:g},1)", _bump([c, 0.0], 1.0), _steady))
    fam.append(TestFunction("t*bump(0.5,0.7)", _bump([0.5, 0.0], 0.7), _linear))
    fam.append(TestFunction("sin(pi t)*bump(2,1.5)", _bump([2.0, 0.0], 1.5), _sine))
    return fam


def fp_weak_sides(path: BridgePath, phi: TestFunction, epsilon: float | None = None) -> tuple[float, float]:
    """``(space-time integral, boundary difference)`` of the weak FP identity."""
    eps = path.epsilon if epsilon is None else float(epsilon)
    c = 0.5 * eps
    integrand = []
    for s in path.slices:
        _, dt, grad, lap = phi.evaluate(s.grid, s.t)
        drift = np.sum(s.v_t.as_array() * grad, axis=-1)
        integrand.append(quadrature(Field(s.grid, (dt + c * lap + drift) * s.rho_t.values)))
    lhs = _simpson_uniform(np.array(integrand), path.times)
    first, last = path.slices[0], path.slices[-1]
    rhs = (
        quadrature(Field(last.grid, phi.evaluate(last.grid, last.t)[0] * last.rho_t.values))
        - quadrature(Field(first.grid, phi.evaluate(first.grid, first.t)[0] * first.rho_t.values))
    )
    return lhs, float(rhs)


def fp_weak_residual(
    path: BridgePath, epsilon: float | None = None, test_fns=None, tol: float = FP_TOLERANCE,
) -> list[CertificateReport]:
    """One report per test function; each passes iff
    ``|lhs - rhs| <= tol * max(1, scale)`` with ``scale = sup |phi|`` on the grid."""
    test_fns = default_test_family() if test_fns is None else list(test_fns)
    eps = path.epsilon if epsilon is None else float(epsilon)
    out = []
    for phi in test_fns:
        lhs, rhs = fp_weak_sides(path, phi, eps)
        scale = phi.scale(path.grid, path.times)
        bound = tol * max(1.0, scale)
        out.append(CertificateReport.upper_bound(
            f"fp_weak[{phi.name}]", abs(lhs - rhs), 0.0, bound,
            space_time=lhs, boundary=rhs, scale=scale,
            npts=path.grid.size, M=len(path) - 1, epsilon=eps,
        ))
    return out


# -- HJB ----------------------------------------------------------------------


def hjb_residual_field(prev: BridgeSlice, cur: BridgeSlice, nxt: BridgeSlice, epsilon: float) -> np.ndarray:
    """``d_t psi + eps/2 lap psi + |grad psi|^2 / 2`` at the middle slice,
    with a centred time difference."""
    dt_psi = (nxt.psi_t.values - prev.psi_t.values) / (nxt.t - prev.t)
    lap = laplacian(cur.psi_t).values
    return dt_psi + 0.5 * epsilon * lap + 0.5 * cur.v_t.squared_norm().values


def hjb_residual(path: BridgePath, epsilon: float | None = None, tol: float = HJB_TOLERANCE) -> CertificateReport:
    """Max over interior slices of the ``rho_t``-weighted L2 residual of HJB.

    The weighted norm is ``sqrt(int_W r^2 rho_t / int_W rho_t)`` over each
    slice's certification window ``W``; endpoint slices are skipped.
    """
    if len(path) < 3:
        raise TooFewSlices(f"HJB residual needs at least 3 slices, got {len(path)}")
    eps = path.epsilon if epsilon is None else float(epsilon)
    worst, worst_t = 0.0, float("nan")
    for j in range(1, len(path) - 1):
        cur = path[j]
        r = hjb_residual_field(path[j - 1], cur, path[j + 1], eps)
        mask = certification_window(cur)
        rho = cur.rho_t
        num = quadrature(Field(cur.grid, r ** 2 * rho.values), mask)
        den = quadrature(rho, mask)
        value = float(np.sqrt(num / den))
        if value > worst or not np.isfinite(worst_t):
            worst, worst_t = value, cur.t
    return CertificateReport.upper_bound(
        "hjb_residual", worst, 0.0, tol,
        worst_t=worst_t, npts=path.grid.size, M=len(path) - 1, epsilon=eps,
    )


# -- dual lift ----------------------------------------------------------------


def _log_truncated_datum(f1: Field, epsilon: float, R: float) -> np.ndarray:
    zeta = cutoff(f1.grid.points(), R)
    with np.errstate(divide="ignore"):
        log_zeta = np.log(zeta)
    return np.logaddexp(f1.values / epsilon + log_zeta, -np.log(R))


def dual_lift(f1: Field, epsilon: float, R: float, t: float) -> Field:
    """``f_R(t, x) = eps log int (e^{f1(y)/eps} zeta_R(y) + 1/R) r_{eps(1-t)}(x, y) dy``.

    At ``t = 1`` the truncated datum itself is returned.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    log_datum = _log_truncated_datum(f1, epsilon, R)
    if t < 1.0:
        log_datum = log_convolve(log_datum, f1.grid, epsilon * (1.0 - t))
    return Field(f1.grid, epsilon * log_datum)


def dual_lift_path(f1: Field, epsilon: float, R: float, times) -> BridgePath:
    """HJB solutions ``f_R`` at the given times, as a path with unit placeholder densities."""
    grid = f1.grid
    ones = Field(grid, np.ones(grid.shape), kind="density")
    slices = tuple(BridgeSlice.from_potential(t, ones, dual_lift(f1, epsilon, R, t)) for t in times)
    return BridgePath(float(epsilon), slices)


def dual_value(f1: Field, epsilon: float, R: float, rho0: Field, rho1: Field) -> float:
    """``int f_R(1) drho1 - int f_R(0) drho0``."""
    top = dual_lift(f1, epsilon, R, 1.0)
    bottom = dual_lift(f1, epsilon, R, 0.0)
    return quadrature(Field(rho1.grid, top.values * rho1.values)) - quadrature(
        Field(rho0.grid, bottom.values * rho0.values)
    )


def check_duality(
    f1: Field, epsilon: float, radii, rho0: Field, rho1: Field, kinetic: float,
    tol: float = 1e-3,
) -> list[CertificateReport]:
    """Weak duality ``dual value <= kinetic energy + tol`` for each radius."""
    out = []
    for R in radii:
        v = dual_value(f1, epsilon, float(R), rho0, rho1)
        out.append(CertificateReport.upper_bound(
            f"duality[R={float(R):g}]", v, kinetic, tol,
            R=float(R), npts=f1.grid.size, epsilon=epsilon,
        ))
    return out
