"""Static Schrödinger problem: log-domain Sinkhorn and entropy functionals.

The Schrödinger system is solved for the factors ``(f, g)`` of the optimal
plan ``gamma = f(x) g(y) r_eps(x, y) dx dy`` by alternating exact fits of
the two marginal equations. All updates happen on ``log f`` and ``log g``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator
from sklearn.exceptions import ConvergenceWarning, NotFittedError

from .errors import DegenerateMarginal, PlanTooLarge
from .grid import Field, check_density, check_field, quadrature
from .heatflow import log_convolve

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 10_000
MAX_PLAN_POINTS = 2048


@dataclass(frozen=True, eq=False)
class PotentialPair:
    """Log Schrödinger factors at temperature ``epsilon``.

    ``normalization`` is the log of the constant ``c`` applied through
    ``(f, g) -> (c f, g / c)`` to reach the stored gauge.
    """

    epsilon: float
    log_f: Field
    log_g: Field
    normalization: float = 0.0

    @property
    def grid(self):
        return self.log_f.grid

    def shifted(self, kappa: float) -> "PotentialPair":
        """Apply the gauge move ``log_f += kappa, log_g -= kappa``."""
        return PotentialPair(
            self.epsilon,
            self.log_f.with_values(self.log_f.values + kappa),
            self.log_g.with_values(self.log_g.values - kappa),
            self.normalization + kappa,
        )

    def psi1(self) -> Field:
        """Terminal potential ``eps * log g``."""
        return self.log_g.with_values(self.epsilon * self.log_g.values)


@dataclass
class SinkhornReport:
    iterations: int
    marginal_error_history: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def final_error(self) -> float:
        return self.marginal_error_history[-1]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "error"])
            for i, err in enumerate(self.marginal_error_history, start=1):
                w.writerow([i, repr(float(err))])
        return path


def _log_marginal(rho: Field, name: str) -> np.ndarray:
    values = check_density(rho, name)
    if np.any(values <= 0):
        raise DegenerateMarginal(f"{name} has {int(np.sum(values <= 0))} zero-density cells")
    return np.log(values)


def gauge_fix(pp: PotentialPair, rho0: Field) -> PotentialPair:
    """Shift to the gauge ``int log_f rho0 = 0``."""
    kappa = -quadrature(Field(rho0.grid, pp.log_f.values * rho0.values)) / quadrature(rho0)
    return pp.shifted(kappa)


def unit_mass_gauge(pp: PotentialPair) -> PotentialPair:
    """Shift to the gauge where ``f`` has unit Lebesgue mass."""
    w = pp.grid.weights()
    log_mass = float(logsumexp(pp.log_f.values, b=w))
    return pp.shifted(-log_mass)


def sinkhorn_sweep(pp: PotentialPair, rho0: Field, rho1: Field) -> PotentialPair:
    """One full sweep: refit ``g`` to the second marginal, then ``f`` to the first."""
    grid = pp.grid
    eps = pp.epsilon
    log_g = np.log(rho1.values) - log_convolve(pp.log_f.values, grid, eps)
    log_f = np.log(rho0.values) - log_convolve(log_g, grid, eps)
    return PotentialPair(eps, Field(grid, log_f), Field(grid, log_g), pp.normalization)


def sinkhorn_solve(
    rho0: Field,
    rho1: Field,
    epsilon: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[PotentialPair, SinkhornReport]:
    """Solve the discrete Schrödinger system by log-domain Sinkhorn.

    Each iteration fits ``f`` exactly to the first marginal equation and
    records the sup-norm violation of the second one, measured on log
    densities. The loop stops once that violation is at most ``tol``;
    running out of iterations is reported, not raised.

    Returns
    -------
    pp : PotentialPair
        Factors in the gauge ``int log_f rho0 = 0``.
    report : SinkhornReport
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if rho0.grid != rho1.grid:
        raise ValueError("both marginals must live on the same grid")
    grid = rho0.grid
    log_rho0 = _log_marginal(rho0, "rho0")
    log_rho1 = _log_marginal(rho1, "rho1")

    log_g = np.zeros(grid.shape)
    history: list[float] = []
    converged = False
    for _ in range(int(max_iter)):
        log_f = log_rho0 - log_convolve(log_g, grid, epsilon)
        conv_f = log_convolve(log_f, grid, epsilon)
        err = float(np.max(np.abs(log_g + conv_f - log_rho1)))
        history.append(err)
        if err <= tol:
            converged = True
            break
        log_g = log_rho1 - conv_f
    if not history:
        raise ValueError("max_iter must be at least 1")

    pp = PotentialPair(float(epsilon), Field(grid, log_f), Field(grid, log_g))
    report = SinkhornReport(len(history), history, converged)
    return gauge_fix(pp, rho0), report


def static_entropic_cost(pp: PotentialPair, rho0: Field, rho1: Field) -> float:
    """``H(gamma | R_eps) = int log f drho0 + int log g drho1``; gauge invariant."""
    check_field(pp.log_f, "log_f")
    check_field(pp.log_g, "log_g")
    a = quadrature(Field(rho0.grid, pp.log_f.values * rho0.values))
    b = quadrature(Field(rho1.grid, pp.log_g.values * rho1.values))
    return a + b


def _log_plan(pp: PotentialPair, eps: float) -> np.ndarray:
    grid = pp.grid
    if grid.size > MAX_PLAN_POINTS:
        raise PlanTooLarge(
            f"plan on {grid.size}^2 points exceeds the {MAX_PLAN_POINTS}^2 limit"
        )
    x = grid.points().reshape(grid.size, grid.dim)
    sq = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=-1)
    log_r = -sq / (2 * eps) - 0.5 * grid.dim * np.log(2 * np.pi * eps)
    lf = pp.log_f.values.ravel()
    lg = pp.log_g.values.ravel()
    return lf[:, None] + lg[None, :] + log_r


def transport_plan(pp: PotentialPair) -> np.ndarray:
    """Plan density ``f(x) g(y) r_eps(x, y)`` as an ``(N, N)`` matrix over flat indices."""
    return np.exp(_log_plan(pp, pp.epsilon))


def plan_marginals(pp: PotentialPair) -> tuple[Field, Field]:
    grid = pp.grid
    w = grid.weights().ravel()
    gamma = transport_plan(pp)
    m0 = gamma @ w
    m1 = w @ gamma
    return Field(grid, m0), Field(grid, m1)


def plan_entropy_direct(pp: PotentialPair, epsilon: float | None = None) -> float:
    """Relative entropy of the materialized plan by product-grid quadrature.

    Independent of the marginal constraints: it integrates
    ``log f(x) + log g(y)`` against ``gamma`` on the full product grid.
    """
    eps = pp.epsilon if epsilon is None else float(epsilon)
    w = pp.grid.weights().ravel()
    gamma = np.exp(_log_plan(pp, eps))
    integrand = pp.log_f.values.ravel()[:, None] + pp.log_g.values.ravel()[None, :]
    return float(w @ (gamma * integrand) @ w)


def relative_entropy_lebesgue(rho: Field) -> float:
    """``int rho log rho`` with ``0 log 0 = 0``."""
    values = check_field(rho, "rho")
    pos = values > 0
    integrand = np.zeros_like(values)
    integrand[pos] = values[pos] * np.log(values[pos])
    return quadrature(Field(rho.grid, integrand))


class SinkhornSolver(BaseEstimator):
    """Estimator-style wrapper around :func:`sinkhorn_solve`.

    ``fit(rho0, rho1)`` stores ``potentials_`` and ``report_``; the bridge
    helpers (``interpolate``, ``path``) then build the entropic
    interpolation from the fitted factors.

    Parameters
    ----------
    epsilon : float
        Temperature of the heat-kernel reference.
    tol : float
        Sup-norm tolerance on the log-marginal violation.
    max_iter : int
    n_times : int
        Number of time panels used by :meth:`path` (even).
    """

    def __init__(self, epsilon=1.0, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, n_times=64):
        self.epsilon = epsilon
        self.tol = tol
        self.max_iter = max_iter
        self.n_times = n_times

    def fit(self, rho0: Field, rho1: Field, y=None):
        self.potentials_, self.report_ = sinkhorn_solve(
            rho0, rho1, self.epsilon, self.tol, self.max_iter
        )
        self.rho0_ = rho0
        self.rho1_ = rho1
        if not self.report_.converged:
            warnings.warn(
                f"Sinkhorn stopped after {self.report_.iterations} iterations with "
                f"error {self.report_.final_error:.3g} > tol={self.tol}",
                ConvergenceWarning,
            )
        return self

    def _check_fitted(self):
        if not hasattr(self, "potentials_"):
            raise NotFittedError("call fit(rho0, rho1) first")

    def entropic_cost(self) -> float:
        self._check_fitted()
        return static_entropic_cost(self.potentials_, self.rho0_, self.rho1_)

    def interpolate(self, t: float):
        from .bridge import build_slice

        self._check_fitted()
        return build_slice(self.potentials_, t)

    def path(self, n_times: int | None = None):
        from .bridge import build_path

        self._check_fitted()
        return build_path(self.potentials_, self.n_times if n_times is None else n_times)
