"""Closed-form entropic bridges used as ground truth (temperature 1).

``gaussian_example``: marginals N(1, 1) and N(2, 2), factors
``f = N(0, 1)`` density and ``g(y) = exp(y - 1)``; the potential is affine.

``mixture_example``: symmetric mixtures of the above, with
``g(y) = (exp(y - 1) + exp(-y - 1)) / 2`` and ``psi_t = log cosh x - (1 + t)/2``.

Everything here is an evaluator of ``(t, x)``, so it can be sampled at any
resolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .certify.report import CertificateReport

LOG_2PI = np.log(2.0 * np.pi)


def normal_pdf(x, mean, var):
    x = np.asarray(x, dtype=float)
    return np.exp(-((x - mean) ** 2) / (2.0 * var)) / np.sqrt(2.0 * np.pi * var)


def normal_log_pdf(x, mean, var):
    x = np.asarray(x, dtype=float)
    return -((x - mean) ** 2) / (2.0 * var) - 0.5 * np.log(2.0 * np.pi * var)


def _d_var_mean_pdf(x, s, sign=1.0):
    """d/ds of the N(sign*s, s) density."""
    x = np.asarray(x, dtype=float)
    z = x - sign * s
    return normal_pdf(x, sign * s, s) * (-0.5 / s + sign * z / s + z ** 2 / (2.0 * s ** 2))


@dataclass(frozen=True)
class ClosedFormBridge:
    name: str
    f_t: Callable
    g_t: Callable
    rho_t: Callable
    psi_t: Callable
    grad_psi_t: Callable
    dt_psi_t: Callable
    dt_rho_t: Callable
    log_f: Callable
    log_g: Callable
    epsilon: float = 1.0

    def rho0(self, x):
        return self.rho_t(0.0, x)

    def rho1(self, x):
        return self.rho_t(1.0, x)

    def dt_psi_rho(self, t, x):
        """Time derivative of ``psi_t * rho_t``."""
        return self.psi_t(t, x) * self.dt_rho_t(t, x) + self.rho_t(t, x) * self.dt_psi_t(t, x)


def gaussian_example() -> ClosedFormBridge:
    return ClosedFormBridge(
        name="gaussian_example",
        f_t=lambda t, x: normal_pdf(x, 0.0, 1.0 + t),
        g_t=lambda t, x: np.exp(np.asarray(x, dtype=float) - (1.0 + t) / 2.0),
        rho_t=lambda t, x: normal_pdf(x, 1.0 + t, 1.0 + t),
        psi_t=lambda t, x: np.asarray(x, dtype=float) - (1.0 + t) / 2.0,
        grad_psi_t=lambda t, x: np.ones_like(np.asarray(x, dtype=float)),
        dt_psi_t=lambda t, x: np.full_like(np.asarray(x, dtype=float), -0.5),
        dt_rho_t=lambda t, x: _d_var_mean_pdf(x, 1.0 + t),
        log_f=lambda x: normal_log_pdf(x, 0.0, 1.0),
        log_g=lambda y: np.asarray(y, dtype=float) - 1.0,
    )


def _mixture_psi(t, x):
    x = np.asarray(x, dtype=float)
    c = (1.0 + t) / 2.0
    return -np.log(2.0) + np.logaddexp(x - c, -x - c)


def mixture_example() -> ClosedFormBridge:
    return ClosedFormBridge(
        name="mixture_example",
        f_t=lambda t, x: normal_pdf(x, 0.0, 1.0 + t),
        g_t=lambda t, x: np.exp(_mixture_psi(t, x)),
        rho_t=lambda t, x: 0.5 * (normal_pdf(x, 1.0 + t, 1.0 + t) + normal_pdf(x, -(1.0 + t), 1.0 + t)),
        psi_t=_mixture_psi,
        grad_psi_t=lambda t, x: np.tanh(np.asarray(x, dtype=float)),
        dt_psi_t=lambda t, x: np.full_like(np.asarray(x, dtype=float), -0.5),
        dt_rho_t=lambda t, x: 0.5 * (_d_var_mean_pdf(x, 1.0 + t) + _d_var_mean_pdf(x, 1.0 + t, -1.0)),
        log_f=lambda x: normal_log_pdf(x, 0.0, 1.0),
        log_g=lambda y: _mixture_psi(1.0, y),
    )


EXAMPLES = {"gaussian_example": gaussian_example, "mixture_example": mixture_example}


def domination_holds(cf: ClosedFormBridge, ts, xs) -> bool:
    """Check ``|d/dt (psi_t rho_t)(x)| <= 4 exp(-x^2/100)`` on a sample set."""
    xs = np.asarray(xs, dtype=float)
    bound = 4.0 * np.exp(-xs ** 2 / 100.0)
    return all(bool(np.all(np.abs(cf.dt_psi_rho(t, xs)) <= bound)) for t in ts)


def _trapezoid_weights(x: np.ndarray) -> np.ndarray:
    w = np.full(x.size, x[1] - x[0])
    w[0] = w[-1] = 0.5 * (x[1] - x[0])
    return w


def oracle_identity_check(
    cf: ClosedFormBridge,
    psi_perturbation: float = 0.0,
    tolerance: float = 1e-6,
    half_width: float = 40.0,
    n_space: int = 16001,
    n_time: int = 24,
) -> CertificateReport:
    """Both sides of the entropic Benamou-Brenier identity from closed forms.

    Left: ``int log f drho0 + int log g drho1``. Right: ``int rho0 log rho0``
    plus the kinetic action of ``grad psi_t`` (trapezoid in space on a wide
    window, Gauss-Legendre in time). ``psi_perturbation = a`` replaces
    ``psi_t`` by ``psi_t + a x^2`` on the kinetic side (a negative control).
    """
    x = np.linspace(-half_width, half_width, n_space)
    w = _trapezoid_weights(x)
    rho0 = cf.rho0(x)
    rho1 = cf.rho1(x)
    lhs = float(w @ (cf.log_f(x) * rho0) + w @ (cf.log_g(x) * rho1))
    entropy0 = float(w @ (rho0 * np.log(np.where(rho0 > 0, rho0, 1.0))))

    nodes, weights = np.polynomial.legendre.leggauss(n_time)
    ts = 0.5 * (nodes + 1.0)
    wt = 0.5 * weights
    kinetic = 0.0
    for t, wk in zip(ts, wt):
        v = cf.grad_psi_t(t, x) + 2.0 * psi_perturbation * x
        kinetic += wk * float(w @ (0.5 * v ** 2 * cf.rho_t(t, x)))
    rhs = entropy0 + kinetic
    return CertificateReport.equality(
        f"oracle_identity[{cf.name}]", lhs, rhs, tolerance,
        entropy0=entropy0, kinetic=kinetic, epsilon=cf.epsilon,
        psi_perturbation=psi_perturbation,
    )
