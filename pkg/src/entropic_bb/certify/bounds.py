"""Closed-form bounds: Hessian sandwich constants, their backward propagation,
the Gaussian tail envelope and the smooth radial cutoff."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..errors import (
    BoundBlowUp,
    InvalidAssumptionConstant,
    InvalidEnvelopeParams,
    RadiusTooSmall,
)


@dataclass(frozen=True)
class AssumptionConstants:
    """Two-sided Hessian constant ``C`` of the marginal potentials ``V0, V1``."""

    C: float

    def __post_init__(self):
        if not self.C >= 1.0:
            raise InvalidAssumptionConstant(f"C must be >= 1, got {self.C}")

    @property
    def default_tail_k(self) -> float:
        return 1.0 / (4.0 * self.C)


@dataclass(frozen=True)
class HessianBounds:
    m_eps: float
    M_eps: float
    a_eps: float
    b_eps: float = float("nan")
    c_eps: float = float("nan")

    def at(self, t: float) -> tuple[float, float]:
        """Propagated ``(lower, upper)`` Hessian bounds at time ``t``."""
        return propagate_hessian_bound(self.m_eps, t), propagate_hessian_bound(self.M_eps, t)

    def growth_at(self, t: float) -> float:
        """``a_t = max(|m_t|, |M_t|)``."""
        lo, hi = self.at(t)
        return max(abs(lo), abs(hi))


def hessian_bounds_endpoint(C: float, epsilon: float, psi1=None) -> HessianBounds:
    """Hessian bounds of the terminal potential from the marginals' constant ``C``.

    ``m = -1 - eps/(2C) + sqrt(eps^2/4 + 1)/C`` and
    ``M = -1 - eps C/2 + C sqrt(eps^2/4 + 1)``. When ``psi1`` (a Field) is
    given, ``b`` and ``c`` are read off at the grid point nearest the origin.
    """
    if not C >= 1.0:
        raise InvalidAssumptionConstant(f"C must be >= 1, got {C}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    root = np.sqrt(epsilon ** 2 / 4.0 + 1.0)
    m = -1.0 - epsilon / (2.0 * C) + root / C
    M = -1.0 - epsilon * C / 2.0 + C * root
    b = c = float("nan")
    if psi1 is not None:
        from .checks import value_and_gradient_at_origin

        c, b = value_and_gradient_at_origin(psi1)
        c = abs(c)
    return HessianBounds(float(m), float(M), float(max(abs(m), abs(M))), float(b), float(c))


def propagate_hessian_bound(m: float, t: float) -> float:
    """Backward propagation ``m / (1 + (1 - t) m)`` of a terminal Hessian bound."""
    denom = 1.0 + (1.0 - t) * m
    if not denom > 0:
        raise BoundBlowUp(f"1 + (1 - t) m = {denom!r} <= 0 at t={t}: bound degenerates")
    return m / denom


# -- Gaussian tail envelope ---------------------------------------------------


@dataclass(frozen=True)
class TailEnvelope:
    """``W(t) = k A e^{-At} / (A + 2 k eps (1 - e^{-At}))``, solving
    ``W' + 2 eps W^2 + A W = 0`` with ``W(0) = k``."""

    k: float
    A: float
    epsilon: float
    I: float = float("nan")

    def W(self, t):
        t = np.asarray(t, dtype=float)
        e = np.exp(-self.A * t)
        return self.k * self.A * e / (self.A + 2.0 * self.k * self.epsilon * (1.0 - e))

    def W_prime(self, t):
        """Quotient-rule derivative of ``W`` (not derived from the ODE)."""
        t = np.asarray(t, dtype=float)
        e = np.exp(-self.A * t)
        num = self.k * self.A * e
        den = self.A + 2.0 * self.k * self.epsilon * (1.0 - e)
        dnum = -self.A * num
        dden = 2.0 * self.k * self.epsilon * self.A * e
        return (dnum * den - num * dden) / den ** 2

    def ode_residual(self, t):
        w = self.W(t)
        return self.W_prime(t) + 2.0 * self.epsilon * w ** 2 + self.A * w

    def max_ode_residual(self, n: int = 101) -> float:
        return float(np.max(np.abs(self.ode_residual(np.linspace(0.0, 1.0, n)))))


def tail_envelope(k: float, A: float, epsilon: float) -> TailEnvelope:
    if not (k > 0 and A > 0):
        raise InvalidEnvelopeParams(f"need k > 0 and A > 0, got k={k}, A={A}")
    if epsilon < 0:
        raise InvalidEnvelopeParams(f"epsilon must be >= 0, got {epsilon}")
    return TailEnvelope(float(k), float(A), float(epsilon))


def envelope_drift(b_max: float, a_max: float) -> float:
    """``A = b_max / 2 + 2 a_max``."""
    return 0.5 * b_max + 2.0 * a_max


# -- smooth cutoff ------------------------------------------------------------


def _blend_exponent(r):
    # lambda(r) = expit(-u(r)) with u = 1/(2-r) - 1/(r-1), valid on the open interval
    u = 1.0 / (2.0 - r) - 1.0 / (r - 1.0)
    du = 1.0 / (2.0 - r) ** 2 + 1.0 / (r - 1.0) ** 2
    ddu = 2.0 / (2.0 - r) ** 3 - 2.0 / (r - 1.0) ** 3
    return u, du, ddu


def blend(r):
    """``lambda(r) = e^{-1/(2-r)} / (e^{-1/(2-r)} + e^{-1/(r-1)})`` on ``[1, 2]``,
    with its first two derivatives, extended by continuity at the ends."""
    r = np.asarray(r, dtype=float)
    lam = np.where(r <= 1.0, 1.0, 0.0)
    d1 = np.zeros_like(r)
    d2 = np.zeros_like(r)
    inside = (r > 1.0) & (r < 2.0)
    if np.any(inside):
        ri = r[inside]
        u, du, ddu = _blend_exponent(ri)
        lv = expit(-u)
        s = lv * expit(u)
        l1 = -s * du
        l2 = -(1.0 - 2.0 * lv) * l1 * du - s * ddu
        lam = lam.astype(float)
        lam[inside] = lv
        d1[inside] = l1
        d2[inside] = l2
    return lam, d1, d2


def _cutoff_parts(x, R):
    if not R > 1:
        raise RadiusTooSmall(f"cutoff radius must exceed 1, got {R}")
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    r = np.linalg.norm(x, axis=-1)
    lam, d1, d2 = blend(r / R)
    return x, n, r, lam, d1, d2


def cutoff(x, R: float):
    """Radial cutoff ``zeta_R``: 1 on ``|x| <= R``, blended on ``(R, 2R]``, 0 beyond.

    ``x`` has its coordinates on the last axis (shape ``(..., n)``).
    """
    return _cutoff_parts(x, R)[3]


def cutoff_derivatives(x, R: float):
    """Gradient (shape ``(..., n)``) and Laplacian of ``zeta_R``."""
    x, n, r, lam, d1, d2 = _cutoff_parts(x, R)
    safe_r = np.where(r > 0, r, 1.0)
    grad = (d1 / R / safe_r)[..., None] * x
    lap = d2 / R ** 2 + (n - 1) / (safe_r * R) * d1
    return grad, lap
