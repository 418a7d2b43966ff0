"""Pointwise and integral checks of the a-priori bounds on a computed bridge.

Pointwise checks look at a certification window: points at least two cells
from the boundary where the slice carries resolved mass
(``rho_t >= RESOLVED_FRACTION * max rho_t``). Outside it the potential is
``eps log`` of an underflowed or truncated convolution and says nothing
about the continuum object.
"""

from __future__ import annotations

import numpy as np

from ..bridge import BridgePath, BridgeSlice
from ..errors import OriginNotInGrid, RadiusOutsideGrid
from ..grid import (
    Field,
    gradient,
    hessian_quadratic_form,
    interior_mask,
    laplacian,
    probe_directions,
    quadrature,
)
from .bounds import HessianBounds, TailEnvelope, envelope_drift, tail_envelope
from .report import CertificateReport

RESOLVED_FRACTION = 1e-10
GROWTH_RELATIVE_SLACK = 1e-3
TAIL_RELATIVE_SLACK = 1e-6
MAX_MOMENT_ORDER = 8


def certification_window(sl: BridgeSlice, margin: int = 2) -> np.ndarray:
    rho = sl.rho_t.values
    return interior_mask(sl.grid, margin) & (rho >= RESOLVED_FRACTION * rho.max())


def hessian_slack(grid, sinkhorn_tol: float) -> float:
    """Discretization slack ``10 h^2 + 10 tol`` (``h`` the coarsest spacing)."""
    return 10.0 * max(grid.spacing) ** 2 + 10.0 * sinkhorn_tol


def _origin_index(grid) -> tuple[int, ...]:
    origin = np.zeros(grid.dim)
    if not grid.contains(origin):
        raise OriginNotInGrid(f"origin is outside the grid box {grid.lo}..{grid.hi}")
    return grid.coord_to_index(origin)


def value_and_gradient_at_origin(psi: Field) -> tuple[float, float]:
    """``(psi(0), |grad psi(0)|)`` at the grid point nearest the origin."""
    idx = _origin_index(psi.grid)
    grad = gradient(psi).as_array()[idx]
    return float(psi.values[idx]), float(np.linalg.norm(grad))


# -- Hessian sandwich ---------------------------------------------------------


def check_hessian_sandwich(sl: BridgeSlice, bounds: HessianBounds, slack: float) -> CertificateReport:
    """Second directional derivatives of ``psi_t`` against the propagated bounds.

    The report's ``lhs`` is the worst excursion outside ``[lower, upper]``
    (negative when every value is strictly inside) and ``rhs`` is 0, so the
    check passes iff that excursion is at most ``slack``.
    """
    lower, upper = bounds.at(sl.t)
    mask = certification_window(sl)
    excursion = -np.inf
    h_min, h_max = np.inf, -np.inf
    for xi in probe_directions(sl.grid.dim):
        q = hessian_quadratic_form(sl.psi_t, xi).values[mask]
        h_min = min(h_min, float(q.min()))
        h_max = max(h_max, float(q.max()))
        excursion = max(excursion, float(np.max(np.maximum(lower - q, q - upper))))
    return CertificateReport.upper_bound(
        f"hessian_sandwich[t={sl.t:.6g}]", excursion, 0.0, slack,
        t=sl.t, lower=lower, upper=upper, hessian_min=h_min, hessian_max=h_max,
        points=int(mask.sum()),
    )


def check_hessian_sandwich_path(path: BridgePath, bounds: HessianBounds, slack: float) -> CertificateReport:
    """Worst slice of :func:`check_hessian_sandwich` over the whole path."""
    reports = [check_hessian_sandwich(s, bounds, slack) for s in path.slices]
    worst = max(reports, key=lambda r: r.lhs)
    return CertificateReport.upper_bound(
        "hessian_sandwich", worst.lhs, 0.0, slack,
        worst_t=worst.metadata["t"], failing_slices=sum(not r.passed for r in reports),
        npts=path.grid.size, M=len(path) - 1, epsilon=path.epsilon,
    )


# -- gradient growth ----------------------------------------------------------


def check_gradient_growth(sl: BridgeSlice, a_t: float, b_t: float | None = None) -> CertificateReport:
    """``|grad psi_t(x)| <= b_t + a_t |x|`` on the certification window.

    ``b_t`` defaults to ``|grad psi_t|`` at the grid point nearest the
    origin. ``lhs`` is the worst ratio ``|grad psi| / (b_t + a_t |x|)``; the
    check passes iff it is at most ``1 + 1e-3``.
    """
    idx = _origin_index(sl.grid)
    speed = sl.v_t.norm().values
    if b_t is None:
        b_t = float(speed[idx])
    mask = certification_window(sl)
    bound = b_t + a_t * sl.grid.radius()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, speed / np.where(bound > 0, bound, 1.0),
                         np.where(speed > 0, np.inf, 0.0))
    worst = float(ratio[mask].max())
    return CertificateReport.upper_bound(
        f"gradient_growth[t={sl.t:.6g}]", worst, 1.0, GROWTH_RELATIVE_SLACK,
        t=sl.t, a_t=a_t, b_t=b_t,
        margin=float(np.min((bound - speed)[mask])),
    )


def growth_coefficients(path: BridgePath, bounds: HessianBounds) -> tuple[np.ndarray, np.ndarray]:
    """Per-slice ``a_t`` (propagated bounds) and ``b_t`` (measured at the origin)."""
    idx = _origin_index(path.grid)
    a = np.array([bounds.growth_at(s.t) for s in path.slices])
    b = np.array([float(s.v_t.norm().values[idx]) for s in path.slices])
    return a, b


def check_gradient_growth_path(path: BridgePath, bounds: HessianBounds) -> CertificateReport:
    a, b = growth_coefficients(path, bounds)
    reports = [check_gradient_growth(s, at, bt) for s, at, bt in zip(path.slices, a, b)]
    worst = max(reports, key=lambda r: r.lhs)
    return CertificateReport.upper_bound(
        "gradient_growth", worst.lhs, 1.0, GROWTH_RELATIVE_SLACK,
        worst_t=worst.metadata["t"], npts=path.grid.size, M=len(path) - 1, epsilon=path.epsilon,
    )


# -- Gaussian tails -----------------------------------------------------------


def envelope_for_path(path: BridgePath, bounds: HessianBounds, k: float) -> TailEnvelope:
    """Tail envelope with ``A = max b_t / 2 + 2 max a_t`` taken over the slices
    and the moment constant ``I = max_t int exp(W(t)|x|^2) rho_t``."""
    a, b = growth_coefficients(path, bounds)
    env = tail_envelope(k, envelope_drift(float(b.max()), float(a.max())), path.epsilon)
    r2 = path.grid.radius() ** 2
    moments = [
        quadrature(Field(path.grid, np.exp(env.W(s.t) * r2) * s.rho_t.values)) for s in path.slices
    ]
    return TailEnvelope(env.k, env.A, env.epsilon, float(max(moments)))


def _inscribed_radius(grid) -> float:
    return float(min(min(-a, b) for a, b in zip(grid.lo, grid.hi)))


def tail_mass(sl: BridgeSlice, R: float) -> float:
    outside = sl.grid.radius() > R
    return quadrature(sl.rho_t, mask=outside)


def check_gaussian_tail(path: BridgePath, env: TailEnvelope, radii) -> list[CertificateReport]:
    """``max_t int_{|x| > R} rho_t <= I exp(-W(1) R^2)`` for each radius.

    The window must contain ``B(0, 2 max R)``; ``env.I`` must be set (see
    :func:`envelope_for_path`).
    """
    radii = [float(r) for r in radii]
    if not np.isfinite(env.I):
        raise ValueError("envelope has no moment constant I; build it with envelope_for_path")
    reach = _inscribed_radius(path.grid)
    if radii and 2.0 * max(radii) > reach:
        raise RadiusOutsideGrid(
            f"B(0, {2.0 * max(radii)}) does not fit in the grid (inscribed radius {reach})"
        )
    w1 = float(env.W(1.0))
    reports = []
    for R in radii:
        worst = max(tail_mass(s, R) for s in path.slices)
        bound = env.I * np.exp(-w1 * R ** 2)
        reports.append(CertificateReport.upper_bound(
            f"gaussian_tail[R={R:g}]", worst, bound * (1.0 + TAIL_RELATIVE_SLACK), 0.0,
            R=R, I=env.I, W1=w1, k=env.k, A=env.A,
            npts=path.grid.size, M=len(path) - 1, epsilon=path.epsilon,
        ))
    return reports


def check_tail_ode(env: TailEnvelope, tol: float = 1e-10, n: int = 101) -> CertificateReport:
    return CertificateReport.upper_bound(
        "tail_envelope_ode", env.max_ode_residual(n), 0.0, tol, k=env.k, A=env.A, epsilon=env.epsilon,
    )


# -- polynomial moments -------------------------------------------------------


def slice_moments(sl: BridgeSlice, k_max: int) -> np.ndarray:
    r = sl.grid.radius()
    return np.array([quadrature(Field(sl.grid, r ** k * sl.rho_t.values)) for k in range(k_max + 1)])


def signed_moment(sl: BridgeSlice, k: int, axis: int = 0) -> float:
    x = sl.grid.mesh()[axis]
    return quadrature(Field(sl.grid, x ** k * sl.rho_t.values))


def weighted_derivative_masses(sl: BridgeSlice) -> tuple[float, float]:
    """``int (1 + |x|^2)|grad rho_t|`` and ``int (1 + |x|^2)|lap rho_t|``."""
    weight = 1.0 + sl.grid.radius() ** 2
    g = quadrature(Field(sl.grid, weight * gradient(sl.rho_t).norm().values))
    lap = quadrature(Field(sl.grid, weight * np.abs(laplacian(sl.rho_t).values)))
    return g, lap


def check_polynomial_moments(path: BridgePath, k_max: int) -> CertificateReport:
    """Moments ``int |x|^k rho_t``, ``k <= k_max``, stay within twice their
    endpoint maximum over the slice set; weighted derivative masses are
    finite and obey the same rule.

    ``lhs`` is the worst ratio ``max_t m_k(t) / (2 max(m_k(0), m_k(1)))``.
    """
    if not 0 <= k_max <= MAX_MOMENT_ORDER:
        raise ValueError(f"k_max must lie in [0, {MAX_MOMENT_ORDER}], got {k_max}")
    table = np.array([slice_moments(s, k_max) for s in path.slices])
    deriv = np.array([weighted_derivative_masses(s) for s in path.slices])
    series = np.concatenate([table, deriv], axis=1)
    finite = bool(np.all(np.isfinite(series)))
    ends = np.maximum(series[0], series[-1])
    ratio = series.max(axis=0) / (2.0 * ends)
    worst = float(ratio.max()) if finite else float("inf")
    return CertificateReport.upper_bound(
        f"polynomial_moments[k<={k_max}]", worst, 1.0, 0.0,
        moments_max=table.max(axis=0).tolist(), npts=path.grid.size, M=len(path) - 1,
        epsilon=path.epsilon,
    )
