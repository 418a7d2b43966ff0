"""Gaussian heat kernel and the forward/backward heat semigroups on a grid.

Convolutions are dense kernel-matrix applications along each axis (the
Gaussian kernel and the trapezoidal weights both factorize, so 2-d is two
1-d passes). The log-domain variants never exponentiate their input
unshifted: a max-shifted matvec does the bulk, and entries whose sum
underflows are redone with an exact log-sum-exp. Unbounded potentials such
as ``exp(y - 1)`` go through this path.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import logsumexp

from .errors import NegativeDensity, NonPositiveTime
from .grid import Field, Grid, check_field

BOUNDARY_RATIO = 1e-10
UNDERFLOW_FLOOR = 1e-290


class BoundaryMassWarning(UserWarning):
    """Data on the grid boundary is not negligible: truncation may bias the flow."""


@dataclass(frozen=True)
class HeatParams:
    epsilon: float
    t: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"t must lie in [0, 1], got {self.t}")


def heat_kernel(x, y, s: float) -> np.ndarray:
    """Heat kernel ``(2 pi s)^(-n/2) exp(-|x - y|^2 / 2s)``.

    ``x`` and ``y`` are points (scalars in 1-d, or arrays whose last axis is
    the dimension); the result broadcasts over leading axes.
    """
    if not s > 0:
        raise NonPositiveTime(f"kernel time must be positive, got {s}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 0 and y.ndim == 0:
        n = 1
        sq = (x - y) ** 2
    else:
        x = np.atleast_1d(x)
        y = np.atleast_1d(y)
        n = max(x.shape[-1], y.shape[-1])
        sq = np.sum((x - y) ** 2, axis=-1)
    return (2.0 * np.pi * s) ** (-n / 2.0) * np.exp(-sq / (2.0 * s))



def _log_kernel_row(grid: Grid, axis: int, s: float) -> np.ndarray:
    """``log r_s`` at offsets ``0, h, 2h, ...``; the axis kernel is Toeplitz in it."""
    k = np.arange(grid.npts[axis]) * grid.spacing[axis]
    return -k ** 2 / (2.0 * s) - 0.5 * np.log(2.0 * np.pi * s)


@lru_cache(maxsize=8)
def _log_kernel(grid: Grid, axis: int, s: float) -> np.ndarray:
    """Matrix ``log(r_s(x_i, y_j) * w_j)`` for one axis, with trapezoid weights."""
    return toeplitz(_log_kernel_row(grid, axis, s)) + np.log(grid.axis_weights(axis))[None, :]


@lru_cache(maxsize=8)
def _kernel(grid: Grid, axis: int, s: float) -> np.ndarray:
    row = np.exp(_log_kernel_row(grid, axis, s))
    return toeplitz(row) * grid.axis_weights(axis)[None, :]


def _log_convolve_axis(moved: np.ndarray, grid: Grid, axis: int, s: float) -> np.ndarray:
    # shifted matvec, exact log-sum-exp only on entries whose sum underflows
    vmax = np.max(moved, axis=-1, keepdims=True)
    vmax = np.where(np.isfinite(vmax), vmax, 0.0)
    sums = np.exp(moved - vmax) @ _kernel(grid, axis, s).T
    with np.errstate(divide="ignore"):
        out = np.log(sums) + vmax
    bad = ~(sums > UNDERFLOW_FLOOR)
    if np.any(bad):
        lk = _log_kernel(grid, axis, s)
        lead, rows = np.nonzero(bad.reshape(-1, bad.shape[-1]))
        flat = moved.reshape(-1, moved.shape[-1])
        exact = logsumexp(lk[rows] + flat[lead], axis=-1)
        out = out.reshape(-1, out.shape[-1])
        out[lead, rows] = exact
        out = out.reshape(moved.shape)
    return out


def log_convolve(log_values: np.ndarray, grid: Grid, s: float) -> np.ndarray:
    """``log( int exp(log_values(y)) r_s(x, y) dy )`` by trapezoidal quadrature in y."""
    if not s > 0:
        raise NonPositiveTime(f"convolution time must be positive, got {s}")
    out = np.asarray(log_values, dtype=float).reshape(grid.shape)
    s = float(s)
    for axis in range(grid.dim):
        moved = np.moveaxis(out, axis, -1)
        out = np.moveaxis(_log_convolve_axis(moved, grid, axis, s), -1, axis)
    return out


def convolve(values: np.ndarray, grid: Grid, s: float) -> np.ndarray:
    """``int values(y) r_s(x, y) dy`` by trapezoidal quadrature in y (linear space)."""
    if not s > 0:
        raise NonPositiveTime(f"convolution time must be positive, got {s}")
    out = np.asarray(values, dtype=float).reshape(grid.shape)
    s = float(s)
    for axis in range(grid.dim):
        k = _kernel(grid, axis, s)
        out = np.moveaxis(np.tensordot(k, np.moveaxis(out, axis, 0), axes=(1, 0)), 0, axis)
    return out


def boundary_ratio(values: np.ndarray) -> float:
    """Largest boundary magnitude relative to the largest overall magnitude."""
    a = np.abs(np.asarray(values))
    peak = a.max()
    if peak == 0:
        return 0.0
    edges = []
    for axis in range(a.ndim):
        v = np.moveaxis(a, axis, 0)
        edges.append(max(v[0].max(), v[-1].max()))
    return float(max(edges) / peak)


def warn_if_boundary_mass(values: np.ndarray, what: str) -> None:
    ratio = boundary_ratio(values)
    if ratio > BOUNDARY_RATIO:
        warnings.warn(
            f"{what}: boundary values reach {ratio:.3g} of the maximum; widen the grid",
            BoundaryMassWarning,
            stacklevel=3,
        )


def _check_nonnegative(f: Field, name: str) -> np.ndarray:
    values = check_field(f, name)
    if np.any(values < -1e-12):
        raise NegativeDensity(f"{name} has entries below -1e-12 (min {values.min()!r})")
    return np.clip(values, 0.0, None)


def evolve_forward(f0: Field, p: HeatParams) -> Field:
    """Forward heat flow: ``f_t = int f0(y) r_{eps t}(., y) dy``; ``f_0 = f0``."""
    values = _check_nonnegative(f0, "f0")
    if p.t == 0.0:
        return f0
    warn_if_boundary_mass(values, "evolve_forward")
    return Field(f0.grid, convolve(values, f0.grid, p.epsilon * p.t), f0.kind)


def evolve_backward(g1: Field, p: HeatParams) -> Field:
    """Backward heat flow: ``g_t = int g1(y) r_{eps (1-t)}(., y) dy``; ``g_1 = g1``."""
    values = _check_nonnegative(g1, "g1")
    if p.t == 1.0:
        return g1
    warn_if_boundary_mass(values, "evolve_backward")
    return Field(g1.grid, convolve(values, g1.grid, p.epsilon * (1.0 - p.t)), g1.kind)


def log_evolve_forward(log_f0: Field, p: HeatParams) -> Field:
    """Forward heat flow of ``exp(log_f0)``, returned as a log-field."""
    if p.t == 0.0:
        return log_f0
    return Field(log_f0.grid, log_convolve(log_f0.values, log_f0.grid, p.epsilon * p.t))


def log_evolve_backward(log_g1: Field, p: HeatParams) -> Field:
    """Backward heat flow of ``exp(log_g1)``, returned as a log-field.

    Safe for exponentially growing data such as ``g(y) = exp(y - 1)``.
    """
    if p.t == 1.0:
        return log_g1
    return Field(log_g1.grid, log_convolve(log_g1.values, log_g1.grid, p.epsilon * (1.0 - p.t)))
