"""Entropic interpolation between the marginals and its kinetic action.

A slice at time ``t`` is ``rho_t = f_t g_t`` with ``f_t`` the forward heat
flow of ``f`` and ``g_t`` the backward heat flow of ``g``, the potential
``psi_t = eps log g_t`` and velocity ``v_t = grad psi_t`` (finite
differences, the same stencil the residual checks use).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import simpson

from .errors import NegativeMass, TooFewSlices
from .grid import Field, VectorField, gradient, quadrature, read_field, write_field
from .heatflow import HeatParams, log_evolve_backward, log_evolve_forward
from .schrodinger import PotentialPair

DEFAULT_TIME_PANELS = 64
RHO_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class BridgeSlice:
    t: float
    rho_t: Field
    psi_t: Field
    v_t: VectorField

    @classmethod
    def from_potential(cls, t: float, rho_t: Field, psi_t: Field) -> "BridgeSlice":
        return cls(float(t), rho_t, psi_t, gradient(psi_t))

    @property
    def grid(self):
        return self.rho_t.grid

    def mass(self) -> float:
        return quadrature(self.rho_t)

    def kinetic_integrand(self) -> float:
        """``int |v_t|^2 / 2 rho_t``."""
        return quadrature(
            Field(self.grid, 0.5 * self.v_t.squared_norm().values * self.rho_t.values)
        )


@dataclass(frozen=True, eq=False)
class BridgePath:
    epsilon: float
    slices: tuple[BridgeSlice, ...]

    def __post_init__(self):
        slices = tuple(self.slices)
        times = np.array([s.t for s in slices])
        if np.any(np.diff(times) <= 0):
            raise ValueError("slice times must be strictly increasing")
        object.__setattr__(self, "slices", slices)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.slices])

    @property
    def grid(self):
        return self.slices[0].grid

    def __len__(self) -> int:
        return len(self.slices)

    def __getitem__(self, i) -> BridgeSlice:
        return self.slices[i]

    def subsample(self, step: int) -> "BridgePath":
        """Keep every ``step``-th slice (endpoints included when ``step`` divides M)."""
        return BridgePath(self.epsilon, self.slices[::step])


def build_slice(pp: PotentialPair, t: float) -> BridgeSlice:
    """Interpolation slice at time ``t`` from converged Schrödinger factors."""
    p = HeatParams(pp.epsilon, float(t))
    log_f_t = log_evolve_forward(pp.log_f, p)
    log_g_t = log_evolve_backward(pp.log_g, p)
    grid = pp.grid
    rho = Field(grid, np.exp(log_f_t.values + log_g_t.values), kind="density")
    psi = Field(grid, pp.epsilon * log_g_t.values)
    return BridgeSlice.from_potential(t, rho, psi)


def uniform_times(n_panels: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, int(n_panels) + 1)


def build_path(pp: PotentialPair, n_panels: int = DEFAULT_TIME_PANELS) -> BridgePath:
    """Slices at ``n_panels + 1`` uniform times on ``[0, 1]``."""
    if n_panels < 2:
        raise TooFewSlices(f"need at least 2 time panels (3 slices), got {n_panels}")
    return BridgePath(pp.epsilon, tuple(build_slice(pp, t) for t in uniform_times(n_panels)))


def perturb_path(path: BridgePath, amplitude: float) -> BridgePath:
    """Add ``amplitude * |x|^2`` to every potential (velocities recomputed)."""
    r2 = path.grid.radius() ** 2
    slices = tuple(
        BridgeSlice.from_potential(s.t, s.rho_t, s.psi_t.with_values(s.psi_t.values + amplitude * r2))
        for s in path.slices
    )
    return BridgePath(path.epsilon, slices)


def _simpson_uniform(values: np.ndarray, times: np.ndarray) -> float:
    if len(values) % 2 == 0:
        raise ValueError("composite Simpson needs an even number of panels")
    return float(simpson(values, x=times))


def kinetic_energy(path: BridgePath) -> float:
    """``int_0^1 int |v_t|^2/2 rho_t dx dt``: Simpson in time, trapezoid in space."""
    if len(path) < 3:
        raise TooFewSlices(f"kinetic energy needs at least 3 slices, got {len(path)}")
    values = np.array([s.kinetic_integrand() for s in path.slices])
    return _simpson_uniform(values, path.times)


def kinetic_energy_richardson(path: BridgePath) -> tuple[float, float]:
    """Kinetic energy and a Richardson error estimate ``|S_M - S_{M/2}| / 15``.

    The estimate is NaN when the panel count is not divisible by 4.
    """
    value = kinetic_energy(path)
    panels = len(path) - 1
    if panels % 4 != 0:
        return value, float("nan")
    coarse = kinetic_energy(path.subsample(2))
    return value, abs(value - coarse) / 15.0


def kinetic_density_theta(x, y):
    """Jointly convex kinetic density: ``y^2/x`` for ``x > 0``, ``0`` at the origin,
    ``+inf`` otherwise. Works elementwise on arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x < 0):
        raise NegativeMass("Theta is defined for x >= 0 only")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x > 0, y ** 2 / np.where(x > 0, x, 1.0), np.where(y == 0, 0.0, np.inf))
    return out[()] if out.ndim == 0 else out


def momentum_action(path: BridgePath) -> float:
    """Kinetic action written as ``int int Theta(rho, |rho v|) / 2``.

    Densities below ``RHO_FLOOR`` count as zero mass.
    """
    if len(path) < 3:
        raise TooFewSlices(f"kinetic energy needs at least 3 slices, got {len(path)}")
    vals = []
    for s in path.slices:
        rho = np.where(s.rho_t.values < RHO_FLOOR, 0.0, s.rho_t.values)
        q = rho * s.v_t.norm().values
        vals.append(quadrature(Field(s.grid, 0.5 * kinetic_density_theta(rho, q))))
    return _simpson_uniform(np.array(vals), path.times)


# -- serialization -----------------------------------------------------------


def save_path(path: BridgePath, directory) -> Path:
    """One snapshot per slice for ``rho`` and ``psi`` plus ``index.csv``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for k, s in enumerate(path.slices):
        rho_name = f"slice_{k:04d}_rho.field"
        psi_name = f"slice_{k:04d}_psi.field"
        write_field(directory / rho_name, s.rho_t)
        write_field(directory / psi_name, s.psi_t)
        rows.append([repr(float(s.t)), rho_name, psi_name])
    index = directory / "index.csv"
    with index.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epsilon", repr(float(path.epsilon))])
        w.writerow(["t", "rho_file", "psi_file"])
        w.writerows(rows)
    return index


def load_path(directory) -> BridgePath:
    directory = Path(directory)
    index = directory / "index.csv"
    with index.open(newline="") as fh:
        reader = csv.reader(fh)
        eps_row = next(reader)
        if eps_row[0] != "epsilon":
            raise ValueError(f"{index}: first row must carry epsilon")
        epsilon = float(eps_row[1])
        next(reader)
        slices = []
        for t, rho_name, psi_name in reader:
            rho = read_field(directory / rho_name, kind="density")
            psi = read_field(directory / psi_name)
            slices.append(BridgeSlice.from_potential(float(t), rho, psi))
    return BridgePath(epsilon, tuple(slices))
