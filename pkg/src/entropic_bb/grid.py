"""Uniform rectangular grids, sampled fields and finite-difference operators.

Layout convention: a field on a grid with ``npts = (n0, n1)`` is stored as a
C-ordered array of shape ``(n0, n1)``; axis 0 is the first coordinate.
Flattening with ``values.ravel()`` gives the row-major order used by the
snapshot files. Point ``(i, j)`` sits at ``(lo0 + i*h0, lo1 + j*h1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import GridTooSmall, NonFiniteField, NotUnitDirection

MIN_POINTS = 8


def _as_tuple(value, dim: int, cast) -> tuple:
    arr = np.atleast_1d(np.asarray(value, dtype=float if cast is float else int))
    if arr.ndim != 1:
        raise ValueError("grid bounds must be scalars or 1-d sequences")
    if arr.size == 1 and dim > 1:
        arr = np.repeat(arr, dim)
    return tuple(cast(v) for v in arr)


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid on the box ``[lo, hi]`` in one or two dimensions."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    npts: tuple[int, ...]

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        dim = lo.size
        object.__setattr__(self, "lo", _as_tuple(self.lo, dim, float))
        object.__setattr__(self, "hi", _as_tuple(self.hi, dim, float))
        object.__setattr__(self, "npts", _as_tuple(self.npts, dim, int))
        if not (len(self.lo) == len(self.hi) == len(self.npts)):
            raise ValueError("lo, hi and npts must have the same length")
        if self.dim not in (1, 2):
            raise ValueError(f"only dim 1 or 2 is supported, got {self.dim}")
        for a, b in zip(self.lo, self.hi):
            if not (np.isfinite(a) and np.isfinite(b) and b > a):
                raise ValueError(f"need finite hi > lo on every axis, got [{a}, {b}]")
        if min(self.npts) < MIN_POINTS:
            raise GridTooSmall(f"need at least {MIN_POINTS} points per axis, got {self.npts}")

    @classmethod
    def uniform(cls, lo, hi, npts, dim: int = 1) -> "Grid":
        """Build a grid, broadcasting scalar bounds to ``dim`` axes."""
        return cls(_as_tuple(lo, dim, float), _as_tuple(hi, dim, float), _as_tuple(npts, dim, int))

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.npts

    @property
    def size(self) -> int:
        return int(np.prod(self.npts))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / (n - 1) for a, b, n in zip(self.lo, self.hi, self.npts))

    @property
    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, n) for a, b, n in zip(self.lo, self.hi, self.npts)]

    def mesh(self) -> list[np.ndarray]:
        """Coordinate arrays of shape ``self.shape``, one per axis."""
        return np.meshgrid(*self.axes, indexing="ij")

    def points(self) -> np.ndarray:
        """Coordinates stacked on a trailing axis: shape ``(*shape, dim)``."""
        return np.stack(self.mesh(), axis=-1)

    def radius(self) -> np.ndarray:
        """Euclidean norm ``|x|`` at every grid point."""
        return np.linalg.norm(self.points(), axis=-1)

    def axis_weights(self, axis: int) -> np.ndarray:
        w = np.full(self.npts[axis], self.spacing[axis])
        w[0] = w[-1] = 0.5 * self.spacing[axis]
        return w

    def weights(self) -> np.ndarray:
        """Tensor-product trapezoidal weights, shape ``self.shape``."""
        w = self.axis_weights(0)
        for axis in range(1, self.dim):
            w = np.multiply.outer(w, self.axis_weights(axis))
        return w

    def index_to_coord(self, index: Sequence[int]) -> np.ndarray:
        index = np.atleast_1d(index)
        return np.array([a + i * h for a, i, h in zip(self.lo, index, self.spacing)])

    def coord_to_index(self, point: Sequence[float]) -> tuple[int, ...]:
        """Index of the grid point nearest to ``point`` (clipped to the box)."""
        point = np.atleast_1d(np.asarray(point, dtype=float))
        idx = [
            int(np.clip(np.rint((p - a) / h), 0, n - 1))
            for p, a, h, n in zip(point, self.lo, self.spacing, self.npts)
        ]
        return tuple(idx)

    def ravel_index(self, index: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(index), self.shape))

    def unravel_index(self, flat: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(flat, self.shape))

    def contains(self, point: Sequence[float]) -> bool:
        point = np.atleast_1d(np.asarray(point, dtype=float))
        return all(a <= p <= b for p, a, b in zip(point, self.lo, self.hi))


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples on a :class:`Grid`, stored with shape ``grid.shape``."""

    grid: Grid
    values: np.ndarray
    kind: str = "scalar"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.size != self.grid.size:
            raise ValueError(
                f"field has {values.size} values but the grid has {self.grid.size} points"
            )
        values = values.reshape(self.grid.shape).copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable, kind: str = "scalar") -> "Field":
        """Sample ``fn(*coordinate_arrays)`` on the grid."""
        return cls(grid, np.broadcast_to(fn(*grid.mesh()), grid.shape), kind)

    def with_values(self, values, kind: str | None = None) -> "Field":
        return Field(self.grid, values, self.kind if kind is None else kind)

    def __len__(self) -> int:
        return self.grid.size


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    components: tuple[Field, ...] = field(default_factory=tuple)

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != self.grid.dim:
            raise ValueError("a vector field needs one component per axis")
        if any(c.grid != self.grid for c in comps):
            raise ValueError("all components must share the vector field's grid")
        object.__setattr__(self, "components", comps)

    def as_array(self) -> np.ndarray:
        return np.stack([c.values for c in self.components], axis=-1)

    def norm(self) -> Field:
        return Field(self.grid, np.linalg.norm(self.as_array(), axis=-1))

    def squared_norm(self) -> Field:
        return Field(self.grid, sum(c.values ** 2 for c in self.components))


# -- validation helpers -------------------------------------------------------


def check_field(f: Field, name: str = "field") -> np.ndarray:
    """Return the values of ``f``, raising :class:`NonFiniteField` on NaN/inf."""
    if not isinstance(f, Field):
        raise TypeError(f"{name} must be a Field, got {type(f).__name__}")
    if not np.all(np.isfinite(f.values)):
        raise NonFiniteField(f"{name} contains non-finite values")
    return f.values


def check_density(f: Field, name: str = "density", mass: float | None = 1.0, atol: float = 1e-6):
    """Validate a density: finite, non-negative and (optionally) of given mass."""
    values = check_field(f, name)
    if np.any(values < 0):
        raise ValueError(f"{name} has negative entries")
    if mass is not None:
        total = quadrature(f)
        if abs(total - mass) > atol:
            raise ValueError(f"{name} has mass {total!r}, expected {mass} within {atol}")
    return values


def normalize_density(f: Field) -> Field:
    """Rescale a non-negative field to unit quadrature mass."""
    values = check_field(f)
    total = quadrature(f)
    if not total > 0:
        raise ValueError("cannot normalize a field with non-positive mass")
    return Field(f.grid, values / total, kind="density")


def interior_mask(grid: Grid, margin: int = 2) -> np.ndarray:
    """Boolean mask of points at least ``margin`` cells away from the boundary."""
    mask = np.zeros(grid.shape, dtype=bool)
    sl = tuple(slice(margin, n - margin) for n in grid.shape)
    mask[sl] = True
    return mask


# -- quadrature and derivatives ----------------------------------------------


def quadrature(f: Field, mask: np.ndarray | None = None) -> float:
    """Trapezoidal integral of ``f`` over the grid box.

    With ``mask`` the integrand is zeroed outside the mask (the weights of the
    full grid are kept, no re-weighting at the mask edge).
    """
    values = check_field(f)
    w = f.grid.weights()
    if mask is not None:
        w = np.where(mask, w, 0.0)
    return float(np.sum(w * values))


def _require_stencil(grid: Grid, need: int = 3):
    if min(grid.npts) < need:
        raise GridTooSmall(f"stencil needs {need} points per axis, got {grid.npts}")


def _first_difference(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    return np.gradient(values, h, axis=axis, edge_order=2)


def _second_difference(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h ** 2
    # one-sided, second order, exact on cubics
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h ** 2
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h ** 2
    return np.moveaxis(out, 0, axis)


def gradient(f: Field) -> VectorField:
    """Central differences inside, one-sided second order at the boundary."""
    values = check_field(f)
    _require_stencil(f.grid)
    comps = tuple(
        Field(f.grid, _first_difference(values, h, axis))
        for axis, h in enumerate(f.grid.spacing)
    )
    return VectorField(f.grid, comps)


def divergence(v: VectorField) -> Field:
    """Sum of per-axis first differences, same stencil as :func:`gradient`."""
    _require_stencil(v.grid)
    total = np.zeros(v.grid.shape)
    for axis, (comp, h) in enumerate(zip(v.components, v.grid.spacing)):
        total += _first_difference(check_field(comp), h, axis)
    return Field(v.grid, total)


def laplacian(f: Field) -> Field:
    """Sum over axes of the 3-point second difference."""
    values = check_field(f)
    _require_stencil(f.grid, 4)
    total = np.zeros(f.grid.shape)
    for axis, h in enumerate(f.grid.spacing):
        total += _second_difference(values, h, axis)
    return Field(f.grid, total)


def hessian_quadratic_form(f: Field, xi) -> Field:
    """Second directional derivative ``xi . D^2 f . xi`` by finite differences.

    Axis terms use the 3-point stencil; in 2-d the cross term uses the
    centred mixed stencil ``(f[i+1,j+1] - f[i+1,j-1] - f[i-1,j+1] + f[i-1,j-1]) / 4h0h1``.
    """
    values = check_field(f)
    _require_stencil(f.grid, 4)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (f.grid.dim,):
        raise ValueError(f"direction must have {f.grid.dim} components")
    if abs(np.linalg.norm(xi) - 1.0) > 1e-12:
        raise NotUnitDirection(f"|xi| = {np.linalg.norm(xi)!r} is not 1")
    h = f.grid.spacing
    out = np.zeros(f.grid.shape)
    for axis in range(f.grid.dim):
        if xi[axis] != 0.0:
            out += xi[axis] ** 2 * _second_difference(values, h[axis], axis)
    if f.grid.dim == 2 and xi[0] * xi[1] != 0.0:
        mixed = _first_difference(_first_difference(values, h[0], 0), h[1], 1)
        out += 2.0 * xi[0] * xi[1] * mixed
    return Field(f.grid, out)


def probe_directions(dim: int) -> list[np.ndarray]:
    """Axis directions, plus the two diagonals in 2-d."""
    if dim == 1:
        return [np.array([1.0])]
    s = 1.0 / np.sqrt(2.0)
    return [np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([s, s]), np.array([s, -s])]


# -- snapshot files -----------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_field(path, f: Field) -> Path:
    """Write ``f`` as a text snapshot: a ``grid`` header, then one value per line."""
    path = Path(path)
    g = f.grid
    header = " ".join(
        ["grid", str(g.dim)] + [_fmt(a) for a in g.lo] + [_fmt(b) for b in g.hi]
        + [str(n) for n in g.npts]
    )
    body = "\n".join(_fmt(v) for v in f.values.ravel())
    path.write_text(header + "\n" + body + "\n")
    return path


def read_field(path, kind: str = "scalar") -> Field:
    path = Path(path)
    with path.open() as fh:
        tokens = fh.readline().split()
        if len(tokens) < 2 or tokens[0] != "grid":
            raise ValueError(f"{path}: missing 'grid' header line")
        dim = int(tokens[1])
        if len(tokens) != 2 + 3 * dim:
            raise ValueError(f"{path}: header needs {3 * dim} numbers after the dimension")
        nums = tokens[2:]
        grid = Grid(
            tuple(float(v) for v in nums[:dim]),
            tuple(float(v) for v in nums[dim:2 * dim]),
            tuple(int(v) for v in nums[2 * dim:]),
        )
        values = np.loadtxt(fh, dtype=float, ndmin=1)
    if values.size != grid.size:
        raise ValueError(f"{path}: expected {grid.size} values, found {values.size}")
    return Field(grid, values, kind)
