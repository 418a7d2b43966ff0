"""Entropic optimal transport on grids: Sinkhorn, entropic interpolation and
numerical certificates of the dynamic (Benamou-Brenier) formulation."""

from .bridge import BridgePath, BridgeSlice, build_path, build_slice, kinetic_energy
from .grid import Field, Grid, VectorField
from .heatflow import HeatParams, evolve_backward, evolve_forward, heat_kernel
from .schrodinger import (
    PotentialPair,
    SinkhornReport,
    SinkhornSolver,
    sinkhorn_solve,
    static_entropic_cost,
)

__version__ = "0.1.0"

__all__ = [
    "BridgePath",
    "BridgeSlice",
    "Field",
    "Grid",
    "HeatParams",
    "PotentialPair",
    "SinkhornReport",
    "SinkhornSolver",
    "VectorField",
    "build_path",
    "build_slice",
    "evolve_backward",
    "evolve_forward",
    "heat_kernel",
    "kinetic_energy",
    "sinkhorn_solve",
    "static_entropic_cost",
]
