"""Uniform 1D mesh of two-node (P1) segment elements.

Degrees of freedom sit at the vertices.  The dual volume of an interior DOF
is one element length h (two half-elements), boundary DOFs get h/2, so the
dual volumes partition the domain exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """Invalid run or mesh configuration."""


@dataclass(frozen=True)
class Mesh1D:
    x_min: float
    x_max: float
    n_cells: int
    vertices: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def n_dofs(self) -> int:
        return self.n_cells + 1


def build_mesh(x_min: float, x_max: float, n_cells: int) -> Mesh1D:
    if not x_max > x_min:
        raise ConfigurationError(f"need x_max > x_min, got [{x_min}, {x_max}]")
    if n_cells < 2:
        raise ConfigurationError(f"need n_cells >= 2, got {n_cells}")
    vertices = np.linspace(x_min, x_max, n_cells + 1)
    return Mesh1D(x_min=x_min, x_max=x_max, n_cells=n_cells, vertices=vertices)


def dual_volumes(mesh: Mesh1D) -> np.ndarray:
    """Per-DOF dual volumes; interior h, boundary h/2, summing to the domain."""
    vols = np.full(mesh.n_dofs, mesh.h)
    vols[0] = 0.5 * mesh.h
    vols[-1] = 0.5 * mesh.h
    return vols


def dual_volume(mesh: Mesh1D, dof: int) -> float:
    if not 0 <= dof < mesh.n_dofs:
        raise IndexError(f"DOF index {dof} out of range for {mesh.n_dofs} DOFs")
    if dof == 0 or dof == mesh.n_dofs - 1:
        return 0.5 * mesh.h
    return mesh.h
