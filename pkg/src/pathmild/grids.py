"""Uniform time and 1D space grids, plus orthonormal mode bases on them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

BOUNDARIES = ("periodic", "neumann-conormal", "dirichlet")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_k = k * dt`` on ``[0, horizon]`` with ``steps`` cells."""

    horizon: float
    steps: int

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 2:
            raise ConfigurationError(f"time grid needs steps >= 2, got {self.steps}")
        if not self.horizon > 0:
            raise ConfigurationError(f"horizon must be positive, got {self.horizon}")
        object.__setattr__(self, "steps", int(self.steps))
        object.__setattr__(self, "horizon", float(self.horizon))

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.horizon, self.steps * factor)

    def index_of(self, t: float) -> int:
        """Nearest grid index to time ``t`` (clamped to the grid)."""
        k = int(round(t / self.dt))
        return min(max(k, 0), self.steps)


@dataclass(frozen=True)
class SpatialGrid:
    """1D grid with ``nodes`` unknowns.

    Node placement depends on the boundary condition so that every operator
    stays symmetric:

    * periodic: ``x_j = j h``, length ``n h``
    * neumann-conormal: cell centres ``x_j = (j + 1/2) h``, length ``n h``
    * dirichlet: interior nodes ``x_j = (j + 1) h``, length ``(n + 1) h``
    """

    nodes: int
    spacing: float
    boundary: str = "periodic"

    def __post_init__(self):
        if int(self.nodes) != self.nodes or self.nodes < 1:
            raise ConfigurationError(f"spatial grid needs nodes >= 1, got {self.nodes}")
        if not self.spacing > 0:
            raise ConfigurationError(f"spacing must be positive, got {self.spacing}")
        if self.boundary not in BOUNDARIES:
            raise ConfigurationError(
                f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        object.__setattr__(self, "nodes", int(self.nodes))

    @classmethod
    def on_interval(cls, nodes: int, length: float = 1.0, boundary: str = "periodic"):
        """Grid with ``nodes`` unknowns covering ``[0, length]``."""
        cells = nodes + 1 if boundary == "dirichlet" else nodes
        return cls(nodes, length / cells, boundary)

    @property
    def is_scalar(self) -> bool:
        return self.nodes == 1

    @property
    def length(self) -> float:
        if self.boundary == "dirichlet":
            return (self.nodes + 1) * self.spacing
        return self.nodes * self.spacing

    @property
    def x(self) -> np.ndarray:
        j = np.arange(self.nodes)
        if self.boundary == "neumann-conormal":
            return (j + 0.5) * self.spacing
        if self.boundary == "dirichlet":
            return (j + 1.0) * self.spacing
        return j * self.spacing


def mode_basis(grid: SpatialGrid) -> tuple[np.ndarray, np.ndarray]:
    """Eigenbasis of the constant-coefficient Laplacian for ``grid``.

    Returns ``(V, k)`` where the columns of ``V`` are l2-orthonormal node
    vectors ordered by wavenumber ``k`` (cosine/sine pairs share ``k`` in the
    periodic case).
    """
    n, L, x = grid.nodes, grid.length, grid.x
    if grid.boundary == "periodic":
        cols, ks = [np.ones(n)], [0]
        for k in range(1, n // 2 + 1):
            cols.append(np.cos(2 * np.pi * k * x / L))
            ks.append(k)
            if len(cols) < n:
                cols.append(np.sin(2 * np.pi * k * x / L))
                ks.append(k)
        V, k = np.column_stack(cols[:n]), np.array(ks[:n])
    elif grid.boundary == "neumann-conormal":
        k = np.arange(n)
        V = np.cos(np.pi * np.outer(x, k) / L)
    else:
        k = np.arange(1, n + 1)
        V = np.sin(np.pi * np.outer(x, k) / L)
    V = V / np.linalg.norm(V, axis=0)
    return V, k.astype(float)
