"""Shared small problems for the unit tests."""

import numpy as np
import pytest

from pathmild.evolution_family import EvolutionOracle
from pathmild.grids import SpatialGrid, TimeGrid
from pathmild.noise import NoiseOperator, sample_driver, smooth_covariance_root
from pathmild.operator_family import build_family


@pytest.fixture
def heat():
    """A small Neumann heat problem: (grid, driver, family, oracle, G)."""
    grid = SpatialGrid.on_interval(8, 1.0, "neumann-conormal")
    driver = sample_driver(TimeGrid(1.0, 32), 8, master_seed=3, path_index=0)
    family = build_family(driver, grid)
    G = NoiseOperator.constant(np.eye(8), smooth_covariance_root(grid))
    return grid, driver, family, EvolutionOracle(family), G


@pytest.fixture
def scalar_grid():
    return SpatialGrid(1, 1.0)
