"""
Temporal regularity of sample paths
===================================

Fractional Sobolev and Hoelder seminorms of grid functions, an exponent
estimator, and the running quotient ``phi(t) = sup_{s<t} |f(t) - f(s)| / (t - s)^alpha``.
"""

import numpy as np

from pathmild.evolution_family import EvolutionOracle
from pathmild.grids import SpatialGrid, TimeGrid
from pathmild.noise import NoiseOperator, sample_driver, smooth_covariance_root
from pathmild.operator_family import build_family
from pathmild.pathwise_core import pathwise_solution
from pathmild.regularity import (
    estimate_exponent,
    estimate_exponent_ensemble,
    holder_seminorm,
    phi_function,
    sobolev_seminorm,
)

# %% Smooth functions ---------------------------------------------------------------------------
for N in (64, 256, 1024):
    t = np.linspace(0, 1, N + 1)
    print(f"N = {N:4d}: [t]_(1/2, 2) = {sobolev_seminorm(t, 0.5, 2, 1 / N):.4f}, "
          f"[sqrt t]_C^(1/2) = {holder_seminorm(np.sqrt(t), 0.5, 1 / N):.4f}")
print("exponent of f(t) = t:", estimate_exponent(np.linspace(0, 1, 257), 1 / 256).estimated_exponent)

# %% Brownian paths sit at the threshold 1/2 ---------------------------------------------------------
base = sample_driver(TimeGrid(1.0, 128), 1, 0, 0)
for N in (128, 512, 2048):
    W = base.refined_to(N).W[:, 0]
    print(f"N = {N:4d}: W^(0.4,2) seminorm {sobolev_seminorm(W, 0.4, 2, 1 / N):.3f}, "
          f"W^(0.6,2) seminorm {sobolev_seminorm(W, 0.6, 2, 1 / N):.3f}")

# %% The mild solution of the heat equation ---------------------------------------------------------
space = SpatialGrid.on_interval(32, 1.0, "neumann-conormal")
G = NoiseOperator.constant(np.eye(32), smooth_covariance_root(space))
paths = []
for p in range(30):
    d = sample_driver(TimeGrid(1.0, 512), 32, 4, p)
    paths.append(pathwise_solution(EvolutionOracle(build_family(d, space)), G, d).states)
r = estimate_exponent_ensemble(paths, 1 / 512, h=space.spacing)
print(f"heat solution: exponent {r.estimated_exponent:.3f}, r^2 {r.regression_r2:.4f}")

# %% The running quotient phi is Hoelder with the leftover exponent -----------------------------------
mu, N = 0.45, 1024
W = sample_driver(TimeGrid(1.0, N), 1, 3, 0).W[:, 0]
for alpha in (0.1, 0.2, 0.3):
    lhs = holder_seminorm(phi_function(W, alpha, 1 / N), mu - alpha, 1 / N)
    print(f"alpha = {alpha}: [phi]_(mu - alpha) = {lhs:.3f} <= 2 [W]_mu = "
          f"{2 * holder_seminorm(W, mu, 1 / N):.3f}")
