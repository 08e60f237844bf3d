"""
Semilinear equations by Picard iteration
========================================

``dU = (A U + F(U)) dt + B(U) dW`` is solved by iterating the map
``L(u) = S(., 0) u0 + S * F(u) + (pathwise mild convolution of B(u))``.
Successive differences shrink in every weighted norm
``sup_t exp(-kappa t) ||u(t)||``, faster for larger ``kappa``.
"""

import numpy as np

from pathmild.evolution_family import EvolutionOracle
from pathmild.grids import SpatialGrid, TimeGrid
from pathmild.noise import NoiseOperator, sample_driver, smooth_covariance_root
from pathmild.operator_family import build_family, cis_holder_constant
from pathmild.pathwise_core import pathwise_solution
from pathmild.semilinear import (
    coefficient_truncation_diagnostic,
    make_nonlinearity,
    picard_solve,
    truncate_initial,
)

space = SpatialGrid.on_interval(16, 1.0, "neumann-conormal")
Q = smooth_covariance_root(space)
nl = make_nonlinearity("pointwise-sin", "multiplicative-noise-scale", 16, 1.0, 0.1,
                       covariance_root=Q)
print("declared Lipschitz constants hold on random probes:", nl.validate(16))

d = sample_driver(TimeGrid(1.0, 128), 16, 3, 0)
oracle = EvolutionOracle(build_family(d, space))
u0 = np.cos(np.pi * space.x) + 0.5

# %% Contraction ---------------------------------------------------------------------
U, rep = picard_solve(oracle, u0, nl, d, tol=1e-10)
print(f"converged in {rep.iterations} iterations, residual {rep.residual:.1e}")
for kappa in sorted(rep.factors):
    print(f"  kappa T = {kappa:6.1f}: largest ratio of successive steps {rep.max_factor(kappa):.4f}")

# %% Uniqueness ------------------------------------------------------------------------
V, _ = picard_solve(oracle, u0, nl, d, tol=1e-10, initial=np.full((129, 16), 3.0))
print("different initial iterate, same fixed point:", np.abs(U.states - V.states).max())

# %% Truncation of the data ----------------------------------------------------------------
print("truncate_initial(u0, 0.5) is zero:", not truncate_initial(u0, 0.5, space.spacing).any())
family = oracle.family
K = cis_holder_constant(family, 1.0)
k = coefficient_truncation_diagnostic(family, 0.5 * K, 1.0)
G = NoiseOperator.constant(np.eye(16), Q)
a = pathwise_solution(oracle, G, d).states
b = pathwise_solution(EvolutionOracle(family.frozen_after(k)), G, d).states
print(f"running Hoelder quotient reaches K/2 at step {k}; freezing A after it leaves "
      f"[0, t_k] unchanged: {np.array_equal(a[: k + 1], b[: k + 1])}")
