"""Pathwise mild solutions of ``dU = (A(t) U + F(t, U)) dt + B(t, U) dW``.

``A(t)`` is a random, adapted family of parabolic operators. The stochastic
convolution is never formed with the non-adapted kernel ``S(t, s)``;
instead

    U(t) = S(t, 0) J(t) - int_0^t S(t, s) A(s) (J(t) - J(s)) ds,

with ``J`` the Ito integral of the noise operator, involves only Lebesgue
integrals of the evolution family.

Modules
-------
noise             seeded Brownian drivers, Ito and forward integrals
operator_family   random divergence-form operators and condition checks
evolution_family  the discrete evolution family and its diagnostics
pathwise_core     the pathwise mild formula and deterministic convolution
semilinear        Picard iteration for the semilinear equation
oracles           reference solvers and identity residuals
regularity        Hoelder / Sobolev seminorms and exponent estimation
cli               the ``spde`` command line
"""

from .errors import *  # noqa: F401,F403
from .evolution_family import (EvolutionOracle, PropagatorScheme, derivative_residual,
                               singularity_profile, step_propagator)
from .grids import SpatialGrid, TimeGrid, mode_basis
from .noise import (BrownianDriver, NoiseOperator, forward_integral, ito_increment, ito_integral,
                    ito_path, sample_driver, smooth_covariance_root, white_covariance_root)
from .operator_family import (CoefficientRecipe, OperatorFamily, assemble, build_family,
                              cis_holder_constant, kato_tanabe_constant, resolvent_bound,
                              sample_coefficients)
from .oracles import (bounded_A_residual, euler_maruyama, forward_mild, naive_convolution,
                      scalar_exact, weak_residual)
from .pathwise_core import (QuadratureRule, SolutionPath, deterministic_convolution,
                            mild_via_prefix, pathwise_mild, pathwise_mild_direct,
                            pathwise_solution)
from .regularity import (SeminormReport, estimate_exponent, estimate_exponent_ensemble,
                         holder_seminorm, phi_function, sobolev_seminorm)
from .semilinear import (Nonlinearity, WeightedNorm, apply_L, coefficient_truncation_diagnostic,
                         make_nonlinearity, picard_solve, truncate_initial)

__version__ = "0.1.0"
