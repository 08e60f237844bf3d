"""Reference solvers and identity residuals for cross-checking the pathwise mild solution.

* :func:`euler_maruyama` steps the SDE system directly (``A_k U_k`` is
  well-defined on the grid); adapted by construction.
* :func:`scalar_exact` is the integrating-factor solution of a scalar
  problem with random drift.
* :func:`weak_residual` and :func:`bounded_A_residual` measure how far a
  computed path is from satisfying the weak and the strong integral
  identities.
* :func:`forward_mild` evaluates the convolution as a regularized forward
  integral with the (non-adapted) kernel ``S(t, s)``.
* :func:`naive_convolution` is the textbook sum ``sum S(t, s) G dW_s``;
  it reads ``A`` after ``s`` and therefore is *not* adapted.
"""

from __future__ import annotations

import numpy as np

from .errors import InstabilityError, OrderingError, ShapeError
from .evolution_family import EvolutionOracle
from .noise import BrownianDriver, NoiseOperator, forward_increments, ito_path, noise_increments
from .operator_family import OperatorFamily
from .pathwise_core import SolutionPath
from .semilinear import Nonlinearity

__all__ = [
    "bounded_A_residual",
    "euler_maruyama",
    "forward_mild",
    "naive_convolution",
    "scalar_exact",
    "weak_residual",
]

EM_SCHEMES = ("semi-implicit", "explicit")


def euler_maruyama(family: OperatorFamily, u0, nl: Nonlinearity | None, driver: BrownianDriver,
                   scheme: str = "semi-implicit", G: NoiseOperator | None = None) -> SolutionPath:
    """Euler-Maruyama for ``dU = (A U + F(U)) dt + (B(U) + G) dW``.

    Semi-implicit: ``U_{k+1} = (I - dt A_{k+1})^{-1} [U_k + dt F_k + B_k dW_k]``.
    Explicit: ``U_{k+1} = U_k + dt (A_k U_k + F_k) + B_k dW_k``; raises
    :class:`InstabilityError` once ``||U|| > 1e6 ||u0|| + 1``.
    ``G`` is an optional state-independent noise operator added to ``B``.
    """
    if scheme not in EM_SCHEMES:
        raise ValueError(f"scheme must be one of {EM_SCHEMES}, got {scheme!r}")
    N, dt, n = driver.grid.steps, driver.grid.dt, family.dim
    if family.tgrid.steps != N:
        raise ShapeError(f"family has {family.tgrid.steps} steps, driver has {N}")
    u0 = np.broadcast_to(np.asarray(u0, dtype=float), (n,))
    nl = Nonlinearity() if nl is None else nl
    xi = noise_increments(G, driver) if G is not None else np.zeros((N, n))
    dW = driver.increments
    if nl.covariance_root is not None:
        dW = dW @ nl.covariance_root.T
    A = family.matrices
    if scheme == "semi-implicit":
        M = np.linalg.inv(np.eye(n) - dt * A[1:])
    limit = 1e6 * np.linalg.norm(u0) + 1.0
    U = np.empty((N + 1, n))
    U[0] = u0
    for k in range(N):
        u = U[k]
        rhs = u + xi[k]
        if nl.F is not None:
            rhs = rhs + dt * nl.F(k, u)
        if nl.B is not None:
            rhs = rhs + np.atleast_2d(nl.B(k, u)) @ dW[k]
        if scheme == "semi-implicit":
            U[k + 1] = M[k] @ rhs
        else:
            U[k + 1] = rhs + dt * (A[k] @ u)
            if not np.linalg.norm(U[k + 1]) <= limit:
                raise InstabilityError(
                    f"explicit Euler-Maruyama blew up at step {k + 1} "
                    f"(dt * ||A|| = {dt * np.linalg.norm(A[k], 2):.3g}); use semi-implicit")
    return SolutionPath(U, driver.grid, f"euler-maruyama-{scheme}",
                        {"master_seed": driver.master_seed, "path_index": driver.path_index})


def scalar_exact(A_path, G, driver: BrownianDriver, u0: float = 0.0) -> SolutionPath:
    """Integrating-factor solution of ``dU = A(t) U dt + G dW``, ``U(0) = u0``, ``n_x = 1``.

    ``U_{k+1} = exp(A_k dt) U_k + G_k dW_k``, i.e. for ``u0 = 0``
    ``U(t) = sum_{j<t} exp(sum_{j<r<t} A_r dt) G_j dW_j``.
    ``A_path`` is an array over the nodes or a callable of the time index;
    ``G`` a number or per-step array.
    """
    if driver.modes != 1:
        raise ShapeError(f"scalar_exact needs a one-mode driver, got {driver.modes} modes")
    N, dt = driver.grid.steps, driver.grid.dt
    a = np.array([A_path(k) for k in range(N)]) if callable(A_path) else np.asarray(A_path)
    a = np.asarray(a, dtype=float).reshape(-1)[:N]
    if a.size != N:
        raise ShapeError(f"A_path must cover {N} steps, got {a.size}")
    g = np.broadcast_to(np.asarray(G, dtype=float).reshape(-1), (N,))
    decay = np.exp(a * dt)
    xi = g * driver.increments[:, 0]
    U = np.zeros(N + 1)
    U[0] = float(np.asarray(u0).reshape(-1)[0])
    for k in range(N):
        U[k + 1] = decay[k] * U[k] + xi[k]
    return SolutionPath(U, driver.grid, "scalar-exact",
                        {"master_seed": driver.master_seed, "path_index": driver.path_index})


def _states(U) -> np.ndarray:
    s = U.states if isinstance(U, SolutionPath) else np.asarray(U, dtype=float)
    return s[:, None] if s.ndim == 1 else s


def weak_residual(U, family: OperatorFamily, G: NoiseOperator, driver: BrownianDriver, xstar,
                  u0=None) -> float:
    """Defect of the weak identity tested against ``x*``.

    ``max_t |<U(t), x*> - <u0, x*> - sum_{s<t} <U(s), A_s^T x*> dt - sum_{s<t} <G_s dW_s, x*>|
    / (1 + |<U(t), x*>|)``.
    """
    xstar = np.asarray(xstar, dtype=float)
    if not np.any(xstar):
        raise ValueError("xstar must be nonzero")
    states = _states(U)
    N, dt = driver.grid.steps, driver.grid.dt
    a = states @ xstar
    Atx = np.einsum("kji,j->ki", family.matrices[:N], xstar)
    drift = np.concatenate([[0.0], np.cumsum(np.einsum("ki,ki->k", states[:N], Atx)) * dt])
    noise = ito_path(G, driver) @ xstar
    start = 0.0 if u0 is None else float(np.asarray(u0) @ xstar)
    return float(np.max(np.abs(a - start - drift - noise) / (1.0 + np.abs(a))))


def bounded_A_residual(U, family: OperatorFamily, G: NoiseOperator, driver: BrownianDriver,
                       u0=None) -> float:
    """``max_t ||U(t) - u0 - sum_{s<t} A_s U(s) dt - J(G)(t)|| / ||U||_sup`` (0 if ``U = 0``)."""
    states = _states(U)
    N, dt = driver.grid.steps, driver.grid.dt
    AU = np.einsum("kij,kj->ki", family.matrices[:N], states[:N])
    drift = np.concatenate([np.zeros((1, states.shape[1])), np.cumsum(AU, axis=0) * dt])
    start = 0.0 if u0 is None else np.asarray(u0, dtype=float)
    defect = np.linalg.norm(states - start - drift - ito_path(G, driver), axis=1)
    scale = float(np.max(np.linalg.norm(states, axis=1)))
    return float(defect.max() / scale) if scale > 0 else float(defect.max())


def forward_mild(oracle: EvolutionOracle, G: NoiseOperator, driver: BrownianDriver, t_idx: int,
                 n_reg: float) -> np.ndarray:
    """``int_0^t S(t, s) G(s) dW^-(s)`` by regularization with window ``1 / n_reg``.

    Requires ``1 / n_reg >= dt``.
    """
    y = forward_increments(G, driver, t_idx, n_reg)
    acc = np.zeros(oracle.dim)
    for j in range(t_idx):
        acc = oracle.P[j] @ (acc + y[j])
    return acc


def naive_convolution(oracle: EvolutionOracle, G: NoiseOperator, driver: BrownianDriver,
                      upto: int | None = None, t_idx: int | None = None) -> np.ndarray:
    """``sum_{j < upto} S(t, t_j) G_j dW_j`` with the future-dependent kernel ``S(t, t_j)``.

    Defaults: ``t = T`` and ``upto = t``. Even for ``upto < t`` the sum reads
    the operator family on ``[t_upto, t]``.
    """
    t_idx = oracle.steps if t_idx is None else t_idx
    upto = t_idx if upto is None else upto
    if not 0 <= upto <= t_idx <= oracle.steps:
        raise OrderingError(f"need 0 <= upto <= t_idx <= {oracle.steps}, got {upto}, {t_idx}")
    xi = noise_increments(G, driver)
    acc = np.zeros(oracle.dim)
    for j in range(upto):
        acc = oracle.P[j] @ (acc + xi[j])
    return oracle.apply_S(t_idx, upto, acc)

