"""Pathwise mild solution of ``dU = A(t) U dt + G dW``, ``U(0) = 0``.

The solution is evaluated as

    U(t) = S(t, 0) J(t) - int_0^t S(t, s) A(s) (J(t) - J(s)) ds,

with ``J`` the Ito integral of ``G``. Only Lebesgue integrals of the random
evolution family appear, so ``U(t)`` never reads the driver past ``t``.

The singular ``ds`` integral is computed by product integration: on every
cell ``[t_j, t_{j+1}]`` the kernel ``S(t, s) A_j`` is integrated exactly
over subcells (``int S A ds = S(t, t_{j+1}) (E(b) - E(a))`` with
``E(tau) = exp(tau A_j)``), while ``J(t) - J(s)`` is taken at each subcell
midpoint from the linear interpolant of ``J``. The diagonal ``s = t`` is
never evaluated.

Summing by parts over the cells turns the formula into the forward
recursion ``U_{j+1} = P_j U_j + (P_j - W_j) dJ_j`` (``W_j`` the cell weights
below), which is how all-times solutions are computed; the term-by-term
evaluation is kept as :func:`pathwise_mild_direct`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, OrderingError
from .evolution_family import EvolutionOracle
from .grids import TimeGrid
from .noise import BrownianDriver, NoiseOperator, ito_path, noise_increments

__all__ = [
    "QuadratureRule",
    "SolutionPath",
    "cell_weights",
    "convolution_path",
    "deterministic_convolution",
    "mild_via_prefix",
    "pathwise_mild",
    "pathwise_mild_direct",
    "pathwise_solution",
    "prefix_solution",
]

RULES = ("midpoint-excluding-diagonal", "graded-mesh")


@dataclass(frozen=True)
class QuadratureRule:
    """Subcell layout for the singular integral.

    ``midpoint-excluding-diagonal`` splits every cell into ``substeps`` equal
    subcells. ``graded-mesh`` places breakpoints at distance
    ``dt * (i / substeps) ** grading`` from the right end of each cell, which
    clusters them toward ``s = t`` on the last cell.
    """

    kind: str = "midpoint-excluding-diagonal"
    substeps: int = 2
    grading: float = 2.0

    def __post_init__(self):
        if self.kind not in RULES:
            raise ConfigurationError(f"quadrature rule must be one of {RULES}, got {self.kind!r}")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ConfigurationError(f"substeps must be >= 1, got {self.substeps}")
        if self.kind == "graded-mesh" and not self.grading > 0:
            raise ConfigurationError(f"grading must be positive, got {self.grading}")

    def breakpoints(self) -> np.ndarray:
        """Subcell ends as fractions of ``dt``, measured back from the cell's right end."""
        u = np.arange(self.substeps + 1) / self.substeps
        return u if self.kind == "midpoint-excluding-diagonal" else u**self.grading


@dataclass(frozen=True, eq=False)
class SolutionPath:
    """States ``U(t_k)`` on every node of ``tgrid``, shape (N+1, n_x)."""

    states: np.ndarray
    tgrid: TimeGrid
    method: str
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.states, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.shape[0] != self.tgrid.steps + 1:
            raise ValueError(f"need {self.tgrid.steps + 1} states, got {s.shape[0]}")
        object.__setattr__(self, "states", s)

    @property
    def times(self) -> np.ndarray:
        return self.tgrid.nodes

    def __getitem__(self, k):
        return self.states[k]

    def at_times(self, coarse: TimeGrid) -> np.ndarray:
        """States restricted to the nodes of a coarser grid with the same horizon."""
        factor, rem = divmod(self.tgrid.steps, coarse.steps)
        if rem or not np.isclose(coarse.horizon, self.tgrid.horizon):
            raise ValueError("grids are not nested")
        return self.states[::factor]


def cell_weights(oracle: EvolutionOracle, rule: QuadratureRule) -> np.ndarray:
    """``W_j = sum_i (E(tau_{i+1}) - E(tau_i)) * mid_i / dt`` for every cell.

    ``tau_i`` are the rule's breakpoints measured back from ``t_{j+1}`` and
    ``mid_i`` the subcell midpoints, so that the exact kernel integral against
    the linear interpolant of ``J`` splits as
    ``(P_j - I) (J(t) - J_{j+1}) + W_j (J_{j+1} - J_j)``.
    """
    key = ("weights", rule)
    if key not in oracle.cache:
        tau = rule.breakpoints()
        mids = 0.5 * (tau[1:] + tau[:-1])
        N, n = oracle.steps, oracle.dim
        E_prev = np.broadcast_to(np.eye(n), (N, n, n))
        W = np.zeros((N, n, n))
        for b, mid in zip(tau[1:], mids):
            E = oracle.fractional(b)
            W += (E - E_prev) * mid
            E_prev = E
        W.setflags(write=False)
        oracle.cache[key] = W
    return oracle.cache[key]


def _sweep(oracle: EvolutionOracle, J: np.ndarray, rows: np.ndarray, rule: QuadratureRule):
    """Evaluate the pathwise formula at the output indices ``rows`` (sorted).

    For each output time ``t`` the recursion ``z_{j+1} = P_j z_j - c_j``
    with ``z_0 = J_t`` ends at ``z_t = U(t)``; all output times advance
    together, each row dropping out once ``j`` reaches its ``t``.
    """
    P = oracle.P
    W = cell_weights(oracle, rule)
    dJ = np.diff(J, axis=0)
    WdJ = np.einsum("kij,kj->ki", W, dJ)
    eye = np.eye(oracle.dim)
    Z = J[rows].copy()
    first = 0
    for j in range(int(rows[-1]) if len(rows) else 0):
        while rows[first] <= j:
            first += 1
        active = rows[first:]
        D = J[active] - J[j + 1]
        Z[first:] = Z[first:] @ P[j].T - D @ (P[j] - eye).T - WdJ[j]
    return Z


def _increment_operators(oracle: EvolutionOracle, rule: QuadratureRule) -> np.ndarray:
    """``M_j = P_j - W_j`` (cached): the cell-``j`` increment's contribution at ``t_{j+1}``."""
    key = ("increment-operators", rule)
    if key not in oracle.cache:
        M = oracle.P - cell_weights(oracle, rule)
        M.setflags(write=False)
        oracle.cache[key] = M
    return oracle.cache[key]


def _accumulate(oracle: EvolutionOracle, G: NoiseOperator, driver: BrownianDriver,
                rule: QuadratureRule, upto: int) -> np.ndarray:
    """States ``U(t_0..t_upto)`` via ``U_{j+1} = P_j U_j + (P_j - W_j) (J_{j+1} - J_j)``.

    Summation by parts turns the singular integral against ``J(t) - J(s)``
    into this forward recursion; ``U(t_k)`` reads increments before ``t_k``
    only.
    """
    M = _increment_operators(oracle, rule)
    dJ = noise_increments(G, driver)
    U = np.zeros((upto + 1, oracle.dim))
    for j in range(upto):
        U[j + 1] = oracle.P[j] @ U[j] + M[j] @ dJ[j]
    return U


def _check_t(oracle: EvolutionOracle, t_idx: int | None) -> int:
    t_idx = oracle.steps if t_idx is None else t_idx
    if not 0 <= t_idx <= oracle.steps:
        raise OrderingError(f"t_idx must lie in [0, {oracle.steps}], got {t_idx}")
    return t_idx


def pathwise_mild(oracle: EvolutionOracle, G: NoiseOperator, driver: BrownianDriver,
                  rule: QuadratureRule = QuadratureRule(), t_idx: int | None = None) -> np.ndarray:
    """``U(t_idx)`` from the pathwise mild formula (zero at ``t_idx = 0``)."""
    t_idx = _check_t(oracle, t_idx)
    return _accumulate(oracle, G, driver, rule, t_idx)[t_idx]


def pathwise_mild_direct(oracle: EvolutionOracle, G: NoiseOperator, driver: BrownianDriver,
                         rule: QuadratureRule = QuadratureRule(),
                         t_idx: int | None = None) -> np.ndarray:
    """``U(t_idx)`` evaluated term by term from ``S(t, 0) J(t) - int S A (J(t) - J(s)) ds``.

    Costs ``O(t_idx)`` matrix products per output time; used to cross-check
    the recursion behind :func:`pathwise_mild`.
    """
    t_idx = _check_t(oracle, t_idx)
    if t_idx == 0:
        return np.zeros(oracle.dim)
    J = ito_path(G, driver)
    return _sweep(oracle, J, np.array([t_idx]), rule)[0]


def pathwise_solution(oracle: EvolutionOracle, G: NoiseOperator, driver: BrownianDriver,
                      rule: QuadratureRule = QuadratureRule()) -> SolutionPath:
    """Pathwise mild solution at every grid node."""
    U = _accumulate(oracle, G, driver, rule, oracle.steps)
    return SolutionPath(U, driver.grid, "pathwise-mild", _provenance(driver, oracle))


def _provenance(driver: BrownianDriver, oracle: EvolutionOracle) -> dict:
    return {"master_seed": driver.master_seed, "path_index": driver.path_index,
            "steps": driver.grid.steps, "horizon": driver.grid.horizon, "dim": oracle.dim,
            "scheme": oracle.scheme.kind}


def convolution_path(oracle: EvolutionOracle, f) -> np.ndarray:
    """Left-point ``S * f (t_k) = sum_{j<k} S(t_k, t_j) f_j dt`` for every k.

    ``f`` is an array of shape (N+1, n) or (N, n), or a callable of the
    time index.
    """
    N, dt = oracle.steps, oracle.dt
    if callable(f):
        f = np.array([f(j) for j in range(N)])
    f = np.asarray(f, dtype=float).reshape(-1, oracle.dim)
    out = np.zeros((N + 1, oracle.dim))
    for j in range(N):
        out[j + 1] = oracle.P[j] @ (out[j] + dt * f[j])
    return out


def deterministic_convolution(oracle: EvolutionOracle, f, t_idx: int) -> np.ndarray:
    if not 0 <= t_idx <= oracle.steps:
        raise OrderingError(f"t_idx must lie in [0, {oracle.steps}], got {t_idx}")
    if callable(f):
        f = np.array([f(j) for j in range(t_idx)] or np.zeros((0, oracle.dim)))
    f = np.asarray(f, dtype=float).reshape(-1, oracle.dim)
    acc = np.zeros(oracle.dim)
    for j in range(t_idx):
        acc = oracle.P[j] @ (acc + oracle.dt * f[j])
    return acc


def prefix_solution(oracle: EvolutionOracle, G: NoiseOperator, driver: BrownianDriver) -> SolutionPath:
    """``U(t) = J(t) + int_0^t S(t, s) A(s) J(s) ds`` at every node.

    Product rule with ``J`` frozen at the left node of each cell:
    ``int_cell S(t, s) A_j ds J_j = S(t, t_{j+1}) (P_j - I) J_j``.
    """
    J = ito_path(G, driver)
    N, n = oracle.steps, oracle.dim
    acc = np.zeros((N + 1, n))
    for j in range(N):
        acc[j + 1] = oracle.P[j] @ acc[j] + (oracle.P[j] @ J[j] - J[j])
    return SolutionPath(J + acc, driver.grid, "prefix-mild", _provenance(driver, oracle))


def mild_via_prefix(oracle: EvolutionOracle, G: NoiseOperator, driver: BrownianDriver,
                    t_idx: int | None = None) -> np.ndarray:
    t_idx = oracle.steps if t_idx is None else t_idx
    return prefix_solution(oracle, G, driver).states[t_idx]
