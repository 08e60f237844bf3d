"""Discrete evolution family ``S(t_k, t_j) = P_{k-1} ... P_j``.

Each one-step propagator ``P_k`` approximates ``exp(dt A_k)`` with ``A``
frozen at the left node of the cell. Only the ``N`` step matrices are
stored; ``S(t, s)`` is applied to vectors by repeated matrix-vector
products, so the cocycle identity holds bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import OrderingError, PropagatorError, SingularityError
from .operator_family import OperatorFamily

__all__ = [
    "EvolutionOracle",
    "PropagatorScheme",
    "derivative_residual",
    "singularity_profile",
    "step_propagator",
    "step_propagators",
]

SCHEMES = ("exact-exponential", "crank-nicolson", "implicit-euler")


@dataclass(frozen=True)
class PropagatorScheme:
    kind: str = "exact-exponential"
    substeps: int = 1

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.kind!r}")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ValueError(f"substeps must be >= 1, got {self.substeps}")

    @classmethod
    def default_for(cls, dim: int) -> "PropagatorScheme":
        return cls("exact-exponential" if dim <= 128 else "crank-nicolson")


def step_propagators(A: np.ndarray, dt: float, scheme: PropagatorScheme) -> np.ndarray:
    """Batched one-step propagators for a stack ``A`` of shape (K, n, n)."""
    if not dt > 0:
        raise PropagatorError(f"dt must be positive, got {dt}")
    A = np.asarray(A, dtype=float)
    h = dt / scheme.substeps
    n = A.shape[-1]
    if scheme.kind == "exact-exponential":
        P = np.exp(h * A) if n == 1 else expm(h * A)
    else:
        eye = np.eye(n)
        theta = 0.5 if scheme.kind == "crank-nicolson" else 1.0
        lhs = eye - theta * h * A
        rhs = eye + (1 - theta) * h * A
        try:
            P = np.linalg.solve(lhs, rhs)
        except np.linalg.LinAlgError as exc:
            raise PropagatorError(
                f"{scheme.kind} step is singular; check the spectral shift") from exc
    if not np.all(np.isfinite(P)):
        raise PropagatorError(f"{scheme.kind} propagator is not finite")
    if scheme.substeps > 1:
        P = np.linalg.matrix_power(P, scheme.substeps)
    return P


def step_propagator(A_k, dt: float, scheme: PropagatorScheme = PropagatorScheme()) -> np.ndarray:
    """Single-step propagator for one matrix; scalars are accepted."""
    A = np.atleast_2d(np.asarray(A_k, dtype=float))
    return step_propagators(A[None], dt, scheme)[0]


@dataclass(frozen=True, eq=False)
class EvolutionOracle:
    """Per-path evolution family built from an :class:`OperatorFamily`.

    ``P[k]`` propagates from ``t_k`` to ``t_{k+1}`` for ``k = 0..N-1``.
    """

    family: OperatorFamily
    scheme: PropagatorScheme | None = None
    P: np.ndarray = field(init=False, repr=False)
    cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.scheme is None:
            object.__setattr__(self, "scheme", PropagatorScheme.default_for(self.family.dim))
        P = step_propagators(self.family.matrices[:-1], self.dt, self.scheme)
        P.setflags(write=False)
        object.__setattr__(self, "P", P)

    @property
    def dt(self) -> float:
        return self.family.tgrid.dt

    @property
    def steps(self) -> int:
        return self.family.tgrid.steps

    @property
    def dim(self) -> int:
        return self.family.dim

    def A(self, k: int) -> np.ndarray:
        return self.family.matrices[k]

    def fractional(self, fraction: float) -> np.ndarray:
        """Propagators over ``fraction * dt`` with ``A_k`` frozen, shape (N, n, n)."""
        key = ("fraction", float(fraction))
        if key not in self.cache:
            if fraction == 1.0:
                self.cache[key] = self.P
            else:
                scheme = PropagatorScheme(self.scheme.kind)
                self.cache[key] = step_propagators(
                    self.family.matrices[:-1], fraction * self.dt, scheme)
        return self.cache[key]

    def apply_S(self, t_idx: int, s_idx: int, v) -> np.ndarray:
        """``S(t, s) v``; ``v`` may be a vector or a matrix of column vectors."""
        if s_idx > t_idx:
            raise OrderingError(f"S(t, s) needs s <= t, got s={s_idx}, t={t_idx}")
        v = np.asarray(v, dtype=float)
        for j in range(s_idx, t_idx):
            v = self.P[j] @ v
        return v

    def apply_SA(self, t_idx: int, s_idx: int, v) -> np.ndarray:
        """``S(t, s) A(s) v``; undefined on the diagonal ``s = t``."""
        if s_idx == t_idx:
            raise SingularityError("S(t, s) A(s) is singular on the diagonal s = t")
        if s_idx > t_idx:
            raise OrderingError(f"S(t, s) needs s <= t, got s={s_idx}, t={t_idx}")
        return self.apply_S(t_idx, s_idx, self.A(s_idx) @ np.asarray(v, dtype=float))

    def trajectory(self, v, s_idx: int = 0) -> np.ndarray:
        """``S(t_k, t_s) v`` for every ``k >= s``, shape (N+1-s, n)."""
        out = np.empty((self.steps + 1 - s_idx, self.dim))
        out[0] = v
        for j in range(s_idx, self.steps):
            out[j - s_idx + 1] = self.P[j] @ out[j - s_idx]
        return out

    def matrix(self, t_idx: int, s_idx: int) -> np.ndarray:
        return self.apply_S(t_idx, s_idx, np.eye(self.dim))


def singularity_profile(oracle: EvolutionOracle, stride: int = 1) -> dict:
    """Uniform and singular bounds of the family over grid pairs.

    Returns ``{"S_bound": max ||S(t, s)||, "SA_bound": max (t - s) ||S(t, s) A(s)||}``
    with ``s`` running over every ``stride``-th node.
    """
    dt, N = oracle.dt, oracle.steps
    s_bound, sa_bound = 1.0, 0.0
    for s in range(0, N, stride):
        S = np.eye(oracle.dim)
        SA = oracle.A(s).copy()
        for t in range(s + 1, N + 1):
            S = oracle.P[t - 1] @ S
            SA = oracle.P[t - 1] @ SA
            s_bound = max(s_bound, np.linalg.norm(S, 2))
            sa_bound = max(sa_bound, (t - s) * dt * np.linalg.norm(SA, 2))
    return {"S_bound": float(s_bound), "SA_bound": float(sa_bound)}


def _default_pairs(N: int):
    fr = [(0.0, 0.25), (0.0, 0.5), (0.25, 0.5), (0.25, 0.75), (0.5, 0.75)]
    return sorted({(int(round(a * N)), int(round(b * N))) for a, b in fr})


def derivative_residual(oracle: EvolutionOracle, pairs=None, midpoint: bool | None = None) -> float:
    """Relative defect of ``d/dt S(t, s) = A(t) S(t, s)`` on sampled pairs.

    Forward difference ``(S(t + dt, s) - S(t, s)) / dt`` against
    ``A(t) S(t, s)``. With ``midpoint`` (default for Crank-Nicolson) both
    sides are averaged over ``t`` and ``t + dt``, giving a second-order check.
    Pairs default to fixed fractions of the horizon so refinements sample the
    same continuous times.
    """
    N = oracle.steps
    if N < 3:
        raise ValueError("derivative_residual needs at least 3 steps")
    if midpoint is None:
        midpoint = oracle.scheme.kind == "crank-nicolson"
    pairs = _default_pairs(N) if pairs is None else pairs
    worst = 0.0
    for s, t in pairs:
        if not s <= t < N:
            continue
        S = oracle.matrix(t, s)
        S_next = oracle.P[t] @ S
        diff = (S_next - S) / oracle.dt
        if midpoint:
            ref = 0.5 * (oracle.A(t) @ S + oracle.A(t + 1) @ S_next)
        else:
            ref = oracle.A(t) @ S
        scale = np.linalg.norm(ref, 2)
        if scale == 0:
            res = np.linalg.norm(diff, 2)
        else:
            res = np.linalg.norm(diff - ref, 2) / scale
        worst = max(worst, float(res))
    return worst
