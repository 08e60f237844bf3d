"""Seeded Brownian drivers and discrete Ito / forward stochastic integrals.

A :class:`BrownianDriver` holds the increments of a truncated cylindrical
Brownian motion on a :class:`~pathmild.grids.TimeGrid`. It is the only source
of randomness: noise modes feed the stochastic integrals, and a few
*reserved* modes are set aside for random coefficients.

Every increment is a pure function of ``(master_seed, path_index)`` and the
grid, so paths can be generated in any order by any number of workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, OrderingError, ResolutionError, ShapeError
from .grids import SpatialGrid, TimeGrid, mode_basis

__all__ = [
    "BrownianDriver",
    "NoiseOperator",
    "TimeGrid",
    "forward_increments",
    "forward_integral",
    "ito_increment",
    "ito_integral",
    "ito_path",
    "noise_increments",
    "sample_driver",
    "smooth_covariance_root",
    "white_covariance_root",
]

# spawn-key tags keeping the base, bridge and rerandomization streams apart
_BASE, _BRIDGE, _RERANDOMIZE = 0, 1, 2


def _rng(master_seed: int, path_index: int, *key: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(path_index), *key))
    return np.random.default_rng(seq)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class BrownianDriver:
    """Increments of ``modes`` noise channels plus ``reserved`` coefficient channels.

    Attributes
    ----------
    grid : TimeGrid
    increments : ndarray, shape (N, modes)
        ``increments[k]`` is ``W(t_{k+1}) - W(t_k)`` for the noise modes.
    reserved_increments : ndarray, shape (N, reserved)
        Independent channels used by coefficient recipes.
    level : int
        Number of bridge refinements applied since sampling.
    """

    grid: TimeGrid
    increments: np.ndarray
    reserved_increments: np.ndarray
    master_seed: int
    path_index: int
    level: int = 0
    _W: np.ndarray = field(init=False, repr=False)
    _W_reserved: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        inc = _readonly(self.increments)
        res = _readonly(self.reserved_increments)
        if inc.ndim != 2 or inc.shape[0] != self.grid.steps:
            raise ShapeError(f"increments must have shape (N, modes), got {inc.shape}")
        if res.ndim != 2 or res.shape[0] != self.grid.steps:
            raise ShapeError(f"reserved increments must have shape (N, r), got {res.shape}")
        object.__setattr__(self, "increments", inc)
        object.__setattr__(self, "reserved_increments", res)
        zero = np.zeros((1, inc.shape[1]))
        object.__setattr__(self, "_W", _readonly(np.concatenate([zero, np.cumsum(inc, axis=0)])))
        zero = np.zeros((1, res.shape[1]))
        object.__setattr__(
            self, "_W_reserved", _readonly(np.concatenate([zero, np.cumsum(res, axis=0)])))

    @property
    def modes(self) -> int:
        return self.increments.shape[1]

    @property
    def reserved(self) -> int:
        return self.reserved_increments.shape[1]

    @property
    def W(self) -> np.ndarray:
        """Brownian values at the grid nodes, shape (N+1, modes)."""
        return self._W

    @property
    def W_reserved(self) -> np.ndarray:
        return self._W_reserved

    def refine(self) -> "BrownianDriver":
        """Halve the step by Brownian-bridge conditioning.

        Pairs of fine increments sum to the coarse increment, so the coarse
        path is reproduced exactly (up to rounding) on the coarse nodes.
        """
        dt = self.grid.dt
        both = np.hstack([self.increments, self.reserved_increments])
        z = _rng(self.master_seed, self.path_index, _BRIDGE, self.level + 1).standard_normal(
            both.shape)
        half, jitter = 0.5 * both, 0.5 * np.sqrt(dt) * z
        fine = np.empty((2 * both.shape[0], both.shape[1]))
        fine[0::2] = half + jitter
        fine[1::2] = half - jitter
        m = self.modes
        return BrownianDriver(self.grid.refined(2), fine[:, :m], fine[:, m:],
                              self.master_seed, self.path_index, self.level + 1)

    def refined_to(self, steps: int) -> "BrownianDriver":
        d = self
        while d.grid.steps < steps:
            d = d.refine()
        if d.grid.steps != steps:
            raise ConfigurationError(
                f"cannot bridge-refine {self.grid.steps} steps to {steps}")
        return d

    def coarsen(self, factor: int) -> "BrownianDriver":
        """Sum blocks of ``factor`` increments (exact inverse of refinement in law)."""
        N = self.grid.steps
        if factor < 1 or N % factor:
            raise ConfigurationError(f"factor {factor} does not divide {N} steps")
        inc = self.increments.reshape(N // factor, factor, -1).sum(axis=1)
        res = self.reserved_increments.reshape(N // factor, factor, -1).sum(axis=1)
        return BrownianDriver(TimeGrid(self.grid.horizon, N // factor), inc, res,
                              self.master_seed, self.path_index, self.level)

    def rerandomize_after(self, k: int, seed: int) -> "BrownianDriver":
        """Copy of the driver with every increment from step ``k`` on redrawn.

        Values ``W(t_j)`` for ``j <= k`` are untouched. Used to test
        adaptedness.
        """
        rng = _rng(seed, self.path_index, _RERANDOMIZE)
        both = np.hstack([self.increments, self.reserved_increments])
        both[k:] = np.sqrt(self.grid.dt) * rng.standard_normal(both[k:].shape)
        m = self.modes
        return BrownianDriver(self.grid, both[:, :m], both[:, m:],
                              self.master_seed, self.path_index, self.level)


def sample_driver(grid: TimeGrid, modes: int, master_seed: int, path_index: int,
                  reserved: int = 1) -> BrownianDriver:
    """Draw a reproducible driver; increments are ``Normal(0, dt)``."""
    if int(modes) != modes or modes < 1:
        raise ConfigurationError(f"modes must be >= 1, got {modes}")
    if reserved < 0:
        raise ConfigurationError(f"reserved must be >= 0, got {reserved}")
    rng = _rng(master_seed, path_index, _BASE)
    both = np.sqrt(grid.dt) * rng.standard_normal((grid.steps, int(modes) + reserved))
    return BrownianDriver(grid, both[:, :modes], both[:, modes:], master_seed, path_index)


@dataclass(frozen=True, eq=False)
class NoiseOperator:
    """Discrete ``G(t_k)`` from the noise modes to the state space.

    ``mode_vectors`` is either one matrix of shape (n_x, n_h), meaning a
    constant operator, or a stack of shape (N, n_x, n_h) indexed by time
    step. The optional ``covariance_root`` acts on the mode side, so the
    effective step operator is ``G_k @ covariance_root``.
    """

    mode_vectors: np.ndarray
    covariance_root: np.ndarray | None = None

    def __post_init__(self):
        G = np.asarray(self.mode_vectors, dtype=float)
        if G.ndim == 1:
            G = G[:, None]
        if G.ndim not in (2, 3):
            raise ShapeError(f"mode_vectors must be 2D or 3D, got shape {G.shape}")
        object.__setattr__(self, "mode_vectors", G)
        if self.covariance_root is not None:
            Q = np.asarray(self.covariance_root, dtype=float)
            if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] != G.shape[-1]:
                raise ShapeError(
                    f"covariance_root must be ({G.shape[-1]}, {G.shape[-1]}), got {Q.shape}")
            object.__setattr__(self, "covariance_root", Q)

    @classmethod
    def constant(cls, G, covariance_root=None) -> "NoiseOperator":
        return cls(np.atleast_2d(np.asarray(G, dtype=float)), covariance_root)

    @classmethod
    def scalar(cls, values) -> "NoiseOperator":
        """Scalar problem (n_x = n_h = 1); ``values`` is a number or a per-step array."""
        v = np.asarray(values, dtype=float)
        if v.ndim == 0:
            return cls(v.reshape(1, 1))
        return cls(v.reshape(-1, 1, 1))

    @property
    def state_dim(self) -> int:
        return self.mode_vectors.shape[-2]

    @property
    def modes(self) -> int:
        return self.mode_vectors.shape[-1]

    @property
    def is_constant(self) -> bool:
        return self.mode_vectors.ndim == 2

    def at(self, k: int) -> np.ndarray:
        """Effective operator ``G_k sqrt(Q)`` at step ``k``."""
        G = self.mode_vectors if self.is_constant else self.mode_vectors[k]
        return G if self.covariance_root is None else G @ self.covariance_root

    def scaled(self, c: float) -> "NoiseOperator":
        return NoiseOperator(c * self.mode_vectors, self.covariance_root)


def _check_modes(G: NoiseOperator, driver: BrownianDriver):
    if G.modes != driver.modes:
        raise ShapeError(f"noise operator has {G.modes} modes, driver has {driver.modes}")
    if not G.is_constant and G.mode_vectors.shape[0] < driver.grid.steps:
        raise ShapeError(
            f"noise operator defined on {G.mode_vectors.shape[0]} steps, "
            f"driver has {driver.grid.steps}")


def noise_increments(G: NoiseOperator, driver: BrownianDriver) -> np.ndarray:
    """Per-step Ito increments ``G_k sqrt(Q) dW_k``, shape (N, n_x)."""
    _check_modes(G, driver)
    dW = driver.increments
    if G.covariance_root is not None:
        dW = dW @ G.covariance_root.T
    if G.is_constant:
        return dW @ G.mode_vectors.T
    return np.einsum("kij,kj->ki", G.mode_vectors[: driver.grid.steps], dW)


def ito_path(G: NoiseOperator, driver: BrownianDriver) -> np.ndarray:
    """Left-point Ito integral ``J(G)(t_k)`` at every node, shape (N+1, n_x).

    Stored as prefix sums, so increments over ``[t_s, t_t]`` are exact
    differences of the same two stored numbers whichever way they are split.
    """
    xi = noise_increments(G, driver)
    return np.concatenate([np.zeros((1, xi.shape[1])), np.cumsum(xi, axis=0)])


def ito_integral(G: NoiseOperator, driver: BrownianDriver, upto: int) -> np.ndarray:
    if not 0 <= upto <= driver.grid.steps:
        raise OrderingError(f"upto must lie in [0, {driver.grid.steps}], got {upto}")
    return ito_path(G, driver)[upto]


def ito_increment(G: NoiseOperator, driver: BrownianDriver, s_idx: int, t_idx: int) -> np.ndarray:
    """``J(G)(t) - J(G)(s)``, i.e. the integral of ``G`` over ``(t_s, t_t)``."""
    if s_idx > t_idx:
        raise OrderingError(f"s_idx={s_idx} exceeds t_idx={t_idx}")
    J = ito_path(G, driver)
    return J[t_idx] - J[s_idx]


def _window_increments(driver: BrownianDriver, t_idx: int, n_reg: float) -> np.ndarray:
    """``W(min(t_j + 1/n_reg, t)) - W(t_j)`` for ``j < t_idx`` (linear interpolation)."""
    grid = driver.grid
    if 1.0 / n_reg < grid.dt * (1 - 1e-12):
        raise ResolutionError(
            f"window 1/n_reg = {1.0 / n_reg:g} is shorter than dt = {grid.dt:g}")
    t = grid.nodes
    upper = np.minimum(t[:t_idx] + 1.0 / n_reg, t[t_idx])
    pos = upper / grid.dt
    lo = np.minimum(np.floor(pos + 1e-9).astype(int), grid.steps)
    frac = np.clip(pos - lo, 0.0, 1.0)
    hi = np.minimum(lo + 1, grid.steps)
    W = driver.W
    W_up = W[lo] + frac[:, None] * (W[hi] - W[lo])
    return W_up - W[:t_idx]


def forward_increments(G: NoiseOperator, driver: BrownianDriver, t_idx: int,
                       n_reg: float) -> np.ndarray:
    """Weighted window increments ``n dt G_j sqrt(Q) (W(s_j + 1/n) - W(s_j))``, shape (t_idx, n_x).

    Windows reaching past ``t`` are clamped to it.
    """
    _check_modes(G, driver)
    if not 0 <= t_idx <= driver.grid.steps:
        raise OrderingError(f"t_idx must lie in [0, {driver.grid.steps}], got {t_idx}")
    dW = _window_increments(driver, t_idx, n_reg)
    if G.covariance_root is not None:
        dW = dW @ G.covariance_root.T
    if G.is_constant:
        y = dW @ G.mode_vectors.T
    else:
        y = np.einsum("kij,kj->ki", G.mode_vectors[:t_idx], dW)
    return n_reg * driver.grid.dt * y


def forward_integral(kernel_of_s, G: NoiseOperator, driver: BrownianDriver, t_idx: int,
                     n_reg: float) -> np.ndarray:
    """Regularized forward integral of ``s -> kernel(s) G(s)`` over ``[0, t]``.

    Discretizes ``n * int_0^t K(s) G(s) (W(s + 1/n) - W(s)) ds`` with a
    left-point rule in ``s``. The kernel need not be adapted.
    """
    y = forward_increments(G, driver, t_idx, n_reg)
    out = np.zeros(G.state_dim)
    for j in range(t_idx):
        out = out + np.asarray(kernel_of_s(j)) @ y[j]
    return out


def white_covariance_root(grid: SpatialGrid) -> np.ndarray:
    """``sqrt(Q)`` for discrete space-time white noise: identity scaled by ``h^{-1/2}``."""
    return np.eye(grid.nodes) / np.sqrt(grid.spacing)


def smooth_covariance_root(grid: SpatialGrid, decay: float = 2.0, amplitude: float = 1.0,
                           max_modes: int | None = None) -> np.ndarray:
    """``sqrt(Q)`` for trace-class noise with eigenvalues ``amplitude * (1 + k^2)^(-decay/2)``.

    Eigenfunctions are the Laplacian modes of ``grid`` normalized in
    ``L^2``, so the noise field does not depend on the mesh width.
    """
    if grid.is_scalar:
        return np.array([[amplitude]])
    V, k = mode_basis(grid)
    q = amplitude * (1.0 + k**2) ** (-decay / 2)
    if max_modes is not None:
        q[max_modes:] = 0.0
    # columns of V / sqrt(h) sample the L^2-normalized eigenfunctions
    return (V * q) @ V.T / np.sqrt(grid.spacing)
