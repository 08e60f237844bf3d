"""Random adapted families of 1D divergence-form operators.

``A(t_k) u = D(a(t_k, x) D u) + a0(t_k, x) u`` is assembled with a
three-point flux stencil on a :class:`~pathmild.grids.SpatialGrid`. The
diffusion coefficient is driven by a reserved channel of the Brownian driver
through a lagged moving average, which keeps it adapted and Lipschitz in
time.

A grid with a single node is treated as the scalar problem
``A(t) = a0(t) - a(t)``: a random relaxation rate rather than a differential
operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, InvertibilityError, ShapeError
from .grids import SpatialGrid, TimeGrid
from .noise import BrownianDriver

__all__ = [
    "CoefficientField",
    "CoefficientRecipe",
    "ConditionsReport",
    "OperatorFamily",
    "assemble",
    "build_family",
    "cis_holder_constant",
    "cis_running_quotient",
    "kato_tanabe_constant",
    "lagged_average",
    "resolvent_bound",
    "sample_coefficients",
    "sector_probes",
]


@dataclass(frozen=True)
class CoefficientRecipe:
    """Parameters of ``a(t, x) = kappa0 + kappa1 sin(2 pi x / L) tanh(Y(t))``.

    ``Y`` is the moving average of reserved driver channel ``channel`` over
    the window ``lag``. ``kind="constant"`` ignores the driver entirely.
    """

    kind: str = "lagged-average"
    kappa0: float = 1.0
    kappa1: float = 0.4
    lag: float = 0.1
    a0: float = -1.0
    channel: int = 0
    holder_mu: float = 1.0

    def __post_init__(self):
        if self.kind not in ("lagged-average", "constant"):
            raise ConfigurationError(f"unknown coefficient recipe {self.kind!r}")
        if self.kappa0 - abs(self.kappa1) <= 0:
            raise ConfigurationError(
                f"ellipticity needs kappa0 - |kappa1| > 0, got {self.kappa0} and {self.kappa1}")
        if not self.lag > 0:
            raise ConfigurationError(f"lag must be positive, got {self.lag}")
        if not 0.5 < self.holder_mu <= 1:
            raise ConfigurationError(f"holder_mu must lie in (1/2, 1], got {self.holder_mu}")

    @property
    def bounds(self) -> tuple[float, float]:
        k1 = 0.0 if self.kind == "constant" else abs(self.kappa1)
        return self.kappa0 - k1, self.kappa0 + k1


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Node values ``a[k, j] = a(t_k, x_j)`` and ``a0[k, j]`` on both grids."""

    a: np.ndarray
    a0: np.ndarray
    holder_mu: float
    bounds: tuple[float, float]

    def ellipticity_holds(self) -> bool:
        lo, hi = self.bounds
        tol = 1e-12 * max(1.0, hi)
        return bool(np.all(self.a >= lo - tol) and np.all(self.a <= hi + tol))


def lagged_average(W: np.ndarray, tgrid: TimeGrid, lag: float) -> np.ndarray:
    """``Y(t_k) = (1/lag) int_{max(0, t_k - lag)}^{t_k} W(r) dr`` (trapezoid rule).

    Only ``W(t_j)`` with ``j <= k`` enters ``Y(t_k)``.
    """
    t = tgrid.nodes
    C = np.concatenate([[0.0], np.cumsum(0.5 * (W[1:] + W[:-1]) * tgrid.dt)])
    lower = np.maximum(t - lag, 0.0)
    pos = lower / tgrid.dt
    i = np.minimum(np.floor(pos).astype(int), tgrid.steps - 1)
    frac = pos - i
    # interpolate C linearly between nodes i and i+1 (both <= k)
    W_lo = W[i] + frac * (W[i + 1] - W[i])
    C_lower = C[i] + 0.5 * (W[i] + W_lo) * frac * tgrid.dt
    return (C - C_lower) / lag


def sample_coefficients(driver: BrownianDriver, grid: SpatialGrid, tgrid: TimeGrid,
                        recipe: CoefficientRecipe = CoefficientRecipe()) -> CoefficientField:
    """Adapted coefficient field for ``recipe`` on ``grid`` x ``tgrid``."""
    if driver.grid.steps != tgrid.steps:
        raise ShapeError(f"driver has {driver.grid.steps} steps, time grid {tgrid.steps}")
    K = tgrid.steps + 1
    lo, hi = recipe.bounds
    if recipe.kind == "constant" or recipe.kappa1 == 0:
        a = np.full((K, grid.nodes), recipe.kappa0)
    else:
        if recipe.channel >= driver.reserved:
            raise ConfigurationError(
                f"recipe reads reserved channel {recipe.channel}, driver has {driver.reserved}")
        Y = lagged_average(driver.W_reserved[:, recipe.channel], tgrid, recipe.lag)
        shape = np.ones(1) if grid.is_scalar else np.sin(2 * np.pi * grid.x / grid.length)
        a = recipe.kappa0 + recipe.kappa1 * np.outer(np.tanh(Y), shape)
    a0 = np.full((K, grid.nodes), float(recipe.a0))
    return CoefficientField(a, a0, recipe.holder_mu, (lo, hi))


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    """Matrices ``A_k`` (already shifted by ``-shift * I``) for ``k = 0..N``."""

    matrices: np.ndarray
    tgrid: TimeGrid
    grid: SpatialGrid | None = None
    coefficients: CoefficientField | None = None
    shift: float = 0.0
    _inverses: list = field(default_factory=list, init=False, repr=False)

    def __post_init__(self):
        M = np.asarray(self.matrices, dtype=float)
        if M.ndim != 3 or M.shape[1] != M.shape[2]:
            raise ShapeError(f"matrices must have shape (K, n, n), got {M.shape}")
        if M.shape[0] != self.tgrid.steps + 1:
            raise ShapeError(
                f"need {self.tgrid.steps + 1} matrices for the time grid, got {M.shape[0]}")
        M.setflags(write=False)
        object.__setattr__(self, "matrices", M)

    @classmethod
    def constant(cls, A, tgrid: TimeGrid) -> "OperatorFamily":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        return cls(np.broadcast_to(A, (tgrid.steps + 1, *A.shape)).copy(), tgrid)

    @classmethod
    def scalar(cls, values, tgrid: TimeGrid) -> "OperatorFamily":
        """Scalar family from per-node values (length N+1) or a callable of time."""
        if callable(values):
            values = [values(t) for t in tgrid.nodes]
        v = np.broadcast_to(np.asarray(values, dtype=float), (tgrid.steps + 1,))
        return cls(v.reshape(-1, 1, 1).copy(), tgrid)

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    def __getitem__(self, k) -> np.ndarray:
        return self.matrices[k]

    def inverses(self) -> np.ndarray:
        """``A_k^{-1}`` for every k (cached)."""
        if not self._inverses:
            try:
                inv = np.linalg.inv(self.matrices)
            except np.linalg.LinAlgError as exc:
                raise InvertibilityError(
                    "some A_k is singular; shift the family (a0 < 0 or explicit shift)") from exc
            if not np.all(np.isfinite(inv)):
                raise InvertibilityError("some A_k is numerically singular")
            cond = np.linalg.cond(self.matrices)
            if np.any(cond > 1e13):
                raise InvertibilityError(
                    f"A_k numerically singular (condition number {cond.max():.3g})")
            self._inverses.append(inv)
        return self._inverses[0]

    def frozen_after(self, k: int) -> "OperatorFamily":
        """The family ``A(t ^ t_k)``: coefficients stop moving at step ``k``."""
        M = self.matrices.copy()
        M[k + 1:] = M[k]
        return replace(self, matrices=M)

    def transposed(self) -> "OperatorFamily":
        return replace(self, matrices=np.swapaxes(self.matrices, 1, 2).copy())


def _default_shift(a0: np.ndarray) -> float:
    top = float(np.max(a0))
    return 0.0 if top <= 0 else top + 1.0


def assemble(field: CoefficientField, tgrid: TimeGrid, grid: SpatialGrid,
             shift: float | None = None) -> OperatorFamily:
    """Three-point flux discretization of ``D(a D u) + a0 u`` at every time node.

    Face coefficients are arithmetic means of neighbouring nodes. Periodic
    grids wrap; neumann-conormal grids put zero conormal flux ``a du/dn`` on
    the boundary faces using ``a`` at the same time node; dirichlet grids
    eliminate the boundary values (zero ghost nodes).

    ``shift`` defaults to 0 when ``a0 <= 0`` and ``max(a0) + 1`` otherwise;
    the stored matrices are ``A_k - shift * I``.
    """
    a, a0 = field.a, field.a0
    K, n = a.shape
    if K != tgrid.steps + 1 or n != grid.nodes:
        raise ShapeError(f"coefficient field {a.shape} does not match grids "
                         f"({tgrid.steps + 1}, {grid.nodes})")
    lam0 = _default_shift(a0) if shift is None else float(shift)
    M = np.zeros((K, n, n))
    idx = np.arange(n)
    if grid.is_scalar:
        M[:, 0, 0] = a0[:, 0] - a[:, 0]
    else:
        h2 = grid.spacing**2
        if grid.boundary == "periodic":
            left, right = idx, (idx + 1) % n
        else:
            left, right = idx[:-1], idx[1:]
        face = 0.5 * (a[:, left] + a[:, right]) / h2
        # flux between left and right node of each face
        M[:, left, right] += face
        M[:, right, left] += face
        M[:, left, left] -= face
        M[:, right, right] -= face
        if grid.boundary == "dirichlet":
            M[:, 0, 0] -= a[:, 0] / h2
            M[:, n - 1, n - 1] -= a[:, n - 1] / h2
        M[:, idx, idx] += a0
    M[:, idx, idx] -= lam0
    return OperatorFamily(M, tgrid, grid, field, lam0)


def build_family(driver: BrownianDriver, grid: SpatialGrid,
                 recipe: CoefficientRecipe = CoefficientRecipe(),
                 shift: float | None = None) -> OperatorFamily:
    """Sample coefficients from ``driver`` and assemble in one call."""
    field = sample_coefficients(driver, grid, driver.grid, recipe)
    return assemble(field, driver.grid, grid, shift)


def sector_probes(radii=(0.0, 1.0, 10.0, 100.0), angles=(0.0, 2 * np.pi / 3, -2 * np.pi / 3)):
    """Probe points ``r e^{i theta}`` (``0`` counted once)."""
    pts = {0j} if 0.0 in radii else set()
    pts |= {r * np.exp(1j * th) for r in radii if r > 0 for th in angles}
    return sorted(pts, key=lambda z: (abs(z), np.angle(z)))


@dataclass(frozen=True)
class ConditionsReport:
    bound: float
    step: int
    probe: complex


def resolvent_bound(family: OperatorFamily, probe_lambdas=None) -> ConditionsReport:
    """Discrete sectoriality constant ``max (|lambda| + 1) ||(lambda - A_k)^{-1}||``.

    Returns an infinite bound when some ``lambda - A_k`` is singular.
    """
    probes = sector_probes() if probe_lambdas is None else list(probe_lambdas)
    A = family.matrices.astype(complex)
    eye = np.eye(family.dim)
    best = ConditionsReport(0.0, 0, probes[0])
    for lam in probes:
        smin = np.linalg.svd(lam * eye - A, compute_uv=False)[:, -1]
        scale = abs(lam) + 1.0
        with np.errstate(divide="ignore"):
            vals = np.where(smin > 1e-14 * max(1.0, np.abs(A).max()), scale / smin, np.inf)
        k = int(np.argmax(vals))
        if vals[k] > best.bound:
            best = ConditionsReport(float(vals[k]), k, complex(lam))
    return best


def _pairwise_holder(stack: np.ndarray, dt: float, mu: float) -> float:
    worst = 0.0
    for lag in range(1, stack.shape[0]):
        diff = stack[lag:] - stack[:-lag]
        norms = np.linalg.norm(diff, 2, axis=(1, 2))
        worst = max(worst, float(norms.max()) / (lag * dt) ** mu)
    return worst


def cis_holder_constant(family: OperatorFamily, mu: float) -> float:
    """Empirical ``K`` in ``||A_t^{-1} - A_s^{-1}|| <= K (t - s)^mu`` over grid pairs."""
    return _pairwise_holder(family.inverses(), family.tgrid.dt, mu)


def cis_running_quotient(family: OperatorFamily, mu: float) -> np.ndarray:
    """Running quotient ``phi(t_k) = max_{s < t_k} ||A_t^{-1} - A_s^{-1}|| / (t - s)^mu``."""
    inv, dt = family.inverses(), family.tgrid.dt
    phi = np.zeros(inv.shape[0])
    for lag in range(1, inv.shape[0]):
        q = np.linalg.norm(inv[lag:] - inv[:-lag], 2, axis=(1, 2)) / (lag * dt) ** mu
        np.maximum(phi[lag:], q, out=phi[lag:])
    return phi


def kato_tanabe_constant(family: OperatorFamily, mu: float) -> float:
    """Hoelder quotient of ``t -> A_t`` measured in the graph norm of ``A_0``.

    ``||(A_t - A_s) A_0^{-1}|| / (t - s)^mu``, the discrete analogue of
    ``||A(t) - A(s)||_{L(E_1, E_0)}`` for a constant domain.
    """
    A0_inv = family.inverses()[0]
    return _pairwise_holder(family.matrices @ A0_inv, family.tgrid.dt, mu)
