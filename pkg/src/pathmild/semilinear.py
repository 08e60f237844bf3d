"""Semilinear equations ``dU = (A U + F(t, U)) dt + B(t, U) dW`` by Picard iteration.

The solution map is

    L(u)(t) = S(t, 0) u0 + S * F(., u)(t) + S <> B(., u)(t)

where ``S * f`` is the deterministic convolution and ``S <> G`` the pathwise
mild stochastic convolution. Iterates live on the whole time grid; each
iterate is adapted because ``B(t, u(t))`` only reads ``u`` up to ``t``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .evolution_family import EvolutionOracle
from .noise import BrownianDriver, NoiseOperator
from .operator_family import OperatorFamily, cis_running_quotient
from .pathwise_core import QuadratureRule, SolutionPath, convolution_path, pathwise_solution
from .regularity import spatial_norm

__all__ = [
    "Nonlinearity",
    "PicardReport",
    "WeightedNorm",
    "apply_L",
    "coefficient_truncation_diagnostic",
    "make_nonlinearity",
    "picard_solve",
    "truncate_initial",
]

DRIFT_RECIPES = ("zero", "linear-damping", "pointwise-sin", "pointwise-tanh")
NOISE_RECIPES = ("zero", "additive", "multiplicative-noise-scale")


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Drift ``F(k, u) -> vector`` and noise ``B(k, u) -> (n_x, n_h) matrix``.

    Either may be ``None`` (identically zero). ``covariance_root`` is applied
    on the mode side of ``B``. The Lipschitz and growth constants are
    declarations, checked by :meth:`validate` on random probes.
    """

    F: Callable | None = None
    B: Callable | None = None
    lipschitz_F: float = 0.0
    lipschitz_B: float = 0.0
    growth_F: float = 0.0
    growth_B: float = 0.0
    covariance_root: np.ndarray | None = None
    name: str = "custom"

    def noise_operator(self, u: np.ndarray, steps: int) -> NoiseOperator | None:
        if self.B is None:
            return None
        G = np.stack([np.atleast_2d(self.B(k, u[k])) for k in range(steps)])
        return NoiseOperator(G, self.covariance_root)

    def validate(self, dim: int, rng=None, samples: int = 64, steps: int = 1) -> bool:
        """Spot-check the declared Lipschitz constants (1% slack)."""
        rng = np.random.default_rng(0) if rng is None else rng
        for _ in range(samples):
            k = int(rng.integers(steps))
            x, y = rng.normal(scale=3.0, size=(2, dim))
            d = np.linalg.norm(x - y)
            if self.F is not None:
                if np.linalg.norm(self.F(k, x) - self.F(k, y)) > 1.01 * self.lipschitz_F * d:
                    return False
            if self.B is not None:
                if np.linalg.norm(self.B(k, x) - self.B(k, y)) > 1.01 * self.lipschitz_B * d:
                    return False
        return True


def make_nonlinearity(drift: str = "zero", noise: str = "zero", dim: int = 1,
                      drift_scale: float = 1.0, noise_scale: float = 1.0,
                      additive: np.ndarray | None = None,
                      covariance_root: np.ndarray | None = None) -> Nonlinearity:
    """Build one of the named pointwise recipes.

    ``additive`` (an ``(n_x, n_h)`` matrix, identity by default) is the
    state-independent noise operator used by the ``additive`` noise recipe.
    ``multiplicative-noise-scale`` is ``B(u) = noise_scale * diag(u)``.
    """
    if drift not in DRIFT_RECIPES:
        raise ValueError(f"drift recipe must be one of {DRIFT_RECIPES}, got {drift!r}")
    if noise not in NOISE_RECIPES:
        raise ValueError(f"noise recipe must be one of {NOISE_RECIPES}, got {noise!r}")
    c, s = float(drift_scale), float(noise_scale)
    F = {
        "zero": None,
        "linear-damping": lambda k, u: -c * u,
        "pointwise-sin": lambda k, u: c * np.sin(u),
        "pointwise-tanh": lambda k, u: c * np.tanh(u),
    }[drift]
    G0 = np.eye(dim) if additive is None else np.asarray(additive, dtype=float)
    B = {
        "zero": None,
        "additive": lambda k, u: s * G0,
        "multiplicative-noise-scale": lambda k, u: s * np.diag(u),
    }[noise]
    lip_F = 0.0 if F is None else abs(c)
    lip_B = abs(s) if noise == "multiplicative-noise-scale" else 0.0
    growth_B = abs(s) * (np.linalg.norm(G0) if noise == "additive" else 1.0)
    return Nonlinearity(F, B, lip_F, lip_B, abs(c), 0.0 if B is None else growth_B,
                        covariance_root, f"{drift}/{noise}")


@dataclass(frozen=True)
class WeightedNorm:
    """``sup_t exp(-kappa t) ||u(t)||``, with the ``p``-th moment over paths if batched."""

    kappa: float = 0.0
    p: float = 2.0
    norm: str = "l2-nodes"
    h: float = 1.0

    def __post_init__(self):
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")

    def __call__(self, u, times) -> float:
        u = np.asarray(u, dtype=float)
        if u.ndim == 3:
            vals = np.stack([spatial_norm(x, self.norm, self.h) for x in u])
            per_t = np.mean(vals**self.p, axis=0) ** (1 / self.p)
        else:
            per_t = spatial_norm(u, self.norm, self.h)
        return float(np.max(np.exp(-self.kappa * np.asarray(times)) * per_t))


def apply_L(oracle: EvolutionOracle, u0, nl: Nonlinearity, driver: BrownianDriver,
            u: SolutionPath | np.ndarray, rule: QuadratureRule = QuadratureRule()) -> SolutionPath:
    """One application of the solution map to the space-time path ``u``."""
    states = u.states if isinstance(u, SolutionPath) else np.asarray(u, dtype=float)
    N = oracle.steps
    out = oracle.trajectory(np.asarray(u0, dtype=float))
    if nl.F is not None:
        out = out + convolution_path(oracle, lambda k: nl.F(k, states[k]))
    G = nl.noise_operator(states, N)
    if G is not None:
        out = out + pathwise_solution(oracle, G, driver, rule).states
    return SolutionPath(out, driver.grid, "pathwise-mild",
                        {"master_seed": driver.master_seed, "path_index": driver.path_index})


@dataclass
class PicardReport:
    iterations: int
    converged: bool
    increments: list = field(default_factory=list)
    factors: dict = field(default_factory=dict)
    residual: float = float("nan")

    def max_factor(self, kappa: float) -> float:
        vals = self.factors.get(kappa, [])
        return max(vals) if vals else float("nan")


def picard_solve(oracle: EvolutionOracle, u0, nl: Nonlinearity, driver: BrownianDriver,
                 tol: float = 1e-10, max_iter: int = 50, rule: QuadratureRule = QuadratureRule(),
                 initial: np.ndarray | None = None, kappas=None,
                 h: float = 1.0) -> tuple[SolutionPath, PicardReport]:
    """Iterate ``u <- L(u)`` from ``S(., 0) u0`` until the sup-norm step is below ``tol``.

    The report holds, for each ``kappa`` (default ``{0, 1, 10, 100} / T``),
    the ratios of successive weighted-norm steps. Non-convergence is reported
    (``converged=False``, with a warning), not raised.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    T = oracle.family.tgrid.horizon
    times = oracle.family.tgrid.nodes
    kappas = [k / T for k in (0.0, 1.0, 10.0, 100.0)] if kappas is None else list(kappas)
    norms = {k: WeightedNorm(k, h=h) for k in kappas}
    u = oracle.trajectory(np.asarray(u0, dtype=float)) if initial is None else np.asarray(initial)
    report = PicardReport(0, False, factors={k: [] for k in kappas})
    prev = {k: None for k in kappas}
    for it in range(1, max_iter + 1):
        new = apply_L(oracle, u0, nl, driver, u, rule).states
        delta = new - u
        step = float(np.max(spatial_norm(delta, "l2-nodes", h)))
        report.increments.append(step)
        scale = max(1.0, float(np.max(np.abs(new))))
        for k in kappas:
            w = norms[k](delta, times)
            if prev[k] is not None and prev[k] > 1e-13 * scale:
                report.factors[k].append(w / prev[k])
            prev[k] = w
        u = new
        report.iterations = it
        if step < tol:
            report.converged = True
            break
    report.residual = float(np.max(spatial_norm(
        apply_L(oracle, u0, nl, driver, u, rule).states - u, "l2-nodes", h)))
    if not report.converged:
        warnings.warn(f"Picard iteration did not converge in {max_iter} iterations "
                      f"(last step {report.increments[-1]:.3g}); Lipschitz constants may be "
                      "too large for the horizon", RuntimeWarning, stacklevel=2)
    return SolutionPath(u, driver.grid, "pathwise-mild",
                        {"master_seed": driver.master_seed, "path_index": driver.path_index,
                         "picard_iterations": report.iterations}), report


def truncate_initial(u0, n: float, h: float = 1.0) -> np.ndarray:
    """``u0`` if ``||u0|| <= n`` else zero (norm: discrete L^2 with spacing ``h``)."""
    if not n > 0:
        raise ValueError(f"truncation level must be positive, got {n}")
    u0 = np.asarray(u0, dtype=float)
    return u0.copy() if np.sqrt(h) * np.linalg.norm(u0) <= n else np.zeros_like(u0)


def coefficient_truncation_diagnostic(family: OperatorFamily, threshold: float, mu: float) -> int:
    """First grid index where the running CIS quotient reaches ``threshold`` (``N`` if never).

    Freezing the family after that index (``family.frozen_after(k)``) leaves
    every solution unchanged on ``[0, t_k]``.
    """
    if not threshold > 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    phi = cis_running_quotient(family, mu)
    hit = np.flatnonzero(phi >= threshold)
    return int(hit[0]) if hit.size else family.tgrid.steps
