"""Fractional Sobolev and Hoelder seminorms of grid functions.

A grid function is an array whose first axis is time (uniform step ``dt``);
the remaining axes are measured with one of the spatial norm tags:

``sup-node``       max of absolute node values
``l2-nodes``       ``sqrt(h * sum u_j^2)``, a discrete L^2 norm
``h1-difference``  ``sqrt(h * sum u_j^2 + h * sum ((u_{j+1} - u_j) / h)^2)``
``op``             spectral norm of matrix-valued functions
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InsufficientDataError

__all__ = [
    "SeminormReport",
    "estimate_exponent",
    "estimate_exponent_ensemble",
    "holder_seminorm",
    "phi_function",
    "sobolev_seminorm",
    "spatial_norm",
]

NORMS = ("sup-node", "l2-nodes", "h1-difference", "op")


def spatial_norm(x, norm: str = "l2-nodes", h: float = 1.0) -> np.ndarray:
    """Norm over every axis but the first."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return np.abs(x)
    if norm == "op":
        if x.ndim != 3:
            raise DomainError("the 'op' norm needs a stack of matrices")
        return np.linalg.norm(x, 2, axis=(1, 2))
    x = x.reshape(x.shape[0], -1)
    if norm == "sup-node":
        return np.abs(x).max(axis=1)
    if norm == "l2-nodes":
        return np.sqrt(h * np.sum(x**2, axis=1))
    if norm == "h1-difference":
        grad = np.diff(x, axis=1) / h
        return np.sqrt(h * np.sum(x**2, axis=1) + h * np.sum(grad**2, axis=1))
    raise DomainError(f"unknown norm tag {norm!r}; expected one of {NORMS}")


def _lag_norms(f, lag, norm, h):
    return spatial_norm(f[lag:] - f[:-lag], norm, h)


def sobolev_seminorm(f, alpha: float, p: float, dt: float, norm: str = "l2-nodes",
                     h: float = 1.0) -> float:
    """Discrete ``[f]_{W^{alpha,p}}``.

    Double sum over off-diagonal node pairs with trapezoid weights, using
    the symmetry of the integrand to sum over ``s < t`` only.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    f = np.asarray(f, dtype=float)
    K = f.shape[0]
    w = np.full(K, dt)
    w[[0, -1]] = dt / 2
    total = 0.0
    for lag in range(1, K):
        inc = _lag_norms(f, lag, norm, h)
        total += np.sum(w[lag:] * w[:-lag] * inc**p) / (lag * dt) ** (alpha * p + 1)
    return float((2 * total) ** (1 / p))


def holder_seminorm(f, alpha: float, dt: float, norm: str = "l2-nodes", h: float = 1.0) -> float:
    """``max_{s < t} ||f(t) - f(s)|| / (t - s)^alpha`` over grid pairs."""
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    f = np.asarray(f, dtype=float)
    worst = 0.0
    for lag in range(1, f.shape[0]):
        worst = max(worst, float(_lag_norms(f, lag, norm, h).max()) / (lag * dt) ** alpha)
    return worst


def phi_function(f, alpha: float, dt: float, norm: str = "l2-nodes", h: float = 1.0) -> np.ndarray:
    """Running quotient ``phi(t) = max_{s < t} ||f(t) - f(s)|| / (t - s)^alpha``, ``phi(0) = 0``."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    f = np.asarray(f, dtype=float)
    phi = np.zeros(f.shape[0])
    for lag in range(1, f.shape[0]):
        q = _lag_norms(f, lag, norm, h) / (lag * dt) ** alpha
        np.maximum(phi[lag:], q, out=phi[lag:])
    return phi


@dataclass(frozen=True)
class SeminormReport:
    estimated_exponent: float
    regression_r2: float
    lags: tuple
    median_increments: tuple
    sobolev_value: float | None = None
    holder_value: float | None = None


def _dyadic_lags(K: int, max_fraction: float):
    lags, lag = [], 1
    while lag <= max_fraction * (K - 1):
        lags.append(lag)
        lag *= 2
    return lags


def estimate_exponent(f, dt: float, norm: str = "l2-nodes", h: float = 1.0,
                      max_lag_fraction: float = 0.125, alpha: float | None = None,
                      p: float = 2.0) -> SeminormReport:
    """Temporal Hoelder exponent of one grid function.

    Regresses ``log median ||f(t + lag) - f(t)||`` on ``log lag`` over dyadic
    lags up to ``max_lag_fraction`` of the horizon; the slope is the
    estimate. When ``alpha`` is given the report also carries the Sobolev
    (order ``alpha``, exponent ``p``) and Hoelder seminorms.
    """
    return estimate_exponent_ensemble([f], dt, norm, h, max_lag_fraction, alpha, p)


def estimate_exponent_ensemble(paths, dt: float, norm: str = "l2-nodes", h: float = 1.0,
                               max_lag_fraction: float = 0.125, alpha: float | None = None,
                               p: float = 2.0) -> SeminormReport:
    """Exponent estimate pooled over paths.

    Per lag, the median increment of each path is computed and then the
    median over paths is taken before the regression. Seminorm values, if
    requested, are medians over paths.
    """
    batch = [np.asarray(f, dtype=float) for f in paths]
    K = batch[0].shape[0]
    if K < 32:
        raise InsufficientDataError(f"need at least 32 time nodes, got {K}")
    lags = _dyadic_lags(K, max_lag_fraction)
    med = np.array([np.median([np.median(_lag_norms(f, lag, norm, h)) for f in batch])
                    for lag in lags])
    usable = med > 0
    if usable.sum() < 3:
        raise InsufficientDataError(f"only {int(usable.sum())} lags with nonzero increments")
    x = np.log(np.array(lags, dtype=float)[usable] * dt)
    y = np.log(med[usable])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    sob = hol = None
    if alpha is not None:
        sob = float(np.median([sobolev_seminorm(f, alpha, p, dt, norm, h) for f in batch]))
        hol = float(np.median([holder_seminorm(f, alpha, dt, norm, h) for f in batch]))
    return SeminormReport(float(np.clip(slope, 0.0, 1.0)), float(r2), tuple(lags),
                          tuple(float(m) for m in med), sob, hol)
