"""Gaussian regression model and its density-power loss machinery.

The estimator downweights observations by a power of their conditional
density, so every density product here is computed in the log domain and
the n-term averages go through a max-shifted log-sum-exp.  The n-term
sums use ``math.fsum`` (exactly rounded), which makes the loss invariant
to row permutations of the data bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFitError

# Variance floor applied before any log; below this the fit is declared
# degenerate instead of silently clamping.
SIGMA2_VALIDITY_FLOOR = 1e-12

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class Dataset:
    """Response vector and predictor matrix, optionally with the true
    coefficients used to generate the data.

    Parameters
    ----------
    y : ndarray of shape (n,)
        Responses.
    x : ndarray of shape (n, p)
        Predictors; rows are observations.
    true_beta : ndarray of shape (p + 1,), optional
        Generating coefficients, index 0 being the intercept.  Only
        populated by the simulators.
    """

    y: np.ndarray
    x: np.ndarray
    true_beta: np.ndarray | None = None

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=float)
        x = np.ascontiguousarray(self.x, dtype=float)
        if x.ndim != 2:
            raise ValueError("x must be a 2-d array")
        if y.ndim != 1:
            raise ValueError("y must be a 1-d array")
        n, p = x.shape
        if n < 2 or p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        if y.shape[0] != n:
            raise ValueError(f"y has {y.shape[0]} rows but x has {n}")
        if not np.isfinite(y).all() or not np.isfinite(x).all():
            raise ValueError("dataset contains non-finite entries")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        if self.true_beta is not None:
            tb = np.asarray(self.true_beta, dtype=float)
            if tb.shape != (p + 1,):
                raise ValueError("true_beta must have length p + 1")
            object.__setattr__(self, "true_beta", tb)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the conditional Gaussian model: intercept,
    coefficient vector and residual variance.

    Zeros in ``beta`` are exact (soft-threshold output), which is what
    makes active sets and support-recovery metrics well defined.
    """

    beta0: float
    beta: np.ndarray
    sigma2: float
    degenerate: bool = field(default=False, compare=False)

    def __post_init__(self):
        beta = np.ascontiguousarray(self.beta, dtype=float)
        if beta.ndim != 1:
            raise ValueError("beta must be a 1-d array")
        if not np.isfinite(beta).all():
            raise ValueError("beta contains non-finite entries")
        if not math.isfinite(self.beta0):
            raise ValueError("beta0 must be finite")
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0.0):
            raise ValueError(f"sigma2 must be positive and finite, got {self.sigma2}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "beta0", float(self.beta0))
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def active_set(self) -> np.ndarray:
        """Indices of the exactly nonzero coefficients."""
        return np.flatnonzero(self.beta)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.beta0 + np.asarray(x, dtype=float) @ self.beta


@dataclass(frozen=True)
class GammaConfig:
    """Loss configuration: density-power exponent and L1 weight."""

    gamma: float
    lam: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.gamma <= 2.0):
            raise ValueError(f"gamma must lie in (0, 2], got {self.gamma}")
        if self.lam < 0.0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")


@dataclass(frozen=True)
class MmWeights:
    """Normalized per-observation weights used by the surrogate loss."""

    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.ascontiguousarray(self.alpha, dtype=float)
        if alpha.ndim != 1:
            raise ValueError("alpha must be a 1-d array")
        if np.any(alpha < 0.0) or np.any(alpha > 1.0):
            raise ValueError("weights must lie in [0, 1]")
        total = math.fsum(alpha.tolist())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {total!r}")
        object.__setattr__(self, "alpha", alpha)


def _check_sigma2(sigma2: float) -> None:
    if not math.isfinite(sigma2) or sigma2 < SIGMA2_VALIDITY_FLOOR:
        raise DegenerateFitError(
            f"sigma2={sigma2!r} below validity floor {SIGMA2_VALIDITY_FLOOR}"
        )


def residuals(data: Dataset, params: ModelParams) -> np.ndarray:
    """y - beta0 - x beta."""
    return data.y - params.beta0 - data.x @ params.beta


def gaussian_log_density(y: float, mu: float, sigma2: float) -> float:
    """Log of the normal density with mean ``mu`` and variance ``sigma2``."""
    if not (math.isfinite(y) and math.isfinite(mu)):
        raise ValueError("y and mu must be finite")
    if not (math.isfinite(sigma2) and sigma2 > 0.0):
        raise ValueError(f"sigma2 must be positive and finite, got {sigma2}")
    d = y - mu
    return -0.5 * (_LOG_2PI + math.log(sigma2)) - d * d / (2.0 * sigma2)


def power_integral(sigma2: float, gamma: float) -> float:
    """Integral of the (1 + gamma) power of a normal density over the
    real line: (2 pi sigma2)^(-gamma/2) (1 + gamma)^(-1/2).

    Independent of the mean, so for a homoscedastic regression model it
    is also independent of the predictors.
    """
    if not (math.isfinite(sigma2) and sigma2 > 0.0):
        raise ValueError(f"sigma2 must be positive and finite, got {sigma2}")
    if gamma < 0.0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    return math.exp(-0.5 * gamma * (_LOG_2PI + math.log(sigma2))) / math.sqrt(1.0 + gamma)


def _gamma_loss_from_residuals(r: np.ndarray, sigma2: float, gamma: float) -> float:
    """Smooth loss term evaluated from a residual vector.

    Equals -(1/gamma) log mean(f_i^gamma) + log(power_integral)/(1+gamma),
    with the first average done by max-shifted log-sum-exp so that gross
    outliers underflow gracefully.
    """
    _check_sigma2(sigma2)
    n = r.shape[0]
    logf = -0.5 * (_LOG_2PI + math.log(sigma2)) - (r * r) / (2.0 * sigma2)
    a = gamma * logf
    m = float(np.max(a))
    if not math.isfinite(m):
        raise DegenerateFitError("all density weights vanished in the loss")
    s = math.fsum(np.exp(a - m).tolist())
    term1 = -(m + math.log(s) - math.log(n)) / gamma
    term2 = math.log(power_integral(sigma2, gamma)) / (1.0 + gamma)
    return term1 + term2


def _weights_from_residuals(r: np.ndarray, sigma2: float, gamma: float) -> np.ndarray:
    """Normalized density-power weights; the (2 pi sigma2)^(-gamma/2)
    factor cancels in the ratio."""
    _check_sigma2(sigma2)
    a = -(gamma / (2.0 * sigma2)) * (r * r)
    m = float(np.max(a))
    if not math.isfinite(m):
        raise DegenerateFitError("all weights underflowed")
    e = np.exp(a - m)
    return e / math.fsum(e.tolist())


def empirical_gamma_cross_entropy(data: Dataset, params: ModelParams, gamma: float) -> float:
    """Sample estimate of the density-power cross entropy of the model
    against the data-generating conditional law.

    Parameters
    ----------
    data : Dataset
    params : ModelParams
    gamma : float
        Power exponent, must be positive.

    Returns
    -------
    float
        -(1/gamma) log{mean_i f(y_i|x_i)^gamma}
        + log{power_integral(sigma2, gamma)} / (1 + gamma).
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return _gamma_loss_from_residuals(residuals(data, params), params.sigma2, gamma)


def penalized_loss(data: Dataset, params: ModelParams, cfg: GammaConfig) -> float:
    """Cross-entropy loss plus the L1 penalty on the coefficients.

    The intercept and the variance are never penalized.
    """
    penalty = cfg.lam * math.fsum(np.abs(params.beta).tolist())
    return empirical_gamma_cross_entropy(data, params, cfg.gamma) + penalty


def mm_weights(data: Dataset, params: ModelParams, gamma: float) -> MmWeights:
    """Per-observation weights proportional to f(y_i|x_i)^gamma.

    Outlying rows receive exponentially small weight, which is the whole
    robustness mechanism of the estimator.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    alpha = _weights_from_residuals(residuals(data, params), params.sigma2, gamma)
    return MmWeights(alpha=alpha)


def majorizer_value(
    params: ModelParams, anchor: ModelParams, data: Dataset, cfg: GammaConfig
) -> float:
    """Surrogate objective touching the penalized loss at ``anchor``.

    Up to an additive constant in ``params`` this upper-bounds the loss:
    for every params value,

        majorizer(params) - majorizer(anchor) >= loss(params) - loss(anchor).
    """
    _check_sigma2(anchor.sigma2)
    _check_sigma2(params.sigma2)
    alpha = _weights_from_residuals(residuals(data, anchor), anchor.sigma2, cfg.gamma)
    r = residuals(data, params)
    quad = math.fsum((alpha * r * r).tolist())
    penalty = cfg.lam * math.fsum(np.abs(params.beta).tolist())
    return (
        math.log(params.sigma2) / (2.0 * (1.0 + cfg.gamma))
        + 0.5 * quad / params.sigma2
        + penalty
    )
