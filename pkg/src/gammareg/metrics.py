"""Performance measures for fitted models: prediction error, coefficient
error and support recovery."""

from __future__ import annotations

import math

import numpy as np

from .model_core import Dataset, ModelParams


def rmspe(test: Dataset, params: ModelParams) -> float:
    """Root mean squared prediction error on a test set.

    Predictions include the intercept.
    """
    err = test.y - params.predict(test.x)
    return math.sqrt(float(err @ err) / test.n)


def mse_coefficients(true_beta: np.ndarray, est_beta: np.ndarray) -> float:
    """Mean squared coefficient error over the p + 1 coefficients,
    intercept included."""
    t = np.asarray(true_beta, dtype=float)
    e = np.asarray(est_beta, dtype=float)
    if t.shape != e.shape:
        raise ValueError("coefficient vectors must have equal length")
    d = t - e
    return float(d @ d) / t.shape[0]


def tpr_tnr(true_beta: np.ndarray, est_beta: np.ndarray) -> tuple[float, float]:
    """Support recovery rates over the p slope coefficients.

    TPR counts recovered true nonzeros, TNR recovered true zeros;
    nonzero means exactly nonzero (the solver produces exact zeros).
    A vacuous denominator yields nan.
    """
    t = np.asarray(true_beta, dtype=float)
    e = np.asarray(est_beta, dtype=float)
    if t.shape != e.shape:
        raise ValueError("coefficient vectors must have equal length")
    t_nz = t != 0.0
    e_nz = e != 0.0
    n_pos = int(t_nz.sum())
    n_neg = t.shape[0] - n_pos
    tpr = float(np.sum(t_nz & e_nz)) / n_pos if n_pos else float("nan")
    tnr = float(np.sum(~t_nz & ~e_nz)) / n_neg if n_neg else float("nan")
    return tpr, tnr


def rtmspe(test: Dataset, params: ModelParams, trim: float) -> float:
    """Root trimmed mean squared prediction error.

    Averages the h = floor((n + 1)(1 - trim)) smallest squared errors,
    capped at n, then takes the square root; trim = 0 reduces to rmspe.
    """
    if not 0.0 <= trim < 1.0:
        raise ValueError(f"trim must lie in [0, 1), got {trim}")
    err = test.y - params.predict(test.x)
    sq = np.sort(err * err)
    h = min(int(math.floor((test.n + 1) * (1.0 - trim))), test.n)
    if h < 1:
        raise ValueError("trim leaves no observations")
    return math.sqrt(float(np.sum(sq[:h])) / h)
