"""Iterative minimizer for the penalized density-power loss.

Outer loop: recompute the observation weights at the current iterate and
minimize the resulting weighted least-squares surrogate.  Inner loop:
cyclic coordinate descent with soft thresholding, restricted to the
active set until it stabilizes, then one full pass to let new
coefficients enter.  The variance is refreshed once per outer step after
the coefficients settle.  Every accepted step decreases the penalized
loss (surrogate descent argument), which the fit records and tests
enforce.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateFitError
from .model_core import (
    Dataset,
    GammaConfig,
    MmWeights,
    ModelParams,
    _gamma_loss_from_residuals,
    _weights_from_residuals,
    residuals,
)


@dataclass(frozen=True)
class FitConfig:
    """Solver hyperparameters.

    ``tol_loss`` is a relative loss-change tolerance and ``tol_param`` a
    max absolute parameter-change tolerance; either one stops the outer
    loop.  ``kkt_tol`` is the stationarity slack the solver keeps
    polishing toward after the tolerances fire, so converged fits carry a
    meaningful optimality certificate.
    """

    gamma: float
    lam: float = 0.0
    max_mm_iters: int = 500
    max_cd_sweeps: int = 100
    tol_loss: float = 1e-7
    tol_param: float = 1e-8
    sigma2_floor: float = 1e-10
    kkt_tol: float = 1e-6
    standardize: bool = False

    def __post_init__(self):
        if not (0.0 < self.gamma <= 2.0):
            raise ValueError(f"gamma must lie in (0, 2], got {self.gamma}")
        if self.lam < 0.0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if self.max_mm_iters < 1 or self.max_cd_sweeps < 1:
            raise ValueError("iteration caps must be at least 1")
        for name in ("tol_loss", "tol_param", "sigma2_floor", "kkt_tol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    def gamma_config(self) -> GammaConfig:
        return GammaConfig(gamma=self.gamma, lam=self.lam)


@dataclass(frozen=True)
class FitResult:
    """Converged estimate with its descent trajectory and certificate.

    ``loss_trajectory[0]`` is the loss at the starting point; each later
    entry is the loss after one outer step and never exceeds its
    predecessor by more than float slack.  ``active_set`` lists the
    exactly nonzero coefficients.
    """

    params: ModelParams
    loss_trajectory: np.ndarray
    active_set: np.ndarray
    mm_iterations: int
    converged: bool
    kkt_violation: float
    degenerate: bool = field(default=False, compare=False)


def soft_threshold(t: float, thr: float) -> float:
    """sign(t) (|t| - thr)_+ ; a tie |t| == thr maps to exactly 0."""
    if thr < 0.0:
        raise ValueError(f"threshold must be nonnegative, got {thr}")
    if t > thr:
        return t - thr
    if t < -thr:
        return t + thr
    return 0.0


def update_intercept(data: Dataset, beta: np.ndarray, weights: MmWeights) -> float:
    """Weighted mean of the partial residuals y - x beta."""
    return float(weights.alpha @ (data.y - data.x @ np.asarray(beta, dtype=float)))


def update_coefficient(
    j: int, data: Dataset, params: ModelParams, weights: MmWeights, lam: float
) -> float:
    """Exact minimizer of the weighted surrogate over coefficient ``j``.

    Soft-thresholds the weighted partial-residual correlation at
    sigma2 * lam and rescales by the weighted column norm.
    """
    alpha = weights.alpha
    xj = data.x[:, j]
    denom = float(alpha @ (xj * xj))
    if denom <= 0.0:
        warnings.warn(f"column {j} has zero weighted norm; coefficient set to 0")
        return 0.0
    partial = data.x @ params.beta - xj * params.beta[j]
    t = float(alpha @ ((data.y - params.beta0 - partial) * xj))
    return soft_threshold(t, params.sigma2 * lam) / denom


def update_variance(
    data: Dataset,
    params_new_beta: ModelParams,
    weights: MmWeights,
    gamma: float,
    sigma2_floor: float = 0.0,
) -> float:
    """(1 + gamma) times the weighted mean squared residual, floored."""
    r = residuals(data, params_new_beta)
    w = float(weights.alpha @ (r * r))
    if w == 0.0:
        raise DegenerateFitError(
            "all weighted residuals are zero (perfect interpolation)",
            params=params_new_beta,
        )
    return max((1.0 + gamma) * w, sigma2_floor)


class _CdState:
    """Mutable coordinate-descent state for one frozen-weight subproblem.

    Works on transposed, C-contiguous copies of the design so each
    coordinate touches a contiguous row.
    """

    __slots__ = ("alpha", "xt", "wxt", "colnorm", "beta", "beta0", "r", "thr")

    def __init__(self, y, xt, x2t, alpha, beta, beta0, thr):
        self.alpha = alpha
        self.xt = xt
        self.wxt = xt * alpha
        self.colnorm = x2t @ alpha
        self.beta = beta
        self.beta0 = beta0
        self.r = y - beta0 - beta @ xt
        self.thr = thr

    def sweep(self, indices) -> float:
        """One pass over beta0 then the given coefficients, in ascending
        index order.  Returns the max absolute parameter change."""
        delta = 0.0
        d0 = float(self.alpha @ self.r)
        if d0 != 0.0:
            self.r -= d0
            self.beta0 += d0
            delta = abs(d0)
        for j in indices:
            old = self.beta[j]
            denom = self.colnorm[j]
            if denom <= 0.0:
                if old != 0.0:
                    self.r += self.xt[j] * old
                    self.beta[j] = 0.0
                    delta = max(delta, abs(old))
                continue
            t = float(self.wxt[j] @ self.r) + denom * old
            new = soft_threshold(t, self.thr) / denom
            if new != old:
                self.r -= self.xt[j] * (new - old)
                self.beta[j] = new
                delta = max(delta, abs(new - old))
        return delta

    def _sweep_coords(self, indices) -> float:
        """Exact sequential update of the given coefficients only."""
        delta = 0.0
        for j in indices:
            old = self.beta[j]
            denom = self.colnorm[j]
            if denom <= 0.0:
                if old != 0.0:
                    self.r += self.xt[j] * old
                    self.beta[j] = 0.0
                    delta = max(delta, abs(old))
                continue
            t = float(self.wxt[j] @ self.r) + denom * old
            new = soft_threshold(t, self.thr) / denom
            if new != old:
                self.r -= self.xt[j] * (new - old)
                self.beta[j] = new
                delta = max(delta, abs(new - old))
        return delta

    def full_pass(self, max_rounds: int = 30) -> float:
        """Drive all coordinates to the subproblem fixed point.

        Each round screens every coordinate at once (one matrix-vector
        product) and then applies the exact sequential update only to
        the coordinates the screen flags, until a round flags nothing or
        moves nothing (the screen's rounding can flag coordinates whose
        exact update is a no-op).  Skipped coordinates are provably
        no-ops, so the exit state is a full-sweep fixed point.
        """
        delta = 0.0
        d0 = float(self.alpha @ self.r)
        if d0 != 0.0:
            self.r -= d0
            self.beta0 += d0
            delta = abs(d0)
        ok = self.colnorm > 0.0
        for _ in range(max_rounds):
            t = self.wxt @ self.r + self.colnorm * self.beta
            new = np.sign(t) * np.maximum(np.abs(t) - self.thr, 0.0)
            new = np.divide(new, self.colnorm, out=np.zeros_like(new), where=ok)
            flagged = np.flatnonzero(new != self.beta)
            if flagged.size == 0:
                break
            d = self._sweep_coords(flagged)
            delta = max(delta, d)
            if d == 0.0:
                break
        return delta


def _transposed(x: np.ndarray):
    xt = np.ascontiguousarray(x.T)
    return xt, xt * xt


def cd_sweep(
    data: Dataset,
    params: ModelParams,
    weights: MmWeights,
    lam: float,
    active_only: bool = False,
) -> ModelParams:
    """One coordinate-descent pass at frozen weights and variance.

    When ``active_only`` is set, only the currently nonzero coefficients
    (and the intercept) are touched.
    """
    xt, x2t = _transposed(data.x)
    state = _CdState(
        data.y, xt, x2t, weights.alpha, params.beta.copy(), params.beta0,
        params.sigma2 * lam,
    )
    indices = params.active_set if active_only else np.arange(data.p)
    state.sweep(indices)
    return ModelParams(beta0=state.beta0, beta=state.beta, sigma2=params.sigma2)


def _minimize_surrogate_beta(state: _CdState, p: int, cfg: FitConfig) -> None:
    """Drive the coefficient block of one frozen-weight subproblem to
    stationarity: iterate the active set to convergence, take a full
    pass over all coordinates, and repeat while the full pass activates
    new coefficients.

    The active-set sweeps stop at an adaptive tolerance (a fixed
    fraction of the first sweep's movement, floored at ``tol_param``):
    early outer steps do not need tightly solved subproblems, and the
    final steps reach ``tol_param`` on their own.
    """
    active = np.flatnonzero(state.beta)
    while True:
        inner_tol = cfg.tol_param
        for sweep_no in range(cfg.max_cd_sweeps):
            d = state.sweep(active)
            if sweep_no == 0:
                inner_tol = max(cfg.tol_param, 1e-4 * d)
            if d < inner_tol:
                break
        state.full_pass()
        new_active = np.flatnonzero(state.beta)
        if np.isin(new_active, active, assume_unique=True).all():
            break
        active = new_active


def _kkt_violation(y, x, beta, beta0, sigma2, gamma, lam) -> float:
    """Max stationarity slack of the frozen-weight subproblem, weights
    recomputed at the given parameters."""
    r = y - beta0 - x @ beta
    alpha = _weights_from_residuals(r, sigma2, gamma)
    ar = alpha * r
    g = -(x.T @ ar)
    thr = lam * sigma2
    slack = np.where(
        beta != 0.0,
        np.abs(g + thr * np.sign(beta)),
        np.maximum(np.abs(g) - thr, 0.0),
    )
    return max(float(np.max(slack)), abs(float(np.sum(ar))))


def fit(data: Dataset, cfg: FitConfig, init: ModelParams) -> FitResult:
    """Minimize the penalized loss from the given starting point.

    Each outer step freezes the weights at the current iterate, runs
    coordinate descent on the coefficients with the active-set strategy,
    then refreshes the variance.  Stops when the relative loss change
    falls below ``tol_loss`` or the max parameter change below
    ``tol_param``, then keeps stepping while the stationarity slack of
    the self-consistent subproblem exceeds ``kkt_tol`` (iteration cap
    permitting).  The problem is not convex; the result is a stationary
    point whose quality depends on the starting value.

    Raises
    ------
    DegenerateFitError
        If the variance floor is hit repeatedly or the weights collapse;
        the exception carries the last valid parameters.
    """
    if init.beta.shape[0] != data.p:
        raise ValueError("init.beta length does not match data")
    if cfg.standardize:
        return _fit_standardized(data, cfg, init)

    y, x = data.y, data.x
    xt, x2t = _transposed(x)
    gamma, lam = cfg.gamma, cfg.lam

    beta = init.beta.copy()
    beta0 = float(init.beta0)
    sigma2 = float(init.sigma2)

    r = y - beta0 - beta @ xt
    loss_prev = _gamma_loss_from_residuals(r, sigma2, gamma) + lam * math.fsum(
        np.abs(beta).tolist()
    )
    trajectory = [loss_prev]

    degenerate = False
    floor_hits = 0
    mm_iters = 0
    tol_met = False
    fast_drops = 0
    can_interpolate = data.p + 1 >= data.n

    for _ in range(cfg.max_mm_iters):
        last_valid = ModelParams(beta0=beta0, beta=beta.copy(), sigma2=sigma2)
        try:
            alpha = _weights_from_residuals(r, sigma2, gamma)
        except DegenerateFitError as err:
            raise DegenerateFitError(str(err), params=last_valid) from None

        state = _CdState(y, xt, x2t, alpha, beta, beta0, sigma2 * lam)
        _minimize_surrogate_beta(state, data.p, cfg)
        beta, beta0 = state.beta, state.beta0

        w = float(alpha @ (state.r * state.r))
        if w == 0.0:
            raise DegenerateFitError(
                "all weighted residuals are zero (perfect interpolation)",
                params=last_valid,
            )
        sigma2_new = (1.0 + gamma) * w
        if sigma2_new < cfg.sigma2_floor:
            floor_hits += 1
            degenerate = True
            sigma2_new = cfg.sigma2_floor
            if floor_hits > 1:
                raise DegenerateFitError(
                    "variance floor hit repeatedly", params=last_valid
                )
        # A saturated support with capacity to interpolate and a variance
        # halving step after step is past recovery: the scale map has only
        # the degenerate fixed point there.  Bail out before grinding to
        # the floor.
        fast_drops = fast_drops + 1 if sigma2_new < 0.5 * sigma2 else 0
        if (
            can_interpolate
            and fast_drops >= 2
            and np.count_nonzero(beta) >= 0.8 * data.n
        ):
            raise DegenerateFitError(
                "saturated support with collapsing variance", params=last_valid
            )

        dparam = max(
            float(np.max(np.abs(beta - last_valid.beta), initial=0.0)),
            abs(beta0 - last_valid.beta0),
            abs(sigma2_new - sigma2),
        )
        sigma2 = sigma2_new
        r = state.r
        mm_iters += 1

        loss = _gamma_loss_from_residuals(r, sigma2, gamma) + lam * math.fsum(
            np.abs(beta).tolist()
        )
        trajectory.append(loss)

        rel = abs(loss_prev - loss) / max(1.0, abs(loss_prev))
        loss_prev = loss
        if rel < cfg.tol_loss or dparam < cfg.tol_param:
            tol_met = True
            slack = _kkt_violation(y, x, beta, beta0, sigma2, gamma, lam)
            if slack <= cfg.kkt_tol or dparam < cfg.tol_param:
                break

    converged = tol_met and not degenerate
    params = ModelParams(beta0=beta0, beta=beta, sigma2=sigma2, degenerate=degenerate)
    kkt = _kkt_violation(y, x, beta, beta0, sigma2, gamma, lam)
    return FitResult(
        params=params,
        loss_trajectory=np.asarray(trajectory),
        active_set=np.flatnonzero(beta),
        mm_iterations=mm_iters,
        converged=converged,
        kkt_violation=kkt,
        degenerate=degenerate,
    )


def _fit_standardized(data: Dataset, cfg: FitConfig, init: ModelParams) -> FitResult:
    """Fit on column-standardized predictors and map the estimate back.

    The penalty then acts on the standardized scale.  The trajectory and
    the stationarity certificate refer to the standardized problem.
    """
    mean = data.x.mean(axis=0)
    sd = data.x.std(axis=0)
    sd = np.where(sd > 0.0, sd, 1.0)
    xs = (data.x - mean) / sd
    data_s = Dataset(y=data.y, x=xs)
    init_s = ModelParams(
        beta0=init.beta0 + float(mean @ init.beta),
        beta=init.beta * sd,
        sigma2=init.sigma2,
    )
    res = fit(data_s, replace(cfg, standardize=False), init_s)
    beta = res.params.beta / sd
    beta0 = res.params.beta0 - float((mean / sd) @ res.params.beta)
    params = ModelParams(
        beta0=beta0, beta=beta, sigma2=res.params.sigma2,
        degenerate=res.params.degenerate,
    )
    return replace(res, params=params, active_set=np.flatnonzero(beta))


def check_kkt(data: Dataset, params: ModelParams, cfg: FitConfig) -> float:
    """Stationarity certificate for a fitted estimate.

    Recomputes the weights at ``params`` and returns the largest
    violation of the subgradient conditions of the weighted subproblem:
    |g_j + lam sigma2 sign(beta_j)| on the support, (|g_j| - lam sigma2)_+
    off it, and |sum_i alpha_i r_i| for the intercept.
    """
    return _kkt_violation(
        data.y, data.x, params.beta, params.beta0, params.sigma2,
        cfg.gamma, cfg.lam,
    )
