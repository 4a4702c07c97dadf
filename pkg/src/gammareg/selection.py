"""Regularization-weight selection: grid construction and robust
cross-validation scored by the density-power cross entropy.

Scoring held-out points with the same downweighting loss keeps model
selection itself robust; a squared-error criterion would let outliers
pick the regularization weight.  Held-out points are evaluated with the
coefficients fitted without their fold but with the full-data variance,
since prediction only needs the mean structure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DegenerateFitError, DegenerateScoreError
from .model_core import (
    Dataset,
    ModelParams,
    _LOG_2PI,
    _weights_from_residuals,
    power_integral,
)
from .solver import FitConfig, FitResult, fit


@dataclass(frozen=True)
class CvConfig:
    """Cross-validation settings.

    ``gamma0`` is the scoring exponent (selection is insensitive to it
    once it is moderately large); ``loo`` switches to leave-one-out.
    """

    gamma0: float = 0.5
    folds: int = 10
    loo: bool = False
    grid_size: int = 50
    grid_floor_ratio: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.gamma0 <= 0.0:
            raise ValueError(f"gamma0 must be positive, got {self.gamma0}")
        if self.folds < 2:
            raise ValueError(f"need at least 2 folds, got {self.folds}")
        if not 0.0 < self.grid_floor_ratio < 1.0:
            raise ValueError("grid_floor_ratio must lie in (0, 1)")
        if self.grid_size < 1:
            raise ValueError("grid_size must be at least 1")


@dataclass(frozen=True)
class CvReport:
    """Per-grid-point scores and the selected fit.

    ``scores`` holds the selection criterion per grid value (nan where a
    fold failed; those values are excluded from the argmin).
    ``fold_info`` maps (grid index, fold index) to (outer iterations,
    converged, stationarity slack); fold index -1 is the full-data fit.
    ``best_lambda`` attains the minimal score, ties resolved toward the
    larger (sparser) value.
    """

    lambda_grid: np.ndarray
    scores: np.ndarray
    best_lambda: float
    best_fit: FitResult
    path_fits: list[FitResult]
    fold_assignment: np.ndarray
    lambda0: float
    fold_errors: dict = field(default_factory=dict)
    fold_info: dict = field(default_factory=dict)
    total_mm_iterations: int = 0
    max_loss_increase: float = 0.0

    def __post_init__(self):
        if self.lambda_grid.shape != self.scores.shape:
            raise ValueError("grid and score arrays must have equal length")


def intercept_only_fit(
    data: Dataset,
    gamma: float,
    init: ModelParams,
    tol: float = 1e-12,
    max_iters: int = 500,
) -> ModelParams:
    """Self-consistent intercept and variance with all coefficients zero.

    Started from ``init``; if the scale iteration collapses (which a
    starting variance far below the residual scale can trigger), it is
    restarted once from the median/MAD point of the response before
    giving up.
    """
    from .model_core import SIGMA2_VALIDITY_FLOOR

    y = data.y
    starts = [(float(init.beta0), float(init.sigma2))]
    med = float(np.median(y))
    mad2 = (1.4826 * float(np.median(np.abs(y - med)))) ** 2
    if mad2 >= SIGMA2_VALIDITY_FLOOR:
        starts.append((med, mad2))

    last_err = None
    for beta0, sigma2 in starts:
        try:
            for _ in range(max_iters):
                alpha = _weights_from_residuals(y - beta0, sigma2, gamma)
                beta0_new = float(alpha @ y)
                d = y - beta0_new
                sigma2_new = (1.0 + gamma) * float(alpha @ (d * d))
                if sigma2_new < SIGMA2_VALIDITY_FLOOR:
                    raise DegenerateFitError(
                        "intercept-only scale collapsed", params=init
                    )
                done = abs(beta0_new - beta0) < tol and abs(sigma2_new - sigma2) < tol
                beta0, sigma2 = beta0_new, sigma2_new
                if done:
                    break
            return ModelParams(beta0=beta0, beta=np.zeros(data.p), sigma2=sigma2)
        except DegenerateFitError as err:
            last_err = err
    raise last_err


def lambda_zero(data: Dataset, gamma: float, init: ModelParams) -> float:
    """Smallest penalty weight that keeps every coefficient at zero.

    Fits the intercept-plus-variance model to self-consistency and
    returns the largest weighted score |sum_i alpha_i (y_i - b0) x_ij|
    divided by the variance, nudged up by one part in 1e10 so that a fit
    at exactly this value thresholds every coordinate to zero.
    """
    p0 = intercept_only_fit(data, gamma, init)
    alpha = _weights_from_residuals(data.y - p0.beta0, p0.sigma2, gamma)
    t = data.x.T @ (alpha * (data.y - p0.beta0))
    return float(np.max(np.abs(t))) / p0.sigma2 * (1.0 + 1e-10)


def lambda_grid(lambda0: float, cfg: CvConfig) -> np.ndarray:
    """Log-uniform grid of penalty weights, descending from ``lambda0``
    to ``grid_floor_ratio * lambda0``."""
    if not (math.isfinite(lambda0) and lambda0 > 0.0):
        raise ValueError(f"lambda0 must be positive, got {lambda0}")
    if cfg.grid_size == 1:
        return np.asarray([lambda0])
    return np.geomspace(lambda0, cfg.grid_floor_ratio * lambda0, cfg.grid_size)


def _init_state_lambda(data: Dataset, gamma: float, init: ModelParams) -> float:
    """Zeroing penalty evaluated at the warm state itself: the largest
    weighted-gradient magnitude at ``init``, over the init's variance.

    For a zero-coefficient init this is close to ``lambda_zero``.  For a
    refined warm start whose residuals sit at the noise scale it is much
    larger, and it is exactly the ceiling the grid needs for the
    penalized refit around that state to be reachable.
    """
    r = data.y - init.beta0 - data.x @ init.beta
    alpha = _weights_from_residuals(r, init.sigma2, gamma)
    g = data.x.T @ (alpha * r)
    return float(np.max(np.abs(g))) / init.sigma2


def grid_ceiling(data: Dataset, gamma: float, init: ModelParams) -> float:
    """Anchor for the penalty grid.

    The larger of three scales: the intercept-only zeroing penalty, the
    zeroing penalty at the warm state, and a universal-threshold scale
    4 sqrt(2 log p / n) over the robust (MAD) residual scale of the warm
    state.  The first two alone lag behind a warm start whose variance
    is still descending; the third bounds the ceiling from below by the
    regime where noise-driven activation is fully suppressed, which is
    where the selection criterion needs room to search.  Overshooting is
    harmless (the criterion picks interior grid points); undershooting
    locks the search below the usable range.
    """
    lam = max(lambda_zero(data, gamma, init), _init_state_lambda(data, gamma, init))
    r = data.y - init.beta0 - data.x @ init.beta
    mad = 1.4826 * float(np.median(np.abs(r)))
    if mad > 1e-12:
        lam = max(lam, 4.0 * math.sqrt(2.0 * math.log(max(data.p, 2)) / data.n) / mad)
    return lam


def rocv_score(
    held_out: Dataset, params_per_point: Sequence[ModelParams], gamma0: float
) -> float:
    """Cross-validation criterion evaluated with one parameter vector
    per held-out point (the fit that did not see that point).

    Same functional form as the training loss, at exponent ``gamma0``.
    """
    if gamma0 <= 0.0:
        raise ValueError(f"gamma0 must be positive, got {gamma0}")
    n = held_out.n
    if len(params_per_point) != n:
        raise ValueError("need one parameter set per held-out point")
    a = np.empty(n)
    pints = np.empty(n)
    for i in range(n):
        pp = params_per_point[i]
        r = held_out.y[i] - pp.beta0 - float(held_out.x[i] @ pp.beta)
        logf = -0.5 * (_LOG_2PI + math.log(pp.sigma2)) - r * r / (2.0 * pp.sigma2)
        a[i] = gamma0 * logf
        pints[i] = power_integral(pp.sigma2, gamma0)
    m = float(np.max(a))
    if not math.isfinite(m):
        raise DegenerateScoreError("all held-out density terms underflowed")
    s = math.fsum(np.exp(a - m).tolist())
    term1 = -(m + math.log(s) - math.log(n)) / gamma0
    term2 = math.log(math.fsum(pints.tolist()) / n) / (1.0 + gamma0)
    return term1 + term2


def _rocv_pooled(y, mu, sigma2, gamma0) -> float:
    """Criterion for per-point means sharing one variance."""
    r = y - mu
    a = gamma0 * (-0.5 * (_LOG_2PI + math.log(sigma2)) - (r * r) / (2.0 * sigma2))
    m = float(np.max(a))
    if not math.isfinite(m):
        raise DegenerateScoreError("all held-out density terms underflowed")
    s = math.fsum(np.exp(a - m).tolist())
    term1 = -(m + math.log(s) - math.log(y.shape[0])) / gamma0
    term2 = math.log(power_integral(sigma2, gamma0)) / (1.0 + gamma0)
    return term1 + term2


def fold_assignment(n: int, folds: int, seed: int) -> np.ndarray:
    """Deterministic fold labels: a seeded permutation of the row
    indices split into nearly equal blocks."""
    perm = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed))).permutation(n)
    labels = np.empty(n, dtype=int)
    for k, chunk in enumerate(np.array_split(perm, folds)):
        labels[chunk] = k
    return labels


def cross_validate(
    data: Dataset,
    gamma: float,
    cfg: CvConfig,
    init: ModelParams,
    fit_config: FitConfig | None = None,
) -> CvReport:
    """Select the penalty weight by K-fold cross-validation.

    Builds the grid from ``lambda_zero``, then walks it from the largest
    value down, warm-starting every fit from the previous grid point's
    solution (the first fit starts from ``init``).  The full-data fit at
    each grid point supplies the variance used to score that grid
    point's held-out predictions.  Fits that collapse are recorded in
    ``fold_errors`` and their grid point is excluded from the argmin.

    The fold-by-grid fit tasks are independent given the warm-start
    order; results are assembled by (grid index, fold index).  Once a
    unit's path hits a degenerate fit, its remaining (smaller) grid
    points are abandoned: the collapse mechanism only worsens as the
    penalty shrinks, and those grid points are excluded anyway.
    """
    n = data.n
    k_folds = n if cfg.loo else cfg.folds
    if k_folds > n:
        raise ValueError(f"folds={k_folds} exceeds n={n}")
    base = fit_config if fit_config is not None else FitConfig(gamma=gamma, lam=0.0)

    lam0 = grid_ceiling(data, gamma, init)
    grid = lambda_grid(lam0, cfg)
    labels = fold_assignment(n, k_folds, cfg.seed)

    fold_train = []
    for k in range(k_folds):
        mask = labels != k
        fold_train.append(Dataset(y=data.y[mask], x=data.x[mask]))

    n_grid = grid.shape[0]
    fold_errors: dict = {}
    fold_info: dict = {}
    total_mm = 0
    max_increase = -np.inf

    def _walk(unit_data, unit_idx):
        nonlocal total_mm, max_increase
        current = init
        out = []
        for i, lam in enumerate(grid):
            try:
                res = fit(unit_data, replace(base, lam=float(lam)), current)
            except DegenerateFitError as err:
                fold_errors[(i, unit_idx)] = str(err)
                out.append(None)
                break
            current = res.params
            out.append(res)
            fold_info[(i, unit_idx)] = (res.mm_iterations, res.converged, res.kkt_violation)
            total_mm += res.mm_iterations
            if res.loss_trajectory.shape[0] > 1:
                inc = float(np.max(np.diff(res.loss_trajectory)))
                max_increase = max(max_increase, inc)
        out.extend([None] * (n_grid - len(out)))
        return out

    full_path = _walk(data, -1)
    fold_paths = [_walk(fold_train[k], k) for k in range(k_folds)]

    # A grid point is scored when its full-data fit and a quorum of fold
    # fits survived; points of collapsed folds are dropped from that
    # grid point's average.  Requiring every fold would let one brittle
    # fold poison the whole lower grid in the p >= n regime.
    quorum = max(2, (k_folds + 1) // 2)
    scores = np.full(n_grid, np.nan)
    for i in range(n_grid):
        if full_path[i] is None:
            continue
        alive = [k for k in range(k_folds) if fold_paths[k][i] is not None]
        if len(alive) < quorum:
            continue
        keep = np.zeros(n, dtype=bool)
        mu = np.empty(n)
        for k in alive:
            idx = labels == k
            pk = fold_paths[k][i].params
            mu[idx] = pk.beta0 + data.x[idx] @ pk.beta
            keep |= idx
        try:
            scores[i] = _rocv_pooled(
                data.y[keep], mu[keep], full_path[i].params.sigma2, cfg.gamma0
            )
        except DegenerateScoreError as err:
            fold_errors[(i, -2)] = str(err)

    if np.isnan(scores).all():
        raise DegenerateFitError("every grid point failed during cross-validation")
    best_idx = int(np.nanargmin(scores))

    return CvReport(
        lambda_grid=grid,
        scores=scores,
        best_lambda=float(grid[best_idx]),
        best_fit=full_path[best_idx],
        path_fits=full_path,
        fold_assignment=labels,
        lambda0=lam0,
        fold_errors=fold_errors,
        fold_info=fold_info,
        total_mm_iterations=total_mm,
        max_loss_increase=float(max_increase) if math.isfinite(max_increase) else 0.0,
    )


def iterated_cross_validate(
    data: Dataset,
    gamma: float,
    cfg: CvConfig,
    init: ModelParams,
    fit_config: FitConfig | None = None,
    max_rounds: int = 4,
) -> CvReport:
    """Cross-validation with warm restarts until the grid stabilizes.

    A fresh start anchors the grid at the response scale, where the
    selected fit can remain stuck on an outlier-inflated variance.
    Rescaling the selected fit's variance to its residual MAD and
    re-running the selection raises the grid ceiling into the range
    where the refined fit is stationary.  The rounds stop when the
    selection stabilizes (same support, nearby penalty and coefficients)
    or the implied ceiling stops growing, at most ``max_rounds`` rounds.
    Every round selects by the same robust criterion, so the procedure
    is a fixed-point iteration on the selection itself.
    """
    from .initializers import mad_rescale

    warm = init
    report = None
    prev = None
    for _ in range(max_rounds):
        report = cross_validate(data, gamma, cfg, warm, fit_config)
        sel = report.best_fit.params
        if prev is not None:
            lam_prev, params_prev = prev
            same_support = np.array_equal(sel.active_set, params_prev.active_set)
            lam_ratio = report.best_lambda / lam_prev
            close = (
                same_support
                and 0.5 <= lam_ratio <= 2.0
                and float(np.max(np.abs(sel.beta - params_prev.beta), initial=0.0))
                <= 1e-4 * (1.0 + float(np.max(np.abs(sel.beta), initial=0.0)))
            )
            if close:
                break
        refined = mad_rescale(data, sel)
        next_ceiling = grid_ceiling(data, gamma, refined)
        if next_ceiling <= 1.3 * report.lambda0:
            break
        warm = refined
        prev = (report.best_lambda, sel)
    return report
