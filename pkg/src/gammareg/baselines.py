"""Plain squared-error Lasso used as the non-robust comparator in the
benchmark harness."""

from __future__ import annotations

import numpy as np

from .model_core import Dataset, ModelParams
from .selection import CvConfig, CvReport, fold_assignment, lambda_grid
from .solver import FitResult, soft_threshold, _transposed


def lasso_lambda_max(data: Dataset) -> float:
    """Smallest penalty that zeroes every coefficient:
    max_j |sum_i x_ij (y_i - ybar)| / n."""
    yc = data.y - data.y.mean()
    return float(np.max(np.abs(data.x.T @ yc))) / data.n


def _lasso_objective(y, x, beta, beta0, lam) -> float:
    r = y - beta0 - x @ beta
    return 0.5 * float(r @ r) / y.shape[0] + lam * float(np.abs(beta).sum())


def lasso_fit(
    data: Dataset,
    lam: float,
    tol: float = 1e-8,
    max_sweeps: int = 1000,
    init: ModelParams | None = None,
) -> FitResult:
    """Cyclic coordinate descent on the squared-error Lasso objective
    0.5 mean(y - b0 - x b)^2 + lam |b|_1 with unpenalized intercept.

    Deterministic, exact zeros via soft thresholding.  The reported
    variance is the mean squared residual of the solution (for
    prediction scoring; the objective has no variance parameter).
    """
    if lam < 0.0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    y, x = data.y, data.x
    n, p = x.shape
    xt, x2t = _transposed(x)
    colnorm = x2t.sum(axis=1) / n

    if init is not None:
        beta = init.beta.copy()
        beta0 = float(init.beta0)
    else:
        beta = np.zeros(p)
        beta0 = 0.0
    r = y - beta0 - beta @ xt

    trajectory = [_lasso_objective(y, x, beta, beta0, lam)]
    converged = False
    sweeps = 0
    for _ in range(max_sweeps):
        delta = 0.0
        d0 = float(r.mean())
        if d0 != 0.0:
            beta0 += d0
            r -= d0
            delta = abs(d0)
        for j in range(p):
            denom = colnorm[j]
            if denom <= 0.0:
                continue
            old = beta[j]
            t = float(xt[j] @ r) / n + denom * old
            new = soft_threshold(t, lam) / denom
            if new != old:
                r -= xt[j] * (new - old)
                beta[j] = new
                delta = max(delta, abs(new - old))
        sweeps += 1
        trajectory.append(_lasso_objective(y, x, beta, beta0, lam))
        if delta < tol:
            converged = True
            break

    mse = float(r @ r) / n
    params = ModelParams(beta0=beta0, beta=beta, sigma2=max(mse, 1e-12))
    g = -(x.T @ r) / n
    slack = np.where(
        beta != 0.0,
        np.abs(g + lam * np.sign(beta)),
        np.maximum(np.abs(g) - lam, 0.0),
    )
    kkt = max(float(np.max(slack)), abs(float(r.mean())))
    return FitResult(
        params=params,
        loss_trajectory=np.asarray(trajectory),
        active_set=np.flatnonzero(beta),
        mm_iterations=sweeps,
        converged=converged,
        kkt_violation=kkt,
    )


def lasso_cv(
    data: Dataset,
    folds: int = 10,
    grid: np.ndarray | None = None,
    seed: int = 0,
    grid_size: int = 50,
    grid_floor_ratio: float = 0.05,
) -> CvReport:
    """K-fold cross-validation of the Lasso on mean squared prediction
    error, with warm-started descent along the (descending) grid.

    The default grid is log-uniform from the zeroing penalty down to
    ``grid_floor_ratio`` times it, mirroring the robust selector's grid
    machinery.  Ties in the score go to the larger penalty.
    """
    n = data.n
    if grid is None:
        cfg = CvConfig(folds=max(folds, 2), grid_size=grid_size,
                       grid_floor_ratio=grid_floor_ratio, seed=seed)
        grid = lambda_grid(lasso_lambda_max(data), cfg)
    grid = np.asarray(grid, dtype=float)
    labels = fold_assignment(n, folds, seed)

    n_grid = grid.shape[0]
    mu = np.empty((n_grid, n))
    for k in range(folds):
        mask = labels != k
        train = Dataset(y=data.y[mask], x=data.x[mask])
        current = None
        for i, lam in enumerate(grid):
            res = lasso_fit(train, float(lam), init=current)
            current = res.params
            idx = labels == k
            mu[i, idx] = current.beta0 + data.x[idx] @ current.beta

    scores = np.mean((data.y[None, :] - mu) ** 2, axis=1)
    best_idx = int(np.argmin(scores))

    path = []
    current = None
    total_mm = 0
    max_inc = 0.0
    for lam in grid:
        res = lasso_fit(data, float(lam), init=current)
        current = res.params
        path.append(res)
        total_mm += res.mm_iterations
        if res.loss_trajectory.shape[0] > 1:
            max_inc = max(max_inc, float(np.max(np.diff(res.loss_trajectory))))

    return CvReport(
        lambda_grid=grid,
        scores=scores,
        best_lambda=float(grid[best_idx]),
        best_fit=path[best_idx],
        path_fits=path,
        fold_assignment=labels,
        lambda0=float(grid[0]),
        total_mm_iterations=total_mm,
        max_loss_increase=max_inc,
    )
