"""Starting points for the non-convex fit.

The loss surface has multiple stationary points, so the starting value
matters, especially under heavy contamination.  A consensus search over
random subsets scored by the median squared residual gives a 50%
breakdown starting point; the plain fallback centers on the median and
scales by the normal-consistent MAD.
"""

from __future__ import annotations

import numpy as np

from .model_core import Dataset, ModelParams, SIGMA2_VALIDITY_FLOOR

# Normal-consistency constant: 1/Phi^{-1}(3/4).
MAD_SCALE = 1.4826


def zero_init(data: Dataset) -> ModelParams:
    """All-zero coefficients, median intercept, MAD-based variance.

    A zero MAD (constant response) floors the variance and flags the
    result as degenerate.
    """
    med = float(np.median(data.y))
    mad = float(np.median(np.abs(data.y - med)))
    sigma2 = (MAD_SCALE * mad) ** 2
    degenerate = sigma2 < SIGMA2_VALIDITY_FLOOR
    if degenerate:
        sigma2 = SIGMA2_VALIDITY_FLOOR
    return ModelParams(
        beta0=med, beta=np.zeros(data.p), sigma2=sigma2, degenerate=degenerate
    )


def mad_rescale(data: Dataset, params: ModelParams) -> ModelParams:
    """Same coefficients, variance replaced by the squared
    MAD-consistent scale of the current residuals.

    Warm restarts need this: a fit stuck on an outlier-inflated scale
    keeps its (correct) support while the robust residual scale drops
    below the outlier-rejection threshold, letting the next fit
    downweight them fully.
    """
    r = data.y - params.beta0 - data.x @ params.beta
    scale = MAD_SCALE * float(np.median(np.abs(r)))
    sigma2 = max(scale * scale, SIGMA2_VALIDITY_FLOOR)
    return ModelParams(beta0=params.beta0, beta=params.beta, sigma2=sigma2)


def _default_subset_size(n: int, p: int) -> int:
    if p + 2 <= n:
        return p + 2
    return min(n, max(p // 2, 10))


def ransac_init(
    data: Dataset,
    subset_size: int | None = None,
    trials: int = 200,
    seed: int = 0,
) -> ModelParams:
    """Random-consensus starting point.

    Repeatedly draws a random row subset, solves (ridge-stabilized)
    least squares on it, and scores the candidate by the median squared
    residual over all rows; the best-scoring candidate wins, ties going
    to the earlier trial.  The returned variance is the squared
    MAD-consistent scale of the winning residuals.

    When the subset cannot support an ordinary solve (fewer than p + 2
    rows), a diagonal ridge of 1e-6 times the mean diagonal of the
    normal matrix stabilizes it; for well-conditioned subsets the
    perturbation is negligible.  An underdetermined subset is fitted
    exactly by the stabilized solve, so in that regime the returned
    variance is taken from the out-of-subset residuals (the in-subset
    ones are identically ~0 and carry no scale information).
    """
    n, p = data.n, data.p
    if n < 3:
        raise ValueError(f"need at least 3 rows, got {n}")
    if subset_size is None:
        subset_size = _default_subset_size(n, p)
    subset_size = int(min(max(subset_size, 2), n))
    if trials < 1:
        raise ValueError("trials must be at least 1")
    interpolating = subset_size < p + 2

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    dim = p + 1
    best_score = np.inf
    best_coef = None
    best_idx = None

    for _ in range(trials):
        idx = rng.choice(n, size=subset_size, replace=False)
        xs = np.empty((subset_size, dim))
        xs[:, 0] = 1.0
        xs[:, 1:] = data.x[idx]
        ys = data.y[idx]
        g = xs.T @ xs
        ridge = 1e-6 * (np.trace(g) / dim)
        g[np.diag_indices_from(g)] += ridge
        coef = np.linalg.solve(g, xs.T @ ys)
        resid = data.y - coef[0] - data.x @ coef[1:]
        score = float(np.median(resid * resid))
        if score < best_score:
            best_score = score
            best_coef = coef
            best_idx = idx

    resid = data.y - best_coef[0] - data.x @ best_coef[1:]
    if interpolating:
        held_out = np.delete(resid, best_idx)
        scale_resid = held_out if held_out.size else resid
    else:
        scale_resid = resid
    scale = MAD_SCALE * float(np.median(np.abs(scale_resid)))
    sigma2 = max(scale * scale, SIGMA2_VALIDITY_FLOOR)
    return ModelParams(beta0=float(best_coef[0]), beta=best_coef[1:], sigma2=sigma2)
