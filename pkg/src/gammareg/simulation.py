"""Seeded data generators and the benchmark harness.

Randomness contract: every draw comes from a PCG64 stream keyed by a
``SeedSequence``; replication r of an experiment with seed s uses the
substream keyed by (s, r), so serial and parallel runs agree.  Normal
variates are produced by inverse-CDF transform of 53-bit uniforms, which
pins the sampled values to the generator state alone.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from .baselines import lasso_cv
from .errors import DegenerateFitError
from .initializers import ransac_init, zero_init
from .metrics import mse_coefficients, rmspe, tpr_tnr
from .model_core import Dataset
from .selection import CvConfig, iterated_cross_validate

OUTLIER_ERROR_MEAN = 20.0
OUTLIER_ERROR_SD = 0.5
OUTLIER_X_SD = 0.5
OUTLIER_X_MEAN = {"a": 0.0, "b": -1.5}

_TRUE_SUPPORT = {1: 1.0, 2: 2.0, 4: 4.0, 7: 7.0, 11: 11.0}


@dataclass(frozen=True)
class SimulationSpec:
    """One experimental design: size, predictor correlation,
    contamination level and pattern, noise scale, seed.

    Pattern "a" plants outliers around the middle of the predictor
    range, pattern "b" around its edge; both shift the error
    distribution far into the response tail.
    """

    n: int = 100
    p: int = 100
    rho: float = 0.2
    epsilon: float = 0.1
    pattern: str = "a"
    noise_sd: float = 0.5
    seed: object = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be at least 1")
        if not 0.0 <= self.epsilon < 0.5:
            raise ValueError(f"epsilon must lie in [0, 0.5), got {self.epsilon}")
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.pattern not in ("a", "b", "none"):
            raise ValueError(f"pattern must be one of a, b, none; got {self.pattern}")
        if self.pattern == "none" and self.epsilon > 0.0:
            raise ValueError("pattern 'none' requires epsilon = 0")
        if self.noise_sd <= 0.0:
            raise ValueError("noise_sd must be positive")


def true_coefficients(p: int) -> np.ndarray:
    """Generating coefficients: a broad range of magnitudes on a sparse
    support, zero intercept.  Length p + 1, index 0 is the intercept."""
    beta = np.zeros(p + 1)
    for j, v in _TRUE_SUPPORT.items():
        if j <= p:
            beta[j] = v
    return beta


def _standard_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Inverse-CDF normal sampling from 53-bit uniforms in (0, 1)."""
    u = (rng.integers(0, 1 << 53, size=size) + 0.5) / float(1 << 53)
    return ndtri(u)


def _ar1_rows(rng, n, p, rho) -> np.ndarray:
    """Rows from N(0, Sigma) with Sigma_ij = rho^|i-j|, built by the
    stationary AR(1) recursion across coordinates."""
    z = _standard_normal(rng, (n, p))
    x = np.empty((n, p))
    x[:, 0] = z[:, 0]
    c = math.sqrt(1.0 - rho * rho)
    for j in range(1, p):
        x[:, j] = rho * x[:, j - 1] + c * z[:, j]
    return x


def generate_detailed(spec: SimulationSpec):
    """Generate one train/test pair plus the contaminated row indices.

    Train: n rows, the first floor(epsilon n) of which are outliers,
    then the whole block is row-shuffled.  Test: n clean rows.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    n, p = spec.n, spec.p
    beta = true_coefficients(p)
    n_out = int(math.floor(spec.epsilon * n))
    n_clean = n - n_out

    x = np.empty((n, p))
    y = np.empty(n)
    if n_out:
        x[:n_out] = OUTLIER_X_MEAN[spec.pattern] + OUTLIER_X_SD * _standard_normal(
            rng, (n_out, p)
        )
        e = OUTLIER_ERROR_MEAN + OUTLIER_ERROR_SD * _standard_normal(rng, n_out)
        y[:n_out] = beta[0] + x[:n_out] @ beta[1:] + e
    x[n_out:] = _ar1_rows(rng, n_clean, p, spec.rho)
    y[n_out:] = beta[0] + x[n_out:] @ beta[1:] + spec.noise_sd * _standard_normal(
        rng, n_clean
    )

    perm = rng.permutation(n)
    train = Dataset(y=y[perm], x=x[perm], true_beta=beta)
    outlier_rows = np.sort(np.flatnonzero(perm < n_out)) if n_out else np.empty(0, int)

    x_test = _ar1_rows(rng, n, p, spec.rho)
    y_test = beta[0] + x_test @ beta[1:] + spec.noise_sd * _standard_normal(rng, n)
    test = Dataset(y=y_test, x=x_test, true_beta=beta)
    return train, test, outlier_rows


def generate(spec: SimulationSpec) -> tuple[Dataset, Dataset]:
    """Train/test pair for one design; see ``generate_detailed``."""
    train, test, _ = generate_detailed(spec)
    return train, test


@dataclass(frozen=True)
class MethodSpec:
    """One entry of the benchmark: either the robust estimator with its
    selection procedure, or the plain Lasso comparator."""

    name: str
    gamma: float = 0.1
    gamma0: float = 0.5
    folds: int = 10
    grid_size: int = 50
    grid_floor_ratio: float = 0.05
    init: str = "ransac"
    ransac_trials: int = 200

    def __post_init__(self):
        if self.name not in ("gamma", "lasso"):
            raise ValueError(f"unknown method {self.name!r}")
        if self.init not in ("ransac", "zero"):
            raise ValueError(f"unknown initializer {self.init!r}")

    def label(self) -> str:
        return f"gamma({self.gamma})" if self.name == "gamma" else "lasso"


@dataclass
class ExperimentResult:
    """Per-method means in the benchmark layout, plus raw per-replication
    metric rows and failure bookkeeping."""

    methods: list
    means: dict
    per_replication: dict
    failures: dict
    total_mm_iterations: int = 0
    max_loss_increase: float = 0.0

    def to_rows(self):
        """Rows of (method, rmspe, mse, tpr, tnr) means."""
        out = []
        for m in self.methods:
            mm = self.means[m.label()]
            out.append((m.label(), mm["rmspe"], mm["mse"], mm["tpr"], mm["tnr"]))
        return out


def _fit_one_method(method: MethodSpec, train: Dataset, test: Dataset, seeds):
    if method.name == "lasso":
        report = lasso_cv(
            train,
            folds=method.folds,
            seed=seeds[1],
            grid_size=method.grid_size,
            grid_floor_ratio=method.grid_floor_ratio,
        )
    else:
        if method.init == "ransac":
            init = ransac_init(train, trials=method.ransac_trials, seed=seeds[2])
        else:
            init = zero_init(train)
        cfg = CvConfig(
            gamma0=method.gamma0,
            folds=method.folds,
            grid_size=method.grid_size,
            grid_floor_ratio=method.grid_floor_ratio,
            seed=seeds[3],
        )
        report = iterated_cross_validate(train, method.gamma, cfg, init)
    params = report.best_fit.params

    tb = train.true_beta
    est_full = np.concatenate(([params.beta0], params.beta))
    tpr, tnr = tpr_tnr(tb[1:], params.beta)
    return {
        "rmspe": rmspe(test, params),
        "mse": mse_coefficients(tb, est_full),
        "tpr": tpr,
        "tnr": tnr,
        "mm_iterations": report.total_mm_iterations,
        "max_loss_increase": report.max_loss_increase,
    }


def _run_replication(args):
    spec, methods, seed, rep = args
    seeds = [int(s) for s in np.random.SeedSequence((seed, rep)).generate_state(4)]
    train, test, _ = generate_detailed(replace(spec, seed=(seed, rep)))
    out = {}
    errors = {}
    for method in methods:
        try:
            out[method.label()] = _fit_one_method(method, train, test, seeds)
        except DegenerateFitError as err:
            errors[method.label()] = str(err)
    return rep, out, errors


def run_experiment(
    spec: SimulationSpec,
    methods,
    replications: int,
    seed: int = 0,
    n_jobs: int | None = None,
) -> ExperimentResult:
    """Run the benchmark: generate, fit every method with its selection
    procedure, and score on the clean test set, averaged over seeded
    replications.

    Replications use independent substreams keyed by (seed, index) and
    can run in parallel processes; results are merged by replication
    index, so the job count never changes the output.  Failed
    replications are recorded, excluded from the means, and counted.
    """
    if replications < 1:
        raise ValueError("replications must be at least 1")
    methods = list(methods)
    if n_jobs is None:
        n_jobs = int(os.environ.get("GAMMAREG_THREADS", os.cpu_count() or 1))
    tasks = [(spec, methods, seed, r) for r in range(replications)]

    if n_jobs > 1 and replications > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            raw = list(pool.map(_run_replication, tasks))
    else:
        raw = [_run_replication(t) for t in tasks]
    raw.sort(key=lambda t: t[0])

    per_rep = {m.label(): [] for m in methods}
    failures = {m.label(): [] for m in methods}
    total_mm = 0
    max_inc = 0.0
    for rep, out, errors in raw:
        for m in methods:
            lbl = m.label()
            if lbl in out:
                per_rep[lbl].append(out[lbl])
                total_mm += out[lbl]["mm_iterations"]
                max_inc = max(max_inc, out[lbl]["max_loss_increase"])
            else:
                failures[lbl].append((rep, errors.get(lbl, "unknown")))

    means = {}
    for m in methods:
        lbl = m.label()
        rows = per_rep[lbl]
        if rows:
            means[lbl] = {
                k: float(np.mean([row[k] for row in rows]))
                for k in ("rmspe", "mse", "tpr", "tnr")
            }
        else:
            means[lbl] = {k: float("nan") for k in ("rmspe", "mse", "tpr", "tnr")}
    return ExperimentResult(
        methods=methods,
        means=means,
        per_replication=per_rep,
        failures=failures,
        total_mm_iterations=total_mm,
        max_loss_increase=max_inc,
    )
