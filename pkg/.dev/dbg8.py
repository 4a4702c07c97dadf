import numpy as np
import gammareg as G
from gammareg.simulation import generate_detailed
from gammareg.initializers import mad_rescale
from gammareg.selection import grid_ceiling
from gammareg.solver import FitConfig
from gammareg.errors import DegenerateFitError

spec = G.SimulationSpec(n=100, p=100, rho=0.2, epsilon=0.1, pattern="a", seed=(42, 0))
train, test, _ = generate_detailed(spec)
init = G.zero_init(train)
cv1 = G.cross_validate(train, 0.1, G.CvConfig(seed=3), init)
best = cv1.best_fit.params
print("r1 best: lam=", cv1.best_lambda, "act=", len(cv1.best_fit.active_set), "s2=", best.sigma2)
warm = mad_rescale(train, best)
print("rescaled s2:", warm.sigma2)
ceil2 = grid_ceiling(train, 0.1, warm)
print("ceil2:", ceil2)
grid2 = G.lambda_grid(ceil2, G.CvConfig(seed=3))
try:
    res = G.fit(train, FitConfig(gamma=0.1, lam=float(grid2[0])), warm)
    print("r2 idx0: act=", len(res.active_set), "s2=", res.params.sigma2, "mm=", res.mm_iterations)
except DegenerateFitError as e:
    print("r2 idx0 DEGENERATE:", e, "| lastvalid act=", int(np.sum(e.params.beta != 0)), "s2=", e.params.sigma2)
