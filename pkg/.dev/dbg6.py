import numpy as np
import gammareg as G
from gammareg.simulation import generate_detailed
from gammareg.selection import fold_assignment
from gammareg.model_core import Dataset
from gammareg.solver import FitConfig
from gammareg.errors import DegenerateFitError

spec = G.SimulationSpec(n=100, p=100, rho=0.2, epsilon=0.1, pattern="a", seed=(42, 0))
train, test, _ = generate_detailed(spec)
init = G.zero_init(train)
lam0 = G.lambda_zero(train, 0.1, init)
grid = G.lambda_grid(lam0, G.CvConfig())
labels = fold_assignment(train.n, 10, 3)

mask = labels != 1
ftrain = Dataset(y=train.y[mask], x=train.x[mask])
res0 = G.fit(ftrain, FitConfig(gamma=0.1, lam=float(grid[0])), init)
print("idx0 act=", len(res0.active_set), "mm=", res0.mm_iterations)
try:
    res1 = G.fit(ftrain, FitConfig(gamma=0.1, lam=float(grid[1])), res0.params)
    print("idx1 act=", len(res1.active_set), "mm=", res1.mm_iterations, "s2=", res1.params.sigma2)
except DegenerateFitError as e:
    print("idx1 DEGENERATE:", e)
    lv = e.params
    print("last valid: act=", int(np.sum(lv.beta != 0)), "s2=", lv.sigma2)
