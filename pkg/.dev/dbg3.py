import numpy as np
import gammareg as G
from gammareg.simulation import generate_detailed
from gammareg.solver import FitConfig
from gammareg.errors import DegenerateFitError

spec = G.SimulationSpec(n=100, p=100, rho=0.2, epsilon=0.1, pattern="a", seed=(42, 0))
train, test, _ = generate_detailed(spec)
init = G.zero_init(train)
lam0 = G.lambda_zero(train, 0.1, init)
grid = G.lambda_grid(lam0, G.CvConfig())

res0 = G.fit(train, FitConfig(gamma=0.1, lam=float(grid[0])), init)
print("idx0 mm=", res0.mm_iterations, "act=", len(res0.active_set))
try:
    res1 = G.fit(train, FitConfig(gamma=0.1, lam=float(grid[1])), res0.params)
    print("idx1 mm=", res1.mm_iterations, "act=", len(res1.active_set), "s2=", res1.params.sigma2,
          "conv=", res1.converged, "kkt=", res1.kkt_violation)
except DegenerateFitError as e:
    print("idx1 DEGENERATE:", e)
    import traceback; traceback.print_exc()
