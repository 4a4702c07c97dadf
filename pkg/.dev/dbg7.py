import numpy as np
import gammareg as G
from gammareg.simulation import generate_detailed

spec = G.SimulationSpec(n=100, p=100, rho=0.2, epsilon=0.1, pattern="a", seed=(42, 0))
train, test, _ = generate_detailed(spec)
init = G.zero_init(train)
try:
    cv = G.cross_validate(train, 0.1, G.CvConfig(seed=3), init)
    print("scores[:8]:", cv.scores[:8])
except Exception as e:
    import traceback; traceback.print_exc()
    # inspect manually
    from gammareg.selection import grid_ceiling, lambda_grid, fold_assignment
    lam0 = grid_ceiling(train, 0.1, init)
    print("ceiling:", lam0)
