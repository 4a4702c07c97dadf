import numpy as np
import gammareg as G
from gammareg.simulation import generate_detailed
from gammareg.errors import DegenerateFitError

spec = G.SimulationSpec(n=100, p=100, rho=0.2, epsilon=0.1, pattern="a", seed=(42, 0))
train, test, _ = generate_detailed(spec)
init = G.zero_init(train)

cv = G.cross_validate(train, 0.1, G.CvConfig(seed=3), init)
print("errors:", dict(list(cv.fold_errors.items())[:8]))
print("scores[:10]:", cv.scores[:10])
print("best:", cv.best_lambda, "act:", len(cv.best_fit.active_set))
