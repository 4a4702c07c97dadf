import numpy as np
import gammareg as G
from gammareg.simulation import generate_detailed
from gammareg.selection import fold_assignment
from gammareg.model_core import Dataset, _weights_from_residuals
from gammareg.solver import _CdState, _minimize_surrogate_beta, _transposed, FitConfig
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
print("fold1 idx0 act=", len(res0.active_set), "s2=", res0.params.sigma2)

lam = float(grid[1])
y, x = ftrain.y, ftrain.x
xt, x2t = _transposed(x)
beta = res0.params.beta.copy(); beta0 = res0.params.beta0; s2 = res0.params.sigma2
r = y - beta0 - beta @ xt
cfg1 = FitConfig(gamma=0.1, lam=lam)
for m in range(24):
    alpha = _weights_from_residuals(r, s2, 0.1)
    st = _CdState(y, xt, x2t, alpha, beta, beta0, s2*lam)
    _minimize_surrogate_beta(st, 100, cfg1)
    beta, beta0, r = st.beta, st.beta0, st.r
    w = float(alpha @ (r*r)); s2n = 1.1*w
    act = int(np.sum(beta != 0))
    print(f"m={m:2d} act={act:3d} s2={s2n:.4e} ratio={s2n/s2:.4f}")
    s2 = s2n
    if s2 < 1e-10: break
