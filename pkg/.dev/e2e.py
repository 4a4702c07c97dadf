import numpy as np, time
import gammareg as G
from gammareg.selection import iterated_cross_validate
from gammareg.simulation import generate_detailed

spec = G.SimulationSpec(n=100, p=100, rho=0.2, epsilon=0.1, pattern="a", seed=(42, 0))
train, test, _ = generate_detailed(spec)
tb = train.true_beta

for label, init in [("zero", G.zero_init(train)), ("ransac", G.ransac_init(train, trials=200, seed=7))]:
    t0 = time.time()
    cv = iterated_cross_validate(train, 0.1, G.CvConfig(seed=3), init)
    t_cv = time.time() - t0
    params = cv.best_fit.params
    tpr, tnr = G.tpr_tnr(tb[1:], params.beta)
    print(f"{label}: {t_cv:6.2f}s best_lam={cv.best_lambda:.4f} ceil={cv.lambda0:.4f} "
          f"rmspe={G.rmspe(test, params):.4f} tpr={tpr:.2f} tnr={tnr:.4f} "
          f"act={len(cv.best_fit.active_set)} nan={int(np.sum(np.isnan(cv.scores)))} "
          f"mm={cv.total_mm_iterations} maxinc={cv.max_loss_increase:.2e}", flush=True)
