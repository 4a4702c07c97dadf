import faulthandler, sys, time
flog = open(".dev/dbg.log", "w", buffering=1)
faulthandler.dump_traceback_later(12, exit=True, file=flog)
import numpy as np
import gammareg as G
flog.write("imported\n")
spec = G.SimulationSpec(n=100, p=100, rho=0.2, epsilon=0.1, pattern="a", seed=(42, 0))
from gammareg.simulation import generate_detailed
train, test, _ = generate_detailed(spec)
flog.write("generated\n")
init = G.zero_init(train)
flog.write("init done\n")
lam0 = G.lambda_zero(train, 0.1, init)
flog.write(f"lam0 {lam0}\n")
t0 = time.time()
res = G.fit(train, G.FitConfig(gamma=0.1, lam=lam0), init)
flog.write(f"fit {time.time()-t0}, mm={res.mm_iterations}\n")
