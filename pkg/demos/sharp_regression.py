"""Sharp regression min ||Ax - b||_1: ideal stepsize, the Holder-adaptive rule
and the parallel ladder all converge linearly; a badly chosen constant does not."""
import numpy as np

from proxbundle.engine import BundleConfig, StepsizePolicy, run
from proxbundle.oracle import make_sharp_regression
from proxbundle.parallel import ParallelConfig, parallel_run
from proxbundle.rng import stream

seed = 0
x0 = stream(seed, "x0").standard_normal(50)
mu = make_sharp_regression(100, 50, seed).constants.growth_mu

runs = {}
for name, pol in [("ideal", StepsizePolicy.ideal(0.0)),
                  ("opt_holder", StepsizePolicy.opt_holder(mu, 1.0, 0.0)),
                  ("constant rho=1", StepsizePolicy.constant(1.0))]:
    runs[name] = run(make_sharp_regression(100, 50, seed), BundleConfig(pol, max_iterations=150), x0)
traces, best = parallel_run(make_sharp_regression(100, 50, seed),
                            ParallelConfig(rho_bar=1.0, J=9, ratio=10.0, max_iterations=150), x0)
runs["parallel J=9"] = best

print(f"{'method':>16} " + " ".join(f"{k:>9}" for k in (10, 50, 100, 150)))
for name, tr in runs.items():
    g = tr.best_gaps
    print(f"{name:>16} " + " ".join(f"{g[min(k, len(g) - 1)]:9.2e}" for k in (10, 50, 100, 150)))
print("parallel leader per round:", best.meta["leaders"][:40], "...")
