"""Smoothed max (log-sum-exp): the parallel bundle method vs GD and AGD at 2000 oracle calls."""
from proxbundle.baselines import agd_run, gd_run
from proxbundle.oracle import make_logsumexp
from proxbundle.parallel import ParallelConfig, parallel_run
from proxbundle.rng import stream

x0 = stream(0, "x0").standard_normal(100)
P = make_logsumexp(100, 600, 0.05, 0)
step = 0.9 / P.constants.smooth_L
_, best = parallel_run(P, ParallelConfig(rho_bar=1e-3, J=4, ratio=10.0, max_iterations=500), x0)
gd = gd_run(make_logsumexp(100, 600, 0.05, 0), step, 2000, x0)
agd = agd_run(make_logsumexp(100, 600, 0.05, 0), step, 2000, x0)
for name, tr in (("parallel bundle", best), ("gd", gd), ("agd", agd)):
    print(f"{name:>16}: gap {tr.best_gap:.3e} after {tr.oracle_calls} calls")
