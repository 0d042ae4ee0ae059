"""Hinge-loss SVM: parallel bundle (3 instances) vs Pegasos at equal oracle budgets.

Uses a synthetic dataset; set PROXBUNDLE_DATA to a directory holding a
LIBSVM-format file and change ``dataset`` to use real data.
"""
import numpy as np

from proxbundle import harness
from proxbundle.baselines import pegasos_run
from proxbundle.parallel import ParallelConfig, parallel_run

spec = {"family": "svm", "dataset": "synthetic", "n": 80, "d": 20}
for lam in (1e-3, 1e-1, 1.0):
    P = harness.build_problem(spec, 0, lam)
    w0 = np.zeros(P.dimension)
    f_star, _ = harness.reference_solve(P, x0=w0)
    _, best = parallel_run(harness.build_problem(spec, 0, lam),
                           ParallelConfig(rho_bar=1e-9, J=3, ratio=1e4, max_iterations=2000, f_star=f_star), w0)
    peg = pegasos_run(harness.build_problem(spec, 0, lam), 6000, w0, f_star)
    print(f"lambda={lam:g}: f*={f_star:.6f}  bundle gap {best.best_gap:.2e}  pegasos gap {peg.best_gap:.2e}"
          f"  ({best.oracle_calls} vs {peg.oracle_calls} calls)")
