"""Closed-form two-cut prox vs the general polyhedral solver.

The two-cut model (aggregate + newest oracle cut) has a one-line prox; the
general solver works on the simplex dual of any cut collection. Here both
are run on the same random subproblems and compared.
"""
import time

import numpy as np

from proxbundle.model import FULL_MEMORY, CutModel, aggregate_cut, oracle_cut
from proxbundle.prox import prox_polyhedral, prox_two_cut
from proxbundle.rng import stream

gen = stream(0, "demo-two-cut")
diffs, t_closed, t_dual = [], 0.0, 0.0
for _ in range(300):
    d = int(gen.choice([1, 2, 5, 20]))
    rho = 10.0 ** gen.uniform(-3, 3)
    z = gen.normal(size=d)
    s_cut = aggregate_cut(z, 0.0, gen.normal(size=d))
    g_cut = oracle_cut(z, abs(gen.normal()), gen.normal(size=d))
    x = gen.normal(size=d)
    t = time.perf_counter()
    a = prox_two_cut(s_cut, g_cut, x, rho)
    t_closed += time.perf_counter() - t
    t = time.perf_counter()
    b = prox_polyhedral(CutModel([s_cut, g_cut], FULL_MEMORY), x, rho)
    t_dual += time.perf_counter() - t
    diffs.append(a.objective() - b.objective())

print(f"max objective difference (closed - dual): {max(diffs):.2e}")
print(f"closed form {1e6 * t_closed / 300:.1f} us/solve, dual solver {1e6 * t_dual / 300:.1f} us/solve")
