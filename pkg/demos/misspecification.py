"""Holder-adaptive stepsize with a wrong growth modulus: still linear, just slower."""
import numpy as np
from scipy.stats import linregress

from proxbundle.engine import BundleConfig, StepsizePolicy, run
from proxbundle.oracle import make_sharp_regression
from proxbundle.rng import stream

x0 = stream(0, "x0").standard_normal(50)
mu = make_sharp_regression(100, 50, 0).constants.growth_mu
for scale in (1.0, 1 / 3, 3.0):
    tr = run(make_sharp_regression(100, 50, 0),
             BundleConfig(StepsizePolicy.opt_holder(mu * scale, 1.0, 0.0), max_iterations=150), x0)
    g = tr.best_gaps
    k = np.arange(10, min(150, len(g) - 1) + 1)
    fit = linregress(k, np.log(np.maximum(g[k], 1e-300)))
    print(f"mu x {scale:5.3f}: gap@150 {g[-1]:.2e}  log-gap slope {fit.slope:+.3f}  R^2 {fit.rvalue ** 2:.3f}")
