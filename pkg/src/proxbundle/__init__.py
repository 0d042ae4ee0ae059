"""Proximal bundle methods for nonsmooth convex minimization."""

from .baselines import BaselineConfig, agd_run, gd_run, pegasos_run, run_baseline
from .engine import BundleConfig, RunTrace, StepsizePolicy, bundle_step, compute_rho, run
from .model import FULL_MEMORY, TWO_CUT, CutModel, aggregate_cut, oracle_cut
from .oracle import (
    FunctionOracle,
    LogSumExp,
    ProblemConstants,
    SharpRegression,
    SvmProblem,
    SyntheticHolder,
    estimate_constants,
    make_logsumexp,
    make_sharp_regression,
    make_synthetic_svm,
)
from .parallel import ParallelConfig, parallel_run
from .prox import exact_prox_reference, prox_polyhedral, prox_two_cut, solve_prox

__version__ = "0.1.0"
