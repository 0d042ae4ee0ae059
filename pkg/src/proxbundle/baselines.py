"""First-order baselines: full-batch Pegasos, gradient descent and Nesterov AGD.

Each method makes exactly one counted oracle call per iteration. Objective
values written to the trace are monitored with the uncounted
``Oracle.value`` so oracle-call axes line up with the bundle runs.
"""

import time
from dataclasses import dataclass

import numpy as np

from .engine import RunTrace, StepRecord

PEGASOS = "pegasos"
GD = "gd"
AGD = "agd"
STEP = "step"


@dataclass(frozen=True)
class BaselineConfig:
    method: str
    iterations: int
    step: float | None = None
    lam: float | None = None

    def __post_init__(self):
        if self.method not in (PEGASOS, GD, AGD):
            raise ValueError(f"unknown baseline {self.method!r}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.method == PEGASOS:
            if self.lam is not None and not self.lam > 0:
                raise ValueError("lambda must be positive")
        elif self.step is None or self.step < 0:
            raise ValueError("gradient methods need a nonnegative step")


def _new_trace(method, problem, x0, f_star):
    if f_star is None:
        f_star = problem.constants.f_star
    return RunTrace(method, problem.value(x0), f_star, setup_calls=0)


def _record(trace, k, x, problem, calls0, rho, g_norm):
    fx = problem.value(x)
    gap = None if trace.f_star is None else fx - trace.f_star
    trace.records.append(StepRecord(k, STEP, fx, gap, rho, problem.calls - calls0, 0.0, g_norm))


def pegasos_run(problem, iterations, w0=None, f_star=None):
    """Deterministic Pegasos: w <- w - (1/(lam k)) g(w) with the full hinge subgradient.

    g(w) = lam w - (1/n) sum_{y_i <w, x_i> < 1} y_i x_i, which is the same as
    w <- (1 - eta lam) w + eta (1/n) sum_active y_i x_i.
    """
    lam = problem.lam
    if not lam > 0:
        raise ValueError("lambda must be positive")
    w = np.zeros(problem.dimension) if w0 is None else np.array(w0, dtype=float)
    t0 = time.perf_counter()
    calls0 = problem.calls
    trace = _new_trace(f"pegasos:lam={lam:g}", problem, w, f_star)
    for k in range(1, iterations + 1):
        eta = 1.0 / (lam * k)
        _, g = problem.evaluate(w)
        w = w - eta * g
        _record(trace, k, w, problem, calls0, 1.0 / eta, float(np.linalg.norm(g)))
    trace.status = "max-iterations"
    trace.x_final = w
    trace.wall_time = time.perf_counter() - t0
    trace.meta.update(lam=lam)
    return trace


def gd_run(problem, step, iterations, x0=None, f_star=None):
    """Gradient descent with a fixed step."""
    x = np.zeros(problem.dimension) if x0 is None else np.array(x0, dtype=float)
    t0 = time.perf_counter()
    calls0 = problem.calls
    trace = _new_trace(f"gd:step={step:g}", problem, x, f_star)
    for k in range(1, iterations + 1):
        _, g = problem.evaluate(x)
        x = x - step * g
        _record(trace, k, x, problem, calls0, step, float(np.linalg.norm(g)))
    trace.status = "max-iterations"
    trace.x_final = x
    trace.wall_time = time.perf_counter() - t0
    trace.meta.update(step=step)
    return trace


def agd_run(problem, step, iterations, x0=None, f_star=None):
    """Nesterov's accelerated gradient method, t_1 = 1, gradients taken at the extrapolated point."""
    x = np.zeros(problem.dimension) if x0 is None else np.array(x0, dtype=float)
    y = x.copy()
    t = 1.0
    t0 = time.perf_counter()
    calls0 = problem.calls
    trace = _new_trace(f"agd:step={step:g}", problem, x, f_star)
    for k in range(1, iterations + 1):
        _, g = problem.evaluate(y)
        x_new = y - step * g
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, t = x_new, t_new
        _record(trace, k, x, problem, calls0, step, float(np.linalg.norm(g)))
    trace.status = "max-iterations"
    trace.x_final = x
    trace.wall_time = time.perf_counter() - t0
    trace.meta.update(step=step)
    return trace


def run_baseline(problem, config, x0=None, f_star=None):
    if config.method == PEGASOS:
        if config.lam is not None and config.lam != problem.lam:
            problem = problem.with_lambda(config.lam)
        return pegasos_run(problem, config.iterations, x0, f_star)
    if config.method == GD:
        return gd_run(problem, config.step, config.iterations, x0, f_star)
    return agd_run(problem, config.step, config.iterations, x0, f_star)
