"""Synchronous parallel bundle method over a geometric ladder of stepsizes.

J instances run the constant-stepsize bundle method with rho_j = ratio**j * rho_bar.
After every round, each instance that just took a descent step and is
worse than the best center of the previous round restarts from that
center with a single-cut model.

Instances are stepped in index order and merged at a barrier, so traces
are bit-identical no matter how the per-instance work is scheduled.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .engine import (
    DESCENT,
    BundleConfig,
    BundleState,
    RunTrace,
    StepRecord,
    StepsizePolicy,
    bundle_step,
)
from .model import TWO_CUT, initial_model, oracle_cut
from .prox import ProxSolverError


@dataclass
class ParallelConfig:
    rho_bar: float
    J: int
    ratio: float = 2.0
    beta: float = 0.5
    max_iterations: int = 1000
    target_gap: float | None = None
    model_strategy: str = TWO_CUT
    capacity: int | None = None
    prox_tol: float = 1e-10
    f_star: float | None = None

    def __post_init__(self):
        if not self.rho_bar > 0:
            raise ValueError("rho_bar must be positive")
        if self.J < 1:
            raise ValueError("J must be a positive integer")
        if not self.ratio > 1:
            raise ValueError("ratio must exceed 1")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie strictly inside (0, 1)")

    @property
    def rhos(self):
        return [self.ratio ** j * self.rho_bar for j in range(self.J)]

    def instance_config(self, j):
        return BundleConfig(StepsizePolicy.constant(self.rhos[j]), beta=self.beta,
                            model_strategy=self.model_strategy, capacity=self.capacity,
                            max_iterations=self.max_iterations, prox_tol=self.prox_tol)


@dataclass
class ParallelState:
    instances: list
    descent: list
    k: int = 0
    best_index: int = 0
    adopted: list = field(default_factory=list)
    leader: int = 0

    @property
    def best_value(self):
        return min(s.fx for s in self.instances)


class InstanceError(RuntimeError):
    def __init__(self, instance_id, exc):
        super().__init__(f"instance {instance_id}: {exc}")
        self.instance_id = instance_id


def initial_parallel_state(oracle, config, x0):
    x0 = np.asarray(x0, dtype=float).copy()
    f0, g0 = oracle.evaluate(x0)
    cut = oracle_cut(x0, f0, g0)
    instances = [
        BundleState(x0.copy(), f0, g0, initial_model(cut, config.model_strategy, config.capacity), rho)
        for rho in config.rhos
    ]
    return ParallelState(instances, [True] * config.J, 0, 0, [False] * config.J, 0)


def _argmin_lowest(values):
    # np.argmin returns the first minimizer, i.e. the lowest index on ties
    return int(np.argmin(values))


def parallel_round(state, oracle, config):
    """One synchronous round; returns ``(new_state, outcomes)``.

    The best instance is chosen from the centers held before the round
    (index k), as written in the algorithm; ties go to the lowest index.
    The oracle information at that center is already cached on its
    instance, so adoption costs no extra oracle call.
    """
    before = state.instances
    j_star = _argmin_lowest([s.fx for s in before])
    best = before[j_star]
    new_instances, outcomes, descent = [], [], []
    for j, inst in enumerate(before):
        try:
            new, out = bundle_step(inst, oracle, config.instance_config(j))
        except ProxSolverError as exc:
            raise InstanceError(j, exc) from exc
        new_instances.append(new)
        outcomes.append(out)
        descent.append(out.step_type == DESCENT)

    adopted = [False] * config.J
    for j, new in enumerate(new_instances):
        if descent[j] and best.fx < new.fx:
            model = initial_model(oracle_cut(best.x, best.fx, best.gx),
                                  config.model_strategy, config.capacity)
            new_instances[j] = BundleState(best.x.copy(), best.fx, best.gx, model, new.rho, new.k)
            adopted[j] = True

    # leader: the instance whose own step produced the new best value
    prev_best = min(s.fx for s in before)
    leader = state.leader
    own = [o.fz if o.step_type == DESCENT else np.inf for o in outcomes]
    if min(own) < prev_best:
        leader = _argmin_lowest(own)
    return ParallelState(new_instances, descent, state.k + 1, j_star, adopted, leader), outcomes


def parallel_run(oracle, config, x0):
    """Run rounds until the best center is target-accurate or the budget ends.

    Returns ``(instance_traces, best_trace)``. The best trace has one record
    per round with the best value so far, the stepsize of the leading
    instance and the total oracle calls of all instances.
    """
    t0 = time.perf_counter()
    f_star = config.f_star if config.f_star is not None else oracle.constants.f_star
    calls0 = oracle.calls
    state = initial_parallel_state(oracle, config, x0)
    f0 = state.instances[0].fx
    traces = []
    for j, rho in enumerate(config.rhos):
        tr = RunTrace(f"parallel[{j}]:rho={rho:g}", f0, f_star, instance_id=j, setup_calls=1)
        tr.meta.update(rho=rho)
        traces.append(tr)
    best = RunTrace(f"parallel:J={config.J},ratio={config.ratio:g},rho_bar={config.rho_bar:g}",
                    f0, f_star, setup_calls=1)
    best.meta.update(J=config.J, ratio=config.ratio, rho_bar=config.rho_bar, beta=config.beta)
    best.meta["leaders"] = []

    status = "max-iterations"
    if f_star is not None and config.target_gap is not None and f0 - f_star <= config.target_gap:
        status = "target"
    else:
        best_f = f0
        for _ in range(config.max_iterations):
            try:
                state, outcomes = parallel_round(state, oracle, config)
            except InstanceError as exc:
                status = f"solver-error: {exc}"
                break
            # the shared evaluation at x0 is reported separately as setup_calls
            calls = oracle.calls - calls0 - 1
            for j, (inst, out) in enumerate(zip(state.instances, outcomes)):
                gap = None if f_star is None else inst.fx - f_star
                traces[j].records.append(StepRecord(
                    state.k, out.step_type, inst.fx, gap, out.rho, state.k,
                    float(np.linalg.norm(out.prox.aggregate_subgradient)),
                    float(np.linalg.norm(out.gz)), adopted=state.adopted[j], leader=state.leader))
            best_f = min(best_f, state.best_value)
            gap = None if f_star is None else best_f - f_star
            best.records.append(StepRecord(
                state.k, DESCENT if any(state.descent) else "null", best_f, gap,
                config.rhos[state.leader], calls, 0.0, leader=state.leader,
                adopted=any(state.adopted)))
            best.meta["leaders"].append(state.leader)
            if gap is not None and config.target_gap is not None and gap <= config.target_gap:
                status = "target"
                break
    elapsed = time.perf_counter() - t0
    j_best = _argmin_lowest([s.fx for s in state.instances])
    for tr, inst in zip(traces, state.instances):
        tr.status = status
        tr.x_final = inst.x
        tr.wall_time = elapsed
    best.status = status
    best.x_final = state.instances[j_best].x
    best.wall_time = elapsed
    best.meta["rounds"] = state.k
    best.meta["adoption_calls"] = 0
    return traces, best


def ladder_parameters(mu, p, eps, gap0):
    """Largest rho_bar and smallest integer J satisfying the rate theorem's hypotheses."""
    e = 1.0 - 2.0 / p
    rho_bar = 0.25 * mu ** (2.0 / p) * min(eps ** e, gap0 ** e)
    J = max(1, math.ceil(math.log2(mu ** (2.0 / p) * max(eps ** e, gap0 ** e) / (4.0 * rho_bar))))
    return rho_bar, J
