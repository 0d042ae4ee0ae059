"""Serial proximal bundle method with pluggable stepsize policies."""

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .model import TWO_CUT, initial_model, oracle_cut, update_after_descent, update_after_null
from .prox import ProxSolverError, solve_prox

DESCENT = "descent"
NULL = "null"

CONSTANT = "constant"
IDEAL = "ideal"
OPT_GENERAL = "opt_general"
OPT_HOLDER = "opt_holder"

CSV_COLUMNS = ("k", "step_type", "f", "gap", "rho", "oracle_calls", "agg_norm")


@dataclass(frozen=True)
class StepsizePolicy:
    """How rho_k is chosen; it is recomputed only after descent steps.

    Use the constructors :meth:`constant`, :meth:`ideal`,
    :meth:`opt_general` and :meth:`opt_holder`. The three adaptive rules need
    the optimal value and refuse to be built without it.
    """

    kind: str
    rho: float | None = None
    f_star: float | None = None
    x_star: np.ndarray | None = field(default=None, repr=False)
    D_sq: float | None = None
    mu: float | None = None
    p: float | None = None

    @classmethod
    def constant(cls, rho):
        if not rho > 0:
            raise ValueError("constant stepsize must be positive")
        return cls(CONSTANT, rho=float(rho))

    @classmethod
    def ideal(cls, f_star, x_star=None):
        if f_star is None:
            raise ValueError("the ideal stepsize needs f*")
        xs = None if x_star is None else np.asarray(x_star, dtype=float)
        return cls(IDEAL, f_star=float(f_star), x_star=xs)

    @classmethod
    def opt_general(cls, D_sq, f_star):
        if f_star is None or D_sq is None or not D_sq > 0:
            raise ValueError("opt_general needs f* and D^2 > 0")
        return cls(OPT_GENERAL, f_star=float(f_star), D_sq=float(D_sq))

    @classmethod
    def opt_holder(cls, mu, p, f_star):
        if f_star is None or mu is None or p is None or not mu > 0 or p < 1:
            raise ValueError("opt_holder needs f*, mu > 0 and p >= 1")
        return cls(OPT_HOLDER, f_star=float(f_star), mu=float(mu), p=float(p))

    @property
    def adaptive(self):
        return self.kind != CONSTANT

    def describe(self):
        if self.kind == CONSTANT:
            return f"constant(rho={self.rho:g})"
        if self.kind == OPT_GENERAL:
            return f"opt_general(D_sq={self.D_sq:g})"
        if self.kind == OPT_HOLDER:
            return f"opt_holder(mu={self.mu:g},p={self.p:g})"
        return self.kind


def compute_rho(policy, x_k, f_xk, distance=None):
    """Stepsize for the current center ``x_k`` with value ``f_xk``.

    ``distance`` gives dist(x_k, X*) for the ideal rule when the policy does
    not carry a minimizer itself.
    """
    if policy.kind == CONSTANT:
        return policy.rho
    gap = f_xk - policy.f_star
    if not gap > 0:
        raise ValueError("adaptive stepsizes need f(x_k) > f*")
    if policy.kind == IDEAL:
        if policy.x_star is not None:
            dist = float(np.linalg.norm(np.asarray(x_k) - policy.x_star))
        elif distance is not None:
            dist = float(distance)
        else:
            raise ValueError("the ideal stepsize needs dist(x_k, X*)")
        rho = gap / dist ** 2
    elif policy.kind == OPT_GENERAL:
        rho = gap / policy.D_sq
    elif policy.kind == OPT_HOLDER:
        rho = policy.mu ** (2.0 / policy.p) * gap ** (1.0 - 2.0 / policy.p)
    else:
        raise ValueError(f"unknown policy {policy.kind!r}")
    if not (rho > 0 and np.isfinite(rho)):
        raise RuntimeError(f"stepsize rule produced {rho}")
    return float(rho)


def theoretical_D_sq(dist0_sq, gap0, beta, rho):
    """Bound on sup_k dist(x_k, X*)^2 for a constant-stepsize run."""
    return dist0_sq + 2.0 * (1.0 - beta) * gap0 / (beta * rho)


@dataclass
class BundleConfig:
    policy: StepsizePolicy
    beta: float = 0.5
    model_strategy: str = TWO_CUT
    capacity: int | None = None
    max_iterations: int = 1000
    target_gap: float | None = None
    stop_on_aggregate_norm: float | None = None
    prox_tol: float = 1e-10
    f_star: float | None = None  # used for gap reporting; defaults to the oracle's

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie strictly inside (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class BundleState:
    x: np.ndarray
    fx: float
    gx: np.ndarray
    model: object
    rho: float
    k: int = 0


@dataclass
class StepOutcome:
    step_type: str
    prox: object
    z: np.ndarray
    fz: float
    gz: np.ndarray
    predicted_decrease: float
    actual_decrease: float
    rho: float

    @property
    def is_descent(self):
        return self.step_type == DESCENT


@dataclass
class StepRecord:
    k: int
    step_type: str
    f: float
    gap: float | None
    rho: float
    oracle_calls: int
    agg_norm: float
    g_norm: float = 0.0
    adopted: bool = False
    leader: int | None = None


@dataclass
class RunTrace:
    """Per-iteration history of one solver run.

    ``f`` in each record is the center value f(x_k) after step k, so it is
    nonincreasing for the bundle method. The initial point is summarized by
    ``f0`` and the first oracle call it cost.
    """

    method: str
    f0: float
    f_star: float | None = None
    records: list = field(default_factory=list)
    status: str = "running"
    wall_time: float = 0.0
    x_final: np.ndarray | None = None
    instance_id: int | None = None
    setup_calls: int = 1
    extra_calls: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    @property
    def gap0(self):
        return None if self.f_star is None else self.f0 - self.f_star

    @property
    def descent_count(self):
        return sum(r.step_type == DESCENT for r in self.records)

    @property
    def null_count(self):
        return sum(r.step_type == NULL for r in self.records)

    @property
    def f_values(self):
        return np.array([r.f for r in self.records])

    @property
    def gaps(self):
        return np.array([np.nan if r.gap is None else r.gap for r in self.records])

    @property
    def best_gaps(self):
        """Running minimum of the gap, with the initial gap prepended."""
        g = np.concatenate([[self.gap0 if self.gap0 is not None else np.nan], self.gaps])
        return np.minimum.accumulate(g)

    @property
    def best_gap(self):
        if self.f_star is None:
            return None
        return float(min([self.gap0] + [r.gap for r in self.records]))

    @property
    def oracle_calls(self):
        """Calls made by the iterations; the initial evaluation is in ``setup_calls``."""
        return self.records[-1].oracle_calls if self.records else 0

    @property
    def max_g_norm(self):
        return max((r.g_norm for r in self.records), default=0.0)

    def steps_to_reach(self, eps):
        """(descent steps, null steps, reached) up to the first eps-minimizer."""
        if self.f_star is None:
            raise ValueError("f* unknown")
        d = n = 0
        if self.gap0 <= eps:
            return 0, 0, True
        for r in self.records:
            if r.step_type == DESCENT:
                d += 1
            else:
                n += 1
            if r.gap <= eps:
                return d, n, True
        return d, n, False

    def summary(self):
        return {
            "method": self.method,
            "instance_id": self.instance_id,
            "status": self.status,
            "iterations": len(self.records),
            "descent_count": self.descent_count,
            "null_count": self.null_count,
            "f0": self.f0,
            "f_star": self.f_star,
            "final_f": self.records[-1].f if self.records else self.f0,
            "best_gap": self.best_gap,
            "oracle_calls": self.oracle_calls,
            "setup_calls": self.setup_calls,
            "total_oracle_calls": self.oracle_calls + self.setup_calls + self.extra_calls,
            "extra_calls": self.extra_calls,
            "wall_time": self.wall_time,
            **self.meta,
        }

    def write_csv(self, path, parallel_columns=False):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            cols = list(CSV_COLUMNS)
            if parallel_columns:
                cols += ["instance_id", "adopted", "leader_instance"]
            w.writerow(cols)
            for r in self.records:
                row = [r.k, r.step_type, _fmt(r.f), _fmt(r.gap), _fmt(r.rho),
                       r.oracle_calls, _fmt(r.agg_norm)]
                if parallel_columns:
                    row += [self.instance_id, int(r.adopted), "" if r.leader is None else r.leader]
                w.writerow(row)

    def write_summary(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)


def _fmt(v):
    return "" if v is None else repr(float(v))


def _distance_fn(oracle, policy):
    if policy.kind == IDEAL and policy.x_star is None:
        return oracle.distance_to_solution
    return None


def initial_state(oracle, config, x0):
    x0 = np.asarray(x0, dtype=float).copy()
    f0, g0 = oracle.evaluate(x0)
    model = initial_model(oracle_cut(x0, f0, g0), config.model_strategy, config.capacity)
    dist = _distance_fn(oracle, config.policy)
    rho = compute_rho(config.policy, x0, f0, None if dist is None else dist(x0))
    return BundleState(x0, f0, g0, model, rho, 0)


def bundle_step(state, oracle, config):
    """One iteration: prox step on the model, one oracle call, descent/null test."""
    prox = solve_prox(state.model, state.x, state.rho, tol=config.prox_tol)
    z = prox.z_next
    fz, gz = oracle.evaluate(z)
    cut = oracle_cut(z, fz, gz)
    predicted = state.fx - prox.model_value_at_z
    actual = state.fx - fz
    if config.beta * predicted <= actual:
        model = update_after_descent(state.model, cut, prox)
        rho = state.rho
        if config.policy.adaptive:
            if fz - config.policy.f_star > 0:
                dist = _distance_fn(oracle, config.policy)
                rho = compute_rho(config.policy, z, fz, None if dist is None else dist(z))
        new = BundleState(z.copy(), fz, gz, model, rho, state.k + 1)
        step_type = DESCENT
    else:
        model = update_after_null(state.model, prox, cut)
        new = BundleState(state.x, state.fx, state.gx, model, state.rho, state.k + 1)
        step_type = NULL
    return new, StepOutcome(step_type, prox, z, fz, gz, predicted, actual, state.rho)


def _f_star_for(oracle, config):
    if config.f_star is not None:
        return config.f_star
    if config.policy.f_star is not None:
        return config.policy.f_star
    return oracle.constants.f_star


def run(oracle, config, x0, callback=None, method=None):
    """Run the bundle method from ``x0``; returns the :class:`RunTrace`.

    Stops after ``max_iterations`` steps, once the gap is at most
    ``target_gap`` (when f* is known), once the aggregate subgradient norm
    drops below ``stop_on_aggregate_norm``, or when an adaptive rule hits
    f(x_k) = f*. ``callback(before, outcome, after)`` sees every step.
    """
    t0 = time.perf_counter()
    f_star = _f_star_for(oracle, config)
    calls0 = oracle.calls
    state = initial_state(oracle, config, x0)
    trace = RunTrace(method or f"bundle:{config.policy.describe()}", state.fx, f_star)
    trace.meta.update(beta=config.beta, model=config.model_strategy, rho0=state.rho)

    if f_star is not None and config.target_gap is not None and state.fx - f_star <= config.target_gap:
        trace.status = "target"
    else:
        for _ in range(config.max_iterations):
            try:
                new, out = bundle_step(state, oracle, config)
            except ProxSolverError as exc:
                trace.status = f"solver-error: {exc}"
                break
            gap = None if f_star is None else new.fx - f_star
            agg_norm = float(np.linalg.norm(out.prox.aggregate_subgradient))
            trace.records.append(StepRecord(
                new.k, out.step_type, new.fx, gap, out.rho, oracle.calls - calls0 - 1,
                agg_norm, float(np.linalg.norm(out.gz))))
            if callback is not None:
                callback(state, out, new)
            state = new
            if gap is not None and config.target_gap is not None and gap <= config.target_gap:
                trace.status = "target"
                break
            if config.stop_on_aggregate_norm is not None and agg_norm <= config.stop_on_aggregate_norm:
                trace.status = "aggregate-norm"
                break
            if config.policy.adaptive and not state.fx - config.policy.f_star > 0:
                trace.status = "optimal"
                break
        else:
            trace.status = "max-iterations"
    trace.x_final = state.x
    trace.wall_time = time.perf_counter() - t0
    return trace
