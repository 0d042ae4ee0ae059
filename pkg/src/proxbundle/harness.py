"""Experiment runner: JSON configs in, CSV traces and a summary JSON out.

A config looks like::

    {
      "name": "sharp-regression",
      "seed": 0,
      "problem": {"family": "sharp_regression", "n": 100, "d": 50},
      "x0": "gaussian",
      "solvers": [
        {"name": "ideal", "type": "bundle", "policy": {"kind": "ideal"}, "iterations": 150},
        {"name": "parallel", "type": "parallel", "rho_bar": 1.0, "J": 9, "ratio": 10,
         "iterations": 150}
      ]
    }

Problem families: ``sharp_regression`` (n, d), ``holder`` (mu, p, d),
``logsumexp`` (d, n, gamma), ``svm`` (dataset or synthetic n, d; lam).

Solver types: ``bundle`` with a ``policy`` of kind constant (rho), ideal,
opt_general (D_sq, or derived from the constant-step distance bound),
opt_holder (mu and p, defaulting to the problem's, optional
``mu_scale``); ``parallel`` (rho_bar, J, ratio); ``pegasos``; ``gd`` and
``agd`` with ``step`` or ``step_scale`` times 1/L.

An ``svm`` problem may carry ``"lambdas": [...]``; every solver is then run
once per lambda against a reference optimal value.
"""

import copy
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import theory
from .baselines import agd_run, gd_run, pegasos_run
from .datasets import find_dataset, load_svm_problem
from .engine import (
    CONSTANT,
    IDEAL,
    OPT_GENERAL,
    OPT_HOLDER,
    BundleConfig,
    StepsizePolicy,
    run,
    theoretical_D_sq,
)
from .model import FULL_MEMORY, TWO_CUT
from .oracle import (
    LogSumExp,
    SharpRegression,
    SvmProblem,
    SyntheticHolder,
    make_logsumexp,
    make_sharp_regression,
    make_synthetic_svm,
)
from .parallel import ParallelConfig, parallel_run
from .rng import stream

OUTPUT_ENV = "PROXBUNDLE_OUTPUT"
DEFAULT_BETA = 0.5


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    name: str
    problem: dict
    solvers: list
    seed: int = 0
    x0: object = None
    beta: float = DEFAULT_BETA
    eps: list = field(default_factory=lambda: [1e-2, 1e-4, 1e-6])
    workers: int = 1

    def __post_init__(self):
        if not self.solvers:
            raise ConfigError("an experiment needs at least one solver")
        if "family" not in self.problem:
            raise ConfigError("problem needs a 'family'")
        names = [s.get("name") for s in self.solvers]
        if None in names or len(set(names)) != len(names):
            raise ConfigError("every solver needs a unique 'name'")
        for s in self.solvers:
            if s.get("type") not in SOLVER_TYPES:
                raise ConfigError(f"solver {s['name']!r}: unknown type {s.get('type')!r}")
            budget = s.get("iterations", 1)
            if not isinstance(budget, int) or budget < 1:
                raise ConfigError(f"solver {s['name']!r}: iterations must be a positive integer")

    @classmethod
    def from_dict(cls, d):
        d = copy.deepcopy(d)
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self):
        return {"name": self.name, "problem": self.problem, "solvers": self.solvers,
                "seed": self.seed, "x0": self.x0, "beta": self.beta, "eps": self.eps,
                "workers": self.workers}


# -- built-in experiments ----------------------------------------------------

BUILTIN_EXPERIMENTS = {
    "sharp-regression": {
        "name": "sharp-regression",
        "problem": {"family": "sharp_regression", "n": 100, "d": 50},
        "x0": "gaussian",
        "solvers": [
            {"name": "ideal", "type": "bundle", "policy": {"kind": "ideal"}, "iterations": 150},
            {"name": "opt_holder", "type": "bundle", "policy": {"kind": "opt_holder"},
             "iterations": 150},
            {"name": "parallel", "type": "parallel", "rho_bar": 1.0, "J": 9, "ratio": 10.0,
             "iterations": 150},
        ],
    },
    "misspecification": {
        "name": "misspecification",
        "problem": {"family": "sharp_regression", "n": 100, "d": 50},
        "x0": "gaussian",
        "solvers": [
            {"name": "ideal", "type": "bundle", "policy": {"kind": "ideal"}, "iterations": 150},
            {"name": "opt_holder", "type": "bundle", "policy": {"kind": "opt_holder"},
             "iterations": 150},
            {"name": "opt_holder_mu_third", "type": "bundle",
             "policy": {"kind": "opt_holder", "mu_scale": 1 / 3}, "iterations": 150},
            {"name": "opt_holder_mu_triple", "type": "bundle",
             "policy": {"kind": "opt_holder", "mu_scale": 3.0}, "iterations": 150},
        ],
    },
    "svm-sweep": {
        "name": "svm-sweep",
        "problem": {"family": "svm", "dataset": "synthetic", "n": 80, "d": 20,
                    "lambdas": [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 2.0]},
        "x0": "zeros",
        "solvers": [
            {"name": "parallel", "type": "parallel", "rho_bar": 1e-9, "J": 3, "ratio": 1e4,
             "iterations": 2000},
            {"name": "pegasos", "type": "pegasos", "iterations": 6000},
        ],
    },
    "logsumexp": {
        "name": "logsumexp",
        "problem": {"family": "logsumexp", "d": 100, "n": 600, "gamma": 0.05},
        "x0": "gaussian",
        "solvers": [
            {"name": "parallel", "type": "parallel", "rho_bar": 1e-3, "J": 4, "ratio": 10.0,
             "iterations": 500},
            {"name": "gd", "type": "gd", "step_scale": 0.9, "iterations": 2000},
            {"name": "agd", "type": "agd", "step_scale": 0.9, "iterations": 2000},
        ],
    },
    "holder-bounds": {
        "name": "holder-bounds",
        "problem": {"family": "holder", "mu": 1.0, "p": 1.0, "d": 5},
        "x0": "ones",
        "eps": [1e-2, 1e-4, 1e-6],
        "solvers": [
            {"name": "constant_rho1", "type": "bundle", "policy": {"kind": "constant", "rho": 1.0},
             "iterations": 3000},
            {"name": "opt_holder", "type": "bundle", "policy": {"kind": "opt_holder"},
             "iterations": 3000},
            {"name": "opt_general", "type": "bundle", "policy": {"kind": "opt_general"},
             "iterations": 3000},
        ],
    },
}


def load_experiment(source, seed=None):
    """Build an :class:`ExperimentSpec` from a built-in name, a JSON file or a dict."""
    if isinstance(source, dict):
        d = source
    elif source in BUILTIN_EXPERIMENTS:
        d = BUILTIN_EXPERIMENTS[source]
    else:
        path = Path(source)
        if not path.exists():
            raise ConfigError(f"no built-in experiment or config file named {source!r}")
        try:
            d = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    spec = ExperimentSpec.from_dict(d)
    if seed is not None:
        spec.seed = int(seed)
    return spec


# -- problems ------------------------------------------------------------------

def build_problem(problem, seed=0, lam=None):
    family = problem.get("family")
    try:
        if family == "sharp_regression":
            return make_sharp_regression(int(problem.get("n", 100)), int(problem.get("d", 50)), seed)
        if family == "holder":
            return SyntheticHolder(float(problem.get("mu", 1.0)), float(problem.get("p", 1.0)),
                                   int(problem.get("d", 1)))
        if family == "logsumexp":
            return make_logsumexp(int(problem.get("d", 100)), int(problem.get("n", 600)),
                                  float(problem.get("gamma", 0.05)), seed)
        if family == "svm":
            lam = float(problem.get("lam", 0.1) if lam is None else lam)
            name = problem.get("dataset", "synthetic")
            if name != "synthetic" and find_dataset(name) is not None:
                return load_svm_problem(name, lam)
            return make_synthetic_svm(int(problem.get("n", 80)), int(problem.get("d", 20)), seed, lam)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {family!r} problem: {exc}") from exc
    raise ConfigError(f"unknown problem family {family!r}")


def initial_point(problem, x0, seed):
    d = problem.dimension
    if x0 is None:
        # 0 minimizes the shifted log-sum-exp, so it would be a vacuous start
        x0 = "gaussian" if isinstance(problem, (SharpRegression, LogSumExp)) else "zeros"
    if isinstance(x0, str):
        if x0 == "zeros":
            return np.zeros(d)
        if x0 == "ones":
            return np.ones(d)
        if x0 == "gaussian":
            return stream(seed, "x0").standard_normal(d)
        raise ConfigError(f"unknown x0 rule {x0!r}")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (d,):
        raise ConfigError(f"x0 must have length {d}")
    return x0


def reference_solve(problem, rho=None, max_iterations=5000, capacity=50, tol=1e-10, x0=None):
    """Reference optimal value ``(f_star, certified)``.

    Families with a known optimal value return it directly. Otherwise a
    full-memory bundle run stops once the aggregate subgradient norm drops
    below ``tol``; if the budget runs out first the best value found is
    returned with ``certified=False``.
    """
    if problem.constants.f_star is not None:
        return float(problem.constants.f_star), True
    if rho is None:
        rho = getattr(problem, "lam", 1.0)
    x0 = np.zeros(problem.dimension) if x0 is None else x0
    cfg = BundleConfig(StepsizePolicy.constant(rho), model_strategy=FULL_MEMORY, capacity=capacity,
                       max_iterations=max_iterations, stop_on_aggregate_norm=tol)
    tr = run(problem, cfg, x0)
    best = min([tr.f0] + list(tr.f_values))
    return float(best), tr.status == "aggregate-norm"


# -- solvers -------------------------------------------------------------------

def _holder_constants(problem):
    c = problem.constants
    if c.growth_mu is None:
        raise ConfigError("opt_holder needs a growth modulus; give 'mu' and 'p'")
    return c.growth_mu, c.growth_p


def _policy(entry, problem, x0, f_star, beta):
    pol = entry.get("policy", {})
    kind = pol.get("kind", CONSTANT)
    if kind == CONSTANT:
        return StepsizePolicy.constant(float(pol.get("rho", 1.0)))
    if f_star is None:
        raise ConfigError(f"policy {kind!r} needs a known optimal value")
    if kind == IDEAL:
        return StepsizePolicy.ideal(f_star, problem.x_star)
    if kind == OPT_HOLDER:
        mu, p = pol.get("mu"), pol.get("p")
        if mu is None or p is None:
            mu0, p0 = _holder_constants(problem)
            mu = mu0 if mu is None else mu
            p = p0 if p is None else p
        return StepsizePolicy.opt_holder(float(mu) * float(pol.get("mu_scale", 1.0)), float(p), f_star)
    if kind == OPT_GENERAL:
        D_sq = pol.get("D_sq")
        if D_sq is None:
            D_sq = level_set_D_sq(problem, x0)
        return StepsizePolicy.opt_general(float(D_sq), f_star)
    raise ConfigError(f"unknown policy kind {kind!r}")


def level_set_D_sq(problem, x0):
    """sup of dist(x, X*)^2 over the initial level set, for problems where it is known."""
    if isinstance(problem, SyntheticHolder):
        return (problem.value(x0) / problem.mu) ** (2.0 / problem.p)
    if isinstance(problem, SharpRegression) and problem.sigma_min > 0:
        return (problem.value(x0) / problem.sigma_min) ** 2
    raise ConfigError("D_sq is not known for this problem; set it in the policy")


def _smoothness(problem):
    L = problem.constants.smooth_L
    if L is None:
        raise ConfigError("gradient methods need a smoothness constant or an explicit 'step'")
    return L


def run_solver(entry, problem, x0, f_star, beta):
    """Run one solver entry; returns a list of ``(suffix, trace, parallel_columns)``."""
    kind = entry["type"]
    iters = int(entry.get("iterations", 1000))
    beta = float(entry.get("beta", beta))
    model = entry.get("model", TWO_CUT)
    if kind == "bundle":
        cfg = BundleConfig(_policy(entry, problem, x0, f_star, beta), beta=beta, model_strategy=model,
                           capacity=entry.get("capacity"), max_iterations=iters,
                           target_gap=entry.get("target_gap"), f_star=f_star,
                           stop_on_aggregate_norm=entry.get("stop_on_aggregate_norm"))
        tr = run(problem, cfg, x0)
        return [("", tr, False)]
    if kind == "parallel":
        cfg = ParallelConfig(float(entry["rho_bar"]), int(entry["J"]), float(entry.get("ratio", 2.0)),
                             beta=beta, max_iterations=iters, target_gap=entry.get("target_gap"),
                             model_strategy=model, capacity=entry.get("capacity"), f_star=f_star)
        traces, best = parallel_run(problem, cfg, x0)
        out = [("", best, True)]
        if entry.get("instance_traces", False):
            out += [(f"_instance{j}", t, True) for j, t in enumerate(traces)]
        return out
    if kind == "pegasos":
        if not isinstance(problem, SvmProblem):
            raise ConfigError("pegasos runs on SVM problems only")
        return [("", pegasos_run(problem, iters, x0, f_star), False)]
    if kind in ("gd", "agd"):
        step = entry.get("step")
        if step is None:
            step = float(entry.get("step_scale", 0.9)) / _smoothness(problem)
        fn = gd_run if kind == "gd" else agd_run
        return [("", fn(problem, float(step), iters, x0, f_star), False)]
    raise ConfigError(f"unknown solver type {kind!r}")


SOLVER_TYPES = ("bundle", "parallel", "pegasos", "gd", "agd")


def _solver_problem(spec, lam):
    # every solver gets its own oracle so call counters never mix
    return build_problem(spec.problem, spec.seed, lam)


def _run_entry(spec, entry, lam, f_star, out_dir, tag):
    problem = _solver_problem(spec, lam)
    x0 = initial_point(problem, spec.x0, spec.seed)
    try:
        results = run_solver(entry, problem, x0, f_star, spec.beta)
    except Exception as exc:  # one failing solver must not stop the others
        return [{"solver": entry["name"], "lam": lam, "status": f"error: {exc}"}]
    rows = []
    for suffix, tr, par in results:
        fname = f"{entry['name']}{tag}{suffix}.csv"
        tr.write_csv(out_dir / fname, parallel_columns=par)
        s = tr.summary()
        s.update(solver=entry["name"] + suffix, lam=lam, csv=fname)
        rows.append(s)
    return rows


def output_root(override=None):
    return Path(override or os.environ.get(OUTPUT_ENV, "runs"))


def run_experiment(spec, out_root=None):
    """Run every solver of ``spec``; returns the summary dict (also written to disk)."""
    out_dir = output_root(out_root) / spec.name
    out_dir.mkdir(parents=True, exist_ok=True)
    lambdas = spec.problem.get("lambdas") if spec.problem["family"] == "svm" else None
    jobs = []
    references = {}
    for lam in (lambdas or [None]):
        base = _solver_problem(spec, lam)
        x0 = initial_point(base, spec.x0, spec.seed)
        f_star, certified = reference_solve(base, x0=x0)
        key = "default" if lam is None else repr(float(lam))
        references[key] = {"f_star": f_star, "certified": certified}
        tag = "" if lam is None else f"_lam{lam:g}"
        for entry in spec.solvers:
            jobs.append((entry, lam, f_star, tag))

    if spec.workers > 1:
        with ThreadPoolExecutor(spec.workers) as pool:
            parts = list(pool.map(lambda j: _run_entry(spec, j[0], j[1], j[2], out_dir, j[3]), jobs))
    else:
        parts = [_run_entry(spec, *j[:3], out_dir, j[3]) for j in jobs]

    summary = {
        "experiment": spec.name,
        "config": spec.to_dict(),
        "defaults": {"beta": spec.beta, "x0": spec.x0 or "family default"},
        "reference": references,
        "solvers": [r for rows in parts for r in rows],
    }
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)
    return summary


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o).__name__)


# -- bound verification ----------------------------------------------------------

PASS, FAIL, SKIP = "PASS", "FAIL", "SKIP"


@dataclass
class BoundCheck:
    solver: str
    regime: str
    eps: float
    status: str
    detail: str

    def line(self):
        return f"{self.status} {self.regime} solver={self.solver} eps={self.eps:g} {self.detail}"


def lipschitz_on_level_set(problem, x0, trace):
    """Subgradient bound for the run: analytic level-set value, raised to the largest norm observed.

    Candidate points of null steps can leave the initial level set, so the
    observed maximum is included to keep the bound valid along the run.
    """
    g0 = float(np.linalg.norm(problem.evaluate(x0)[1]))
    observed = max(trace.max_g_norm, g0)
    c = problem.constants
    analytic = c.lipschitz_M
    if analytic is None and isinstance(problem, SyntheticHolder):
        radius = (problem.value(x0) / problem.mu) ** (1.0 / problem.p)
        analytic = problem.lipschitz_on_ball(radius)
    if analytic is None:
        return observed
    return max(analytic, observed)


def _regimes_for(entry, problem, policy_kind):
    c = problem.constants
    if entry["type"] == "parallel":
        return [theory.PARALLEL] if c.growth_mu is not None else []
    if policy_kind == CONSTANT:
        out = []
        if c.growth_mu is not None:
            out.append(theory.LIPSCHITZ_GROWTH)
            if c.smooth_L is not None and c.growth_p >= 2:
                out.append(theory.SMOOTH_GROWTH)
        if problem.x_star is not None:
            out.append(theory.LIPSCHITZ)
            if c.smooth_L is not None:
                out.append(theory.SMOOTH)
        return out
    if policy_kind == OPT_HOLDER:
        return [theory.OPT_HOLDER]
    if policy_kind == OPT_GENERAL:
        return [theory.OPT_GENERAL]
    return []


def check_trace_bounds(entry, problem, x0, trace, eps_list, beta, policy=None):
    """Compare the observed step counts of ``trace`` against every applicable ceiling."""
    checks = []
    kind = policy.kind if policy is not None else None
    regimes = _regimes_for(entry, problem, kind)
    if not regimes:
        return [BoundCheck(entry["name"], "none", float("nan"), SKIP,
                           "no known constants for this solver/problem")]
    c = problem.constants
    gap0 = trace.gap0
    M = lipschitz_on_level_set(problem, x0, trace)
    for eps in eps_list:
        for regime in regimes:
            if gap0 is None or eps > gap0:
                checks.append(BoundCheck(entry["name"], regime, eps, SKIP, "eps exceeds initial gap"))
                continue
            kw = dict(beta=beta, eps=eps, gap0=gap0, M=M, L=c.smooth_L, mu=c.growth_mu, p=c.growth_p)
            if regime == theory.PARALLEL:
                kw.update(rho_bar=float(entry["rho_bar"]), J=int(entry["J"]))
            elif kind == CONSTANT:
                kw["rho"] = policy.rho
                dist0 = problem.distance_to_solution(x0)
                kw["D_sq"] = theoretical_D_sq(dist0 ** 2, gap0, beta, policy.rho)
            elif kind == OPT_GENERAL:
                kw["D_sq"] = policy.D_sq
            try:
                inputs = theory.RateInputs(**kw)
                if regime in theory.CONSTANT_REGIMES:
                    b = theory.bound_constant_step(inputs, regime)
                else:
                    b = theory.bound_adaptive_step(inputs, regime)
            except theory.MissingHypothesis as exc:
                checks.append(BoundCheck(entry["name"], regime, eps, SKIP, str(exc)))
                continue
            if regime == theory.PARALLEL:
                rounds = next((r.k for r in trace.records if r.gap <= eps), None)
                if rounds is None:
                    ok = len(trace.records) >= b.rounds
                    status = FAIL if ok else SKIP
                    detail = f"not reached in {len(trace.records)} rounds, bound {b.rounds:.4g}"
                else:
                    status = PASS if rounds <= b.rounds else FAIL
                    detail = f"rounds {rounds} <= {b.rounds:.4g}"
                checks.append(BoundCheck(entry["name"], regime, eps, status, detail))
                continue
            d, n, reached = trace.steps_to_reach(eps)
            ok = d <= b.descent_bound and n <= b.null_bound
            status = PASS if ok else FAIL
            detail = (f"descent {d} <= {b.descent_bound:.4g}, null {n} <= {b.null_bound:.4g}"
                      + ("" if reached else " (eps not reached; prefix counts)"))
            checks.append(BoundCheck(entry["name"], regime, eps, status, detail))
    return checks


def verify_bounds(spec, out=sys.stdout):
    """Run every solver of ``spec`` and check its step counts; returns (checks, exit code)."""
    checks = []
    for entry in spec.solvers:
        problem = _solver_problem(spec, None)
        x0 = initial_point(problem, spec.x0, spec.seed)
        f_star = problem.constants.f_star
        if f_star is None or entry["type"] not in ("bundle", "parallel"):
            checks.append(BoundCheck(entry["name"], "none", float("nan"), SKIP,
                                     "optimal value or constants unknown"))
            continue
        try:
            policy = None
            if entry["type"] == "bundle":
                policy = _policy(entry, problem, x0, f_star, spec.beta)
            (_, trace, _), *_ = run_solver(entry, problem, x0, f_star, spec.beta)
        except ConfigError as exc:
            checks.append(BoundCheck(entry["name"], "none", float("nan"), SKIP, str(exc)))
            continue
        beta = float(entry.get("beta", spec.beta))
        checks += check_trace_bounds(entry, problem, x0, trace, spec.eps, beta, policy)
    for c in checks:
        print(c.line(), file=out)
    code = 1 if any(c.status == FAIL for c in checks) else 0
    return checks, code


def describe_reference(problem_spec, seed=0):
    problem = build_problem(problem_spec, seed)
    x0 = initial_point(problem, problem_spec.get("x0"), seed)
    f_star, certified = reference_solve(problem, x0=x0)
    return {"family": problem_spec.get("family"), "f_star": f_star, "certified": certified,
            "analytic": problem.constants.f_star is not None,
            "dimension": problem.dimension}
