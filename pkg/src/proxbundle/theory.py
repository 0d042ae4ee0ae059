"""Explicit step-count ceilings for the proximal bundle method.

Every bound comes in two forms. The *simplified* form uses 2 log(x) / beta
for the number of geometric-decrease descent steps; the *exact* form uses
log(x) / -log(1 - beta/2), which is never larger because
-log(1 - beta/2) >= beta/2. Tests treat the simplified form as binding.

Regimes for constant stepsizes: ``LIPSCHITZ``, ``SMOOTH``,
``LIPSCHITZ_GROWTH``, ``SMOOTH_GROWTH``. Adaptive regimes:
``OPT_GENERAL``, ``OPT_HOLDER``, ``PARALLEL``.
"""

import math
from dataclasses import dataclass

LIPSCHITZ = "lipschitz"
SMOOTH = "smooth"
LIPSCHITZ_GROWTH = "lipschitz_growth"
SMOOTH_GROWTH = "smooth_growth"
OPT_GENERAL = "opt_general"
OPT_HOLDER = "opt_holder"
PARALLEL = "parallel"

CONSTANT_REGIMES = (LIPSCHITZ, SMOOTH, LIPSCHITZ_GROWTH, SMOOTH_GROWTH)
ADAPTIVE_REGIMES = (OPT_GENERAL, OPT_HOLDER, PARALLEL)


class MissingHypothesis(ValueError):
    """A constant or precondition required by the requested bound is absent."""


@dataclass(frozen=True)
class RateInputs:
    beta: float
    eps: float
    gap0: float
    M: float | None = None
    L: float | None = None
    mu: float | None = None
    p: float | None = None
    rho: float | None = None
    D_sq: float | None = None
    rho_bar: float | None = None
    J: int | None = None

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie strictly inside (0, 1)")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.eps > self.gap0:
            raise ValueError("the bounds are stated for 0 < eps <= f(x0) - f*")


@dataclass(frozen=True)
class StepBounds:
    descent_bound: float
    null_bound: float
    rounds: float | None = None
    oracle_calls: float | None = None

    @property
    def total(self):
        return self.descent_bound + self.null_bound


def ceil_plus(v):
    """Positive-part ceiling max(ceil(v), 0)."""
    return max(math.ceil(v), 0)


def _log_steps(ratio, beta, exact, plus=True):
    """Steps of geometric decrease by (1 - beta/2) needed to shrink by ``ratio``."""
    lg = math.log(ratio)
    v = lg / -math.log1p(-beta / 2.0) if exact else 2.0 * lg / beta
    return ceil_plus(v) if plus else math.ceil(v)


def _need(inputs, *names, what):
    missing = [n for n in names if getattr(inputs, n) is None]
    if missing:
        raise MissingHypothesis(f"{what} needs {', '.join(missing)}")


# -- single-step lemmas -----------------------------------------------------

def prox_gap_lower_bound(gap, dist, rho):
    """Lower bound on the proximal gap from the objective gap and distance to the solution set."""
    if not (dist > 0 and rho > 0 and gap >= 0):
        raise ValueError("need dist > 0, rho > 0, gap >= 0")
    if gap <= rho * dist ** 2:
        return (gap / dist) ** 2 / (2.0 * rho)
    return gap - 0.5 * rho * dist ** 2


def holder_prox_gap_bound(gap, mu, p, rho):
    """Proximal gap lower bound under Holder growth mu*dist^p <= gap."""
    if not (mu > 0 and p >= 1 and rho > 0 and gap >= 0):
        raise ValueError("need mu > 0, p >= 1, rho > 0, gap >= 0")
    if gap == 0:
        return 0.0
    if gap ** (1.0 - 2.0 / p) <= rho / mu ** (2.0 / p):
        return mu ** (2.0 / p) * gap ** (2.0 - 2.0 / p) / (2.0 * rho)
    return gap / 2.0


def null_run_bound(G, beta, rho, prox_gap):
    """Consecutive null steps before a descent: 8 G^2 / ((1-beta)^2 rho Delta).

    ``G`` bounds the subgradient norms seen during the run.
    """
    return 8.0 * G ** 2 / ((1.0 - beta) ** 2 * rho * prox_gap)


def recurrence_steps(alpha, q, eps):
    """Steps after which d_{k+1} <= d_k - alpha d_k^q guarantees d_k <= eps."""
    if not (alpha > 0 and q > 1 and eps > 0):
        raise ValueError("need alpha > 0, q > 1, eps > 0")
    return math.ceil(1.0 / ((q - 1.0) * alpha * eps ** (q - 1.0)))


# -- constant stepsize ------------------------------------------------------

def _threshold(rho, mu, p):
    # objective level at which the Holder prox-gap bound switches branch
    return (rho / mu ** (2.0 / p)) ** (1.0 / (1.0 - 2.0 / p))


def _lipschitz_general(i, exact):
    _need(i, "M", "rho", "D_sq", what="the Lipschitz bound")
    b, rho, D2 = i.beta, i.rho, i.D_sq
    descent = 2.0 * rho * D2 / (b * i.eps) + _log_steps(i.gap0 / (rho * D2), b, exact)
    null = (48.0 * rho * i.M ** 2 * D2 ** 2 / (b * (1 - b) ** 2 * i.eps ** 3)
            + 32.0 * i.M ** 2 / (b * (1 - b) ** 2 * rho ** 2 * D2))
    return StepBounds(descent, null)


def _smooth_factor(i):
    return 16.0 * (i.L + i.rho) ** 3 / ((1 - i.beta) ** 2 * i.rho ** 3)


def _smooth_general(i, exact):
    _need(i, "L", "rho", "D_sq", what="the smooth bound")
    b, rho, D2 = i.beta, i.rho, i.D_sq
    descent = 2.0 * rho * D2 / (b * i.eps) + _log_steps(i.gap0 / (rho * D2), b, exact)
    return StepBounds(descent, _smooth_factor(i) * (descent + 1))


def _growth_descent(i, exact):
    b, rho, mu, p = i.beta, i.rho, i.mu, i.p
    if p > 2:
        e = 1.0 - 2.0 / p
        return (2.0 * rho / (e * b * mu ** (2.0 / p) * i.eps ** e)
                + _log_steps(i.gap0 / _threshold(rho, mu, p), b, exact))
    if p == 2:
        m = min(mu / rho, 1.0)
        if exact:
            return math.ceil(math.log(i.gap0 / i.eps) / -math.log1p(-b * m / 2.0))
        return math.ceil(2.0 * math.log(i.gap0 / i.eps) / (b * m))
    r = _threshold(rho, mu, p)
    return (_log_steps(r / i.eps, b, exact)
            + 2.0 * rho * i.gap0 ** (2.0 / p - 1.0)
            / ((1.0 - 2.0 ** (1.0 - 2.0 / p)) * b * mu ** (2.0 / p)))


def _lipschitz_growth(i, exact):
    _need(i, "M", "mu", "p", "rho", what="the Lipschitz-with-growth bound")
    b, rho, mu, p, M2 = i.beta, i.rho, i.mu, i.p, i.M ** 2
    c = b * (1 - b) ** 2
    descent = _growth_descent(i, exact)
    if p > 2:
        e = 1.0 - 2.0 / p
        null = (48.0 * rho * M2 / (e * c * mu ** (4.0 / p) * i.eps ** (3.0 - 4.0 / p))
                + 32.0 * M2 / (c * rho * _threshold(rho, mu, p)))
    elif p == 2:
        null = 16.0 * M2 / (c * min(mu / rho, 1.0) * rho * i.eps)
    else:
        r = _threshold(rho, mu, p)
        a = 4.0 / p - 3.0
        big = max(i.gap0 ** a / r ** a, 1.0)
        if a == 0:
            small = ceil_plus(math.log2(i.gap0 / r))
        else:
            small = min(1.0 / (1.0 - 2.0 ** (-abs(a))), ceil_plus(math.log2(i.gap0 / r)))
        null = 16.0 * M2 / (c * rho * i.eps) + 32.0 * M2 / (c * rho * r) * big * small
    return StepBounds(descent, null)


def _smooth_growth(i, exact):
    _need(i, "L", "mu", "p", "rho", what="the smooth-with-growth bound")
    if i.p < 2:
        raise MissingHypothesis("the smooth-with-growth bound needs p >= 2")
    descent = _growth_descent(i, exact)
    extra = 1 if i.p > 2 else 0
    return StepBounds(descent, _smooth_factor(i) * (descent + extra))


def bound_constant_step(inputs, regime, exact=False):
    """Descent and null step ceilings for a constant stepsize ``inputs.rho``."""
    if regime == LIPSCHITZ:
        return _lipschitz_general(inputs, exact)
    if regime == SMOOTH:
        return _smooth_general(inputs, exact)
    if regime == LIPSCHITZ_GROWTH:
        return _lipschitz_growth(inputs, exact)
    if regime == SMOOTH_GROWTH:
        return _smooth_growth(inputs, exact)
    raise ValueError(f"unknown constant-stepsize regime {regime!r}")


# -- adaptive stepsizes and the parallel method -----------------------------

def _descent_log(i, exact):
    return _log_steps(i.gap0 / i.eps, i.beta, exact, plus=False)


def _geom_factor(beta, power):
    return 1.0 / (1.0 - (1.0 - beta / 2.0) ** power)


def parallel_preconditions(mu, p, eps, gap0, rho_bar, J):
    """Return a list of violated hypotheses of the parallel rate (empty if all hold)."""
    e = 1.0 - 2.0 / p
    lo = 0.25 * mu ** (2.0 / p) * min(eps ** e, gap0 ** e)
    problems = []
    if rho_bar > lo * (1 + 1e-12):
        problems.append(f"rho_bar={rho_bar:g} exceeds mu^(2/p) min(eps, gap0)^(1-2/p) / 4 = {lo:g}")
    need_J = math.log2(mu ** (2.0 / p) * max(eps ** e, gap0 ** e) / (4.0 * rho_bar))
    if J < need_J - 1e-12:
        problems.append(f"J={J} is below log2 of the stepsize range, {need_J:.4g}")
    return problems


def bound_adaptive_step(inputs, regime, exact=False):
    """Ceilings for the adaptive stepsize rules and for the parallel method.

    For ``PARALLEL`` the returned ``rounds`` bounds the communication rounds
    before the best iterate is eps-optimal, and ``oracle_calls`` = rounds * J.
    """
    i = inputs
    b = i.beta
    if regime == OPT_GENERAL:
        _need(i, "M", "D_sq", what="the adaptive Lipschitz bound")
        null = _geom_factor(b, 2.0) * 8.0 * i.M ** 2 * i.D_sq / ((1 - b) ** 2 * i.eps ** 2)
        return StepBounds(_descent_log(i, exact), null)
    if regime == OPT_HOLDER:
        _need(i, "M", "mu", "p", what="the adaptive Holder bound")
        descent = _descent_log(i, exact)
        if i.p > 1:
            e = 2.0 - 2.0 / i.p
            null = (_geom_factor(b, e) * 8.0 * i.M ** 2
                    / ((1 - b) ** 2 * i.mu ** (2.0 / i.p) * i.eps ** e))
        else:
            null = 8.0 * i.M ** 2 / ((1 - b) ** 2 * i.mu ** 2) * descent
        return StepBounds(descent, null)
    if regime == PARALLEL:
        _need(i, "M", "mu", "p", "rho_bar", "J", what="the parallel rate")
        bad = parallel_preconditions(i.mu, i.p, i.eps, i.gap0, i.rho_bar, i.J)
        if bad:
            raise MissingHypothesis("parallel rate hypotheses violated: " + "; ".join(bad))
        n = _descent_log(i, exact)
        if i.p > 1:
            e = 2.0 - 2.0 / i.p
            a = 2.0 * _geom_factor(b, e) * 64.0 * i.M ** 2 / ((1 - b) ** 2 * i.mu ** (2.0 / i.p) * i.eps ** e)
            rounds = a + 2 * n
        else:
            rounds = 2.0 * (64.0 * i.M ** 2 / ((1 - b) ** 2 * i.mu ** 2) + 1.0) * n
        return StepBounds(0.0, 0.0, rounds=rounds, oracle_calls=rounds * i.J)
    raise ValueError(f"unknown adaptive regime {regime!r}")
