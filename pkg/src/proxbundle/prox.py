"""Proximal subproblem  min_z f_k(z) + (rho/2)||z - x||^2  for polyhedral f_k.

Two cuts are solved in closed form. More cuts go through the dual, a
concave quadratic over the simplex, solved by a primal active-set method.
Accelerated projected gradient with active-set polishing is kept as a
fallback, and every answer is certified by its primal-dual gap.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .model import TWO_CUT
from .oracle import SyntheticHolder

CLOSED_FORM = "closed-form"
ITERATIVE = "iterative"

_DEGENERATE_SQ = 1e-28


class ProxSolverError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass
class ProxResult:
    z_next: np.ndarray
    model_value_at_z: float
    aggregate_subgradient: np.ndarray
    rho: float
    center: np.ndarray
    dual_weights: np.ndarray | None = None
    theta: float | None = None
    solve_status: str = CLOSED_FORM
    iterations: int = 0
    residual: float = 0.0

    def objective(self):
        d = self.z_next - self.center
        return self.model_value_at_z + 0.5 * self.rho * (d @ d)


def _check_rho(rho):
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")


def prox_two_cut(cut_s, cut_g, x, rho):
    """Exact prox of max{cut_s, cut_g}.

    The weight on ``cut_g`` is theta = clip(rho*(g(z_s) - s(z_s))/||g - s||^2, 0, 1)
    with z_s = x - slope_s/rho. In the bundle setting cut_s passes through
    z_s with value f_k(z_s) <= f(z_s), so theta >= 0 automatically and the
    clip at 0 only matters for arbitrary cut pairs.
    """
    _check_rho(rho)
    x = np.asarray(x, dtype=float)
    s, g = cut_s.slope, cut_g.slope
    diff = g - s
    nd2 = float(diff @ diff)
    if nd2 < _DEGENERATE_SQ:
        theta = 1.0
    else:
        z_s = x - s / rho
        theta = rho * (cut_g.value(z_s) - cut_s.value(z_s)) / nd2
        theta = float(min(1.0, max(0.0, theta)))
    w = theta * g + (1.0 - theta) * s
    z = x - w / rho
    mv = max(cut_s.value(z), cut_g.value(z))
    return ProxResult(z, float(mv), rho * (x - z), rho, x,
                      dual_weights=np.array([1.0 - theta, theta]), theta=theta)


def project_simplex(v):
    """Euclidean projection onto {lam >= 0, sum lam = 1}."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    k = np.nonzero(u - css / idx > 0)[0][-1]
    return np.maximum(v - css[k] / (k + 1), 0.0)


def _primal_dual(slopes, intercepts, c, G, lam, x, rho):
    w = slopes.T @ lam
    z = x - w / rho
    mv = float(np.max(intercepts + slopes @ z))
    primal = mv + 0.5 * rho * float((z - x) @ (z - x))
    dual = float(c @ lam - 0.5 * lam @ G @ lam)
    return z, mv, primal, dual


def _sum_zero_basis(k):
    # orthonormal basis of {p in R^k : sum p = 0}
    q, _ = np.linalg.qr(np.eye(k) - 1.0 / k, mode="reduced")
    return q[:, : k - 1]


def _active_set_qp(G, c, lam, max_iter=500):
    """Primal active-set method for min 1/2 l'Gl - c'l over the simplex.

    Starts from the feasible ``lam`` and keeps its support as the free set.
    G may be singular: on the free set the step is computed in the reduced
    space of sum-zero moves, and a zero-curvature descent direction is
    followed until a weight hits zero. Returns None if it does not settle.
    """
    lam = np.maximum(lam, 0.0)
    lam = lam / lam.sum()
    free = set(np.nonzero(lam > 0)[0].tolist())
    absG, absc = np.abs(G), np.abs(c)
    settled = False  # last move was a full Newton step on the free set
    for _ in range(max_iter):
        F = np.array(sorted(free))
        grad = G @ lam - c
        # tolerances follow the size of the cuts in play, which can be far
        # smaller than the largest cut in the bundle
        local = max(float(np.max(absG[np.ix_(F, F)])), float(np.max(absc[F])), 1e-300)
        step = np.zeros(len(F))
        unbounded = False
        if len(F) > 1:
            Z = _sum_zero_basis(len(F))
            H = Z.T @ G[np.ix_(F, F)] @ Z
            h = Z.T @ grad[F]
            w, V = np.linalg.eigh(H)
            cut = 1e-12 * max(w[-1], local)
            hv = V.T @ h
            pos = w > cut
            flat = ~pos & (np.abs(hv) > 1e-13 * local)
            if np.any(flat):
                # linear decrease with no curvature: move until a bound is hit
                step = -Z @ (V[:, flat] @ hv[flat])
                unbounded = True
            else:
                step = -Z @ (V[:, pos] @ (hv[pos] / w[pos]))
        if not unbounded and (settled or np.max(np.abs(step), initial=0.0) <= 1e-12):
            tau = -float(np.mean(grad[F]))
            mult = grad + tau
            mult[F] = 0.0
            noise = 1e-13 * (absG[:, F] @ lam[F] + absc + abs(tau)) + 1e-300
            j = int(np.argmin(mult / noise))
            if mult[j] >= -noise[j]:
                return lam
            free.add(j)
            settled = False
            continue
        neg = step < 0
        alpha = np.inf if unbounded else 1.0
        block = None
        if np.any(neg):
            ratios = -lam[F][neg] / step[neg]
            i = int(np.argmin(ratios))
            if ratios[i] <= alpha:
                alpha = ratios[i]
                block = int(F[neg][i])
        if not np.isfinite(alpha):
            return None
        lam = lam.copy()
        lam[F] += alpha * step
        settled = block is None
        if block is not None:
            lam[block] = 0.0
            free.discard(block)
        lam = np.maximum(lam, 0.0)
        lam = lam / lam.sum()
    return None


def prox_polyhedral(model, x, rho, tol=1e-10, max_iter=100_000, check_every=10):
    """Prox of a general cut model via its simplex-constrained dual.

    Stops once primal minus dual objective is at most tol*(1 + |primal|).
    Raises ProxSolverError if that does not happen within ``max_iter``.
    """
    _check_rho(rho)
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.asarray(x, dtype=float)
    slopes, intercepts = model.slopes, model.intercepts
    m = len(intercepts)
    c = intercepts + slopes @ x
    G = slopes @ slopes.T / rho

    if m == 1:
        lam = np.ones(1)
        z, mv, _, _ = _primal_dual(slopes, intercepts, c, G, lam, x, rho)
        return ProxResult(z, mv, rho * (x - z), rho, x, dual_weights=lam,
                          solve_status=ITERATIVE)

    lam = np.zeros(m)
    lam[np.argmax(c)] = 1.0
    best = None

    def consider(cand, it):
        nonlocal best
        z, mv, primal, dual = _primal_dual(slopes, intercepts, c, G, cand, x, rho)
        gap = primal - dual
        if best is None or gap < best[0]:
            best = (gap, cand, z, mv, primal)
        gap, cand, z, mv, primal = best
        if gap <= tol * (1.0 + abs(primal)):
            return ProxResult(z, mv, rho * (x - z), rho, x, dual_weights=cand,
                              solve_status=ITERATIVE, iterations=it, residual=max(gap, 0.0))
        return None

    exact = _active_set_qp(G, c, lam)
    if exact is not None:
        done = consider(exact, 0)
        if done is not None:
            return done

    lip = float(np.linalg.eigvalsh(G)[-1])
    if lip <= 0:
        # all slopes vanish: the model is constant and the best vertex is optimal
        z, mv, _, _ = _primal_dual(slopes, intercepts, c, G, lam, x, rho)
        return ProxResult(z, mv, rho * (x - z), rho, x, dual_weights=lam,
                          solve_status=ITERATIVE)
    step = 1.0 / lip
    y = lam.copy()
    t = 1.0
    for it in range(1, max_iter + 1):
        lam_new = project_simplex(y - step * (G @ y - c))
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        # gradient-based restart
        if (G @ y - c) @ (lam_new - lam) > 0:
            t_new = 1.0
            y = lam_new.copy()
        else:
            y = lam_new + ((t - 1.0) / t_new) * (lam_new - lam)
        lam, t = lam_new, t_new

        if it % check_every and it != max_iter:
            continue
        polished = _active_set_qp(G, c, lam, max_iter=50)
        for cand in ([] if polished is None else [polished]) + [lam]:
            done = consider(cand, it)
            if done is not None:
                return done
    raise ProxSolverError("dual prox solver hit its iteration cap", best[0])


def solve_prox(model, x, rho, tol=1e-10):
    """Dispatch: two-cut models use the closed form, everything else the dual solver."""
    if len(model) == 2 and model.strategy == TWO_CUT:
        return prox_two_cut(model.cuts[0], model.cuts[1], x, rho)
    if len(model) == 1 and model.strategy == TWO_CUT:
        cut = model.cuts[0]
        return prox_two_cut(cut, cut, x, rho)
    return prox_polyhedral(model, x, rho, tol=tol)


def exact_prox_reference(problem, x, rho):
    """Exact prox point and proximal gap of f(z) = mu*||z||^p.

    Returns ``(z_bar, delta)`` with z_bar = argmin f(z) + (rho/2)||z - x||^2
    and delta = f(x) - (f(z_bar) + (rho/2)||z_bar - x||^2). Scalars in,
    scalars out.
    """
    if not isinstance(problem, SyntheticHolder):
        raise ValueError("exact prox is only available for mu*||x||^p families")
    _check_rho(rho)
    scalar = np.ndim(x) == 0
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    mu, p = problem.mu, problem.p
    r = float(np.linalg.norm(xv))
    if r == 0.0:
        return (0.0, 0.0) if scalar else (np.zeros_like(xv), 0.0)
    if p == 1.0:
        u = max(r - mu / rho, 0.0)
    elif p == 2.0:
        u = rho * r / (2.0 * mu + rho)
    else:
        def phi(u):
            return mu * p * u ** (p - 1) + rho * (u - r)
        u = brentq(phi, 0.0, r, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    z = u * xv / r
    delta = mu * r ** p - (mu * u ** p + 0.5 * rho * (r - u) ** 2)
    return (float(z[0]), float(delta)) if scalar else (z, float(delta))
