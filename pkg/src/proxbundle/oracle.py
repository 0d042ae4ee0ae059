"""First-order oracles and the test problems used throughout the package.

An oracle returns ``(f(x), g)`` with ``g`` a subgradient of ``f`` at ``x``.
At kinks the zero-extreme subgradient is returned (inactive/boundary terms
get coefficient 0), which keeps every oracle deterministic.
"""

from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.special import logsumexp, softmax

from . import rng


@dataclass(frozen=True)
class ProblemConstants:
    """Regularity constants of a problem, any of which may be unknown."""

    lipschitz_M: float | None = None
    smooth_L: float | None = None
    growth_mu: float | None = None
    growth_p: float | None = None
    f_star: float | None = None
    dist0_sq: float | None = None

    def __post_init__(self):
        if self.growth_mu is not None and self.growth_p is None:
            raise ValueError("growth_mu requires growth_p")
        if self.growth_mu is not None and self.growth_mu <= 0:
            raise ValueError("growth_mu must be positive")
        if self.growth_p is not None and self.growth_p < 1:
            raise ValueError("growth_p must be >= 1")
        for name in ("lipschitz_M", "smooth_L", "dist0_sq"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative")

    def fill_missing(self, other):
        """Return a copy where fields unknown here are taken from ``other``."""
        updates = {}
        for f in fields(self):
            if getattr(self, f.name) is None and getattr(other, f.name) is not None:
                updates[f.name] = getattr(other, f.name)
        return replace(self, **updates)


class Oracle:
    """Base class: subclasses implement ``_evaluate(x) -> (value, subgradient)``.

    ``calls`` counts evaluations made through :meth:`evaluate`. Evaluation
    itself never mutates problem data, so an oracle may be shared by
    several solvers as long as each reads its own call deltas.
    """

    dimension: int
    constants: ProblemConstants = ProblemConstants()
    x_star: np.ndarray | None = None

    def __init__(self):
        self.calls = 0

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"expected a point of shape ({self.dimension},), got {x.shape}")
        self.calls += 1
        value, g = self._evaluate(x)
        return float(value), np.asarray(g, dtype=float)

    __call__ = evaluate

    def value(self, x):
        """Objective value only; not counted as an oracle call."""
        return float(self._evaluate(np.asarray(x, dtype=float))[0])

    def distance_to_solution(self, x):
        """dist(x, X*) when the solution set is known, else None."""
        if self.x_star is None:
            return None
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.x_star))

    def _evaluate(self, x):
        raise NotImplementedError


def evaluate(oracle, x):
    """Query ``oracle`` at ``x``; returns ``(value, subgradient)``."""
    return oracle.evaluate(x)


class FunctionOracle(Oracle):
    """Wrap a plain callable ``fun(x) -> (value, subgradient)``."""

    def __init__(self, fun, dimension, constants=None, x_star=None, name="function"):
        super().__init__()
        self._fun = fun
        self.dimension = int(dimension)
        self.constants = constants or ProblemConstants()
        self.x_star = None if x_star is None else np.asarray(x_star, dtype=float)
        self.name = name

    def _evaluate(self, x):
        return self._fun(x)


class SyntheticHolder(Oracle):
    """f(x) = mu * ||x||^p: Holder growth holds with equality, X* = {0}."""

    def __init__(self, mu, p, dimension):
        super().__init__()
        if mu <= 0 or p < 1 or dimension < 1:
            raise ValueError("need mu > 0, p >= 1, dimension >= 1")
        self.mu = float(mu)
        self.p = float(p)
        self.dimension = int(dimension)
        self.x_star = np.zeros(self.dimension)
        self.name = f"holder(mu={self.mu:g},p={self.p:g})"
        self.constants = ProblemConstants(
            lipschitz_M=self.mu if self.p == 1 else None,
            smooth_L=2 * self.mu if self.p == 2 else None,
            growth_mu=self.mu,
            growth_p=self.p,
            f_star=0.0,
        )

    def _evaluate(self, x):
        r = np.linalg.norm(x)
        if r == 0.0:
            return 0.0, np.zeros_like(x)
        return self.mu * r ** self.p, self.mu * self.p * r ** (self.p - 2) * x

    def lipschitz_on_ball(self, radius):
        """Largest subgradient norm on the ball of the given radius around 0."""
        return self.mu * self.p * radius ** (self.p - 1)


def abs_value(dimension=1):
    """f(x) = ||x|| (|x| in one dimension)."""
    return SyntheticHolder(1.0, 1.0, dimension)


def half_square(dimension=1):
    """f(x) = ||x||^2 / 2."""
    return SyntheticHolder(0.5, 2.0, dimension)


class SharpRegression(Oracle):
    """f(x) = ||Ax - b|| with b = A x_star, so f* = 0."""

    def __init__(self, A, b, x_star):
        super().__init__()
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.x_star = np.asarray(x_star, dtype=float)
        self.dimension = self.A.shape[1]
        self.name = "sharp_regression"
        sv = np.linalg.svd(self.A, compute_uv=False)
        self.sigma_max = float(sv[0])
        full_rank = self.A.shape[0] >= self.dimension and sv[-1] > sv[0] * 1e-12
        self.sigma_min = float(sv[-1]) if full_rank else 0.0
        self.constants = ProblemConstants(
            lipschitz_M=self.sigma_max,
            growth_mu=self.sigma_min if full_rank else None,
            growth_p=1.0 if full_rank else None,
            f_star=0.0,
        )
        self._row_proj = None if full_rank else np.linalg.pinv(self.A) @ self.A

    def _evaluate(self, x):
        r = self.A @ x - self.b
        nr = np.linalg.norm(r)
        if nr == 0.0:
            return 0.0, np.zeros(self.dimension)
        return nr, self.A.T @ r / nr

    def distance_to_solution(self, x):
        e = np.asarray(x, dtype=float) - self.x_star
        if self._row_proj is not None:
            e = self._row_proj @ e
        return float(np.linalg.norm(e))


def make_sharp_regression(n, d, seed):
    """Gaussian sharp regression instance; entries of A have std 1/sqrt(n)."""
    if not n >= d >= 1:
        raise ValueError("need n >= d >= 1")
    gen = rng.stream(seed, "sharp_regression")
    A = gen.normal(0.0, 1.0 / np.sqrt(n), size=(n, d))
    x_star = gen.normal(size=d)
    return SharpRegression(A, A @ x_star, x_star)


class SvmProblem(Oracle):
    """Hinge-loss SVM: (1/n) sum max(0, 1 - y_i <w, x_i>) + (lam/2)||w||^2."""

    def __init__(self, X, y, lam, name="svm"):
        super().__init__()
        if lam <= 0:
            raise ValueError("lambda must be positive")
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        if not np.all(np.isin(self.y, (-1.0, 1.0))):
            raise ValueError("labels must be +1/-1")
        self.lam = float(lam)
        self.dimension = self.X.shape[1]
        self.name = name
        self.constants = ProblemConstants()

    def _evaluate(self, w):
        margins = 1.0 - self.y * (self.X @ w)
        active = margins > 0
        n = len(self.y)
        value = margins[active].sum() / n + 0.5 * self.lam * (w @ w)
        g = self.lam * w - (self.y[active] @ self.X[active]) / n
        return value, g

    def with_lambda(self, lam):
        return SvmProblem(self.X, self.y, lam, name=self.name)


def make_synthetic_svm(n=80, d=20, seed=0, lam=0.1):
    """Overlapping two-Gaussian classification set, preprocessed like LIBSVM data.

    Stands in for the LIBSVM datasets when those are not available locally.
    """
    from .datasets import preprocess_features

    gen = rng.stream(seed, "synthetic_svm")
    y = np.where(gen.random(n) < 0.5, -1.0, 1.0)
    direction = gen.normal(size=d)
    direction /= np.linalg.norm(direction)
    X = gen.normal(size=(n, d)) + 0.8 * y[:, None] * direction[None, :]
    return SvmProblem(preprocess_features(X), y, lam, name="synthetic_svm")


class LogSumExp(Oracle):
    """f(x) = gamma * log sum_i exp((<a_i, x> - b_i) / gamma), rows of A are a_i."""

    def __init__(self, A, b, gamma):
        super().__init__()
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.gamma = float(gamma)
        self.dimension = self.A.shape[1]
        self.name = f"logsumexp(gamma={self.gamma:g})"
        self.x_star = np.zeros(self.dimension)
        self.constants = ProblemConstants(
            lipschitz_M=float(np.max(np.linalg.norm(self.A, axis=1))),
            smooth_L=self.smoothness_estimate(),
            f_star=float(self._evaluate(np.zeros(self.dimension))[0]),
        )

    def _evaluate(self, x):
        t = (self.A @ x - self.b) / self.gamma
        return self.gamma * logsumexp(t), self.A.T @ softmax(t)

    def smoothness_estimate(self):
        """sigma_max(A)^2 / gamma, an upper bound on the Hessian norm."""
        return float(np.linalg.norm(self.A, 2) ** 2 / self.gamma)

    def distance_to_solution(self, x):
        # 0 is a minimizer but X* need not be a singleton
        return None


def make_logsumexp(d, n, gamma, seed):
    """Random soft-max instance with columns shifted so that grad f(0) = 0."""
    if n < 1 or d < 1 or gamma <= 0:
        raise ValueError("need n, d >= 1 and gamma > 0")
    gen = rng.stream(seed, "logsumexp")
    A_hat = gen.uniform(-1.0, 1.0, size=(n, d))
    b = gen.uniform(-1.0, 1.0, size=n)
    grad0 = A_hat.T @ softmax(-b / gamma)
    return LogSumExp(A_hat - grad0[None, :], b, gamma)


def estimate_constants(oracle, region_radius, samples, seed=0, keep_known=True):
    """Empirical Lipschitz and smoothness constants over a ball.

    Samples uniformly in the ball of ``region_radius`` around the known
    minimizer (or the origin). With ``keep_known`` (the default) constants
    the oracle already knows are kept and only missing ones are filled in;
    otherwise the raw empirical estimates are returned.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    gen = rng.stream(seed, "estimate_constants")
    d = oracle.dimension
    center = oracle.x_star if oracle.x_star is not None else np.zeros(d)
    dirs = gen.normal(size=(samples, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = region_radius * gen.random(samples) ** (1.0 / d)
    pts = center + dirs * radii[:, None]
    grads = np.array([oracle.evaluate(p)[1] for p in pts])
    M_hat = float(np.max(np.linalg.norm(grads, axis=1)))
    dx = np.linalg.norm(pts[1:] - pts[:-1], axis=1)
    dg = np.linalg.norm(grads[1:] - grads[:-1], axis=1)
    ok = dx > 0
    L_hat = float(np.max(dg[ok] / dx[ok])) if ok.any() else None
    empirical = ProblemConstants(lipschitz_M=M_hat, smooth_L=L_hat)
    if not keep_known:
        return empirical
    return oracle.constants.fill_missing(empirical)
