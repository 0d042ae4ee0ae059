"""Polyhedral bundle models: a max of affine minorants of the objective.

Two strategies are supported. ``TWO_CUT`` keeps exactly the aggregate cut
and the newest oracle cut, so the proximal subproblem has a closed form.
``FULL_MEMORY`` keeps every oracle cut, optionally up to a capacity; when
the cap is hit the aggregate cut is inserted before the oldest cuts are
evicted, so the aggregate lower bound is never lost after a null step.
"""

import json
from dataclasses import dataclass, field

import numpy as np

TWO_CUT = "two_cut"
FULL_MEMORY = "full_memory"

ORACLE = "oracle"
AGGREGATE = "aggregate"

_DUP_RTOL = 1e-14


@dataclass(frozen=True, eq=False)
class Cut:
    """Affine function z -> intercept + <slope, z>."""

    slope: np.ndarray
    intercept: float
    origin: str = ORACLE
    point: np.ndarray | None = field(default=None, repr=False)

    def value(self, z):
        return self.intercept + self.slope @ z

    def same_as(self, other):
        ds = np.linalg.norm(self.slope - other.slope)
        return (ds <= _DUP_RTOL * (1.0 + np.linalg.norm(self.slope))
                and abs(self.intercept - other.intercept) <= _DUP_RTOL * (1.0 + abs(self.intercept)))


def oracle_cut(z, fz, g):
    """The linearization f(z) + <g, . - z>."""
    z = np.asarray(z, dtype=float)
    g = np.asarray(g, dtype=float)
    return Cut(g.copy(), float(fz - g @ z), ORACLE, z.copy())


def aggregate_cut(z, model_value_at_z, s):
    """The aggregate linearization f_k(z) + <s, . - z>."""
    z = np.asarray(z, dtype=float)
    s = np.asarray(s, dtype=float)
    return Cut(s.copy(), float(model_value_at_z - s @ z), AGGREGATE, z.copy())


class CutModel:
    """Immutable collection of cuts; updates return a new model."""

    def __init__(self, cuts, strategy=TWO_CUT, capacity=None):
        if not cuts:
            raise ValueError("a model needs at least one cut")
        if strategy not in (TWO_CUT, FULL_MEMORY):
            raise ValueError(f"unknown strategy {strategy!r}")
        if capacity is not None and capacity < 2:
            raise ValueError("capacity must be at least 2")
        self.cuts = tuple(cuts)
        self.strategy = strategy
        self.capacity = capacity
        self.slopes = np.array([c.slope for c in self.cuts])
        self.intercepts = np.array([c.intercept for c in self.cuts])

    def __len__(self):
        return len(self.cuts)

    def value(self, z):
        return float(np.max(self.intercepts + self.slopes @ z))

    def values(self, Z):
        """Model values at each row of ``Z``."""
        return np.max(Z @ self.slopes.T + self.intercepts, axis=1)

    def _with(self, cuts):
        return CutModel(cuts, self.strategy, self.capacity)

    def to_dict(self):
        return {
            "strategy": self.strategy,
            "capacity": self.capacity,
            "cuts": [
                {"slope": c.slope.tolist(), "intercept": c.intercept, "origin": c.origin}
                for c in self.cuts
            ],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def initial_model(cut, strategy=TWO_CUT, capacity=None):
    return CutModel([cut], strategy, capacity)


def model_value(model, z):
    return model.value(np.asarray(z, dtype=float))


def _append_unique(cuts, new):
    if any(new.same_as(c) for c in cuts):
        return list(cuts)
    return list(cuts) + [new]


def _evict(cuts, capacity, keep):
    """Drop oldest cuts until within capacity, never dropping those in ``keep``."""
    cuts = list(cuts)
    i = 0
    while len(cuts) > capacity and i < len(cuts):
        if any(cuts[i] is k for k in keep):
            i += 1
        else:
            del cuts[i]
    return cuts


def _full_memory_update(model, new_cut, agg):
    cuts = _append_unique(model.cuts, new_cut)
    cap = model.capacity
    if cap is None or len(cuts) <= cap:
        return model._with(cuts)
    keep = [c for c in cuts if c is new_cut]
    if agg is not None:
        cuts = [agg] + [c for c in cuts if c.origin != AGGREGATE]
        keep.append(agg)
    return model._with(_evict(cuts, cap, keep))


def update_after_null(model, prox, new_cut):
    """Model for the next iteration after a null step at ``prox.z_next``."""
    agg = aggregate_cut(prox.z_next, prox.model_value_at_z, prox.aggregate_subgradient)
    if model.strategy == TWO_CUT:
        return model._with(_append_unique([agg], new_cut))
    return _full_memory_update(model, new_cut, agg)


def update_after_descent(model, new_cut, prox=None):
    """Model after a descent step to the point where ``new_cut`` was built.

    Two-cut models keep the aggregate cut of ``prox`` when given, else the
    old cut that is largest at the new point.
    """
    if model.strategy == TWO_CUT:
        if prox is not None:
            keep = aggregate_cut(prox.z_next, prox.model_value_at_z, prox.aggregate_subgradient)
        else:
            z = new_cut.point if new_cut.point is not None else np.zeros_like(new_cut.slope)
            keep = max(model.cuts, key=lambda c: c.value(z))
        return model._with(_append_unique([keep], new_cut))
    agg = None
    if prox is not None:
        agg = aggregate_cut(prox.z_next, prox.model_value_at_z, prox.aggregate_subgradient)
    return _full_memory_update(model, new_cut, agg)
