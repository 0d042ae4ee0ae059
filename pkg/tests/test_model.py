import json

import numpy as np
import pytest

from proxbundle.engine import BundleConfig, StepsizePolicy, bundle_step, initial_state
from proxbundle.model import (
    AGGREGATE,
    FULL_MEMORY,
    TWO_CUT,
    Cut,
    CutModel,
    aggregate_cut,
    initial_model,
    model_value,
    oracle_cut,
    update_after_descent,
    update_after_null,
)
from proxbundle.oracle import SyntheticHolder, abs_value, half_square, make_sharp_regression
from proxbundle.prox import solve_prox
from proxbundle.rng import stream

from conftest import sample_ball


def tangent(f, df, z):
    z = np.atleast_1d(float(z))
    return oracle_cut(z, f(z), df(z))


def sq(z):
    return float(z @ z)


def dsq(z):
    return 2 * z


# -- model_value -------------------------------------------------------------------

def test_single_constant_cut():
    m = CutModel([Cut(np.zeros(2), 5.0)])
    assert model_value(m, [3.0, -7.0]) == 5.0


def test_abs_from_two_cuts():
    m = CutModel([Cut(np.array([1.0]), 0.0), Cut(np.array([-1.0]), 0.0)])
    assert model_value(m, [3.0]) == 3.0


def test_tangents_of_square_at_origin():
    cuts = [tangent(sq, dsq, z) for z in (-2.0, -1.0, 1.0, 2.0)]
    m = CutModel(cuts, FULL_MEMORY)
    assert model_value(m, [0.0]) == -1.0


def test_oracle_cut_is_exact_at_its_point():
    z = np.array([0.3, -2.0])
    c = oracle_cut(z, 4.0, np.array([1.0, 2.0]))
    assert c.value(z) == pytest.approx(4.0)


def test_bad_models_rejected():
    with pytest.raises(ValueError):
        CutModel([])
    with pytest.raises(ValueError):
        CutModel([Cut(np.zeros(1), 0.0)], strategy="nope")
    with pytest.raises(ValueError):
        CutModel([Cut(np.zeros(1), 0.0)], FULL_MEMORY, capacity=1)


# -- updates ---------------------------------------------------------------------------

def _null_step(model, f, df, x, rho):
    prox = solve_prox(model, x, rho)
    cut = tangent(f, df, prox.z_next[0])
    return prox, cut, update_after_null(model, prox, cut)


def test_two_cut_null_has_two_cuts_and_exact_aggregate():
    f = lambda z: 0.5 * sq(z)
    df = lambda z: z
    model = initial_model(tangent(f, df, 1.0))
    prox, cut, new = _null_step(model, f, df, np.array([1.0]), 1.0)
    assert len(new) == 2
    agg = [c for c in new.cuts if c.origin == AGGREGATE][0]
    assert agg.value(prox.z_next) == pytest.approx(prox.model_value_at_z, abs=1e-15)


def test_full_memory_on_abs_grows_by_distinct_cuts():
    # |x| only has two distinct oracle cuts, so duplicates are not re-added;
    # counting every null cut the model would hold k + 1 cuts (k + 2 with the aggregate)
    P = abs_value(1)
    x = np.array([1.0])
    model = initial_model(oracle_cut(x, *P.evaluate(x)), FULL_MEMORY)
    distinct = [model.cuts[0]]
    for k in range(1, 6):
        prox = solve_prox(model, x, 0.7)
        z = prox.z_next
        cut = oracle_cut(z, *P.evaluate(z))
        model = update_after_null(model, prox, cut)
        if not any(cut.same_as(c) for c in distinct):
            distinct.append(cut)
        assert len(model) == len(distinct) <= k + 2
    gen = stream(0, "abs-points")
    for t in gen.uniform(-5, 5, 100):
        assert model_value(model, [t]) <= abs(t) + 1e-12


def test_full_memory_on_square_keeps_every_null_cut():
    f = lambda z: sq(z)
    model = initial_model(tangent(f, dsq, 2.0), FULL_MEMORY)
    x = np.array([2.0])
    for k in range(1, 8):
        prox, cut, model = _null_step(model, f, dsq, x, 0.5)
        assert len(model) == k + 1


def test_fresh_model_is_initial_linearization():
    P = half_square(1)
    x0 = np.array([1.0])
    cfg = BundleConfig(StepsizePolicy.constant(1.0))
    state = initial_state(P, cfg, x0)
    assert len(state.model) == 1
    assert state.model.cuts[0].slope.tolist() == [1.0]
    assert state.model.cuts[0].intercept == pytest.approx(-0.5)


def test_two_cut_descent_keeps_two_valid_minorants():
    P = half_square(1)
    x = np.array([1.0])
    model = initial_model(oracle_cut(x, *P.evaluate(x)))
    prox = solve_prox(model, x, 3.0)
    z = prox.z_next
    new = update_after_descent(model, oracle_cut(z, *P.evaluate(z)), prox)
    assert len(new) == 2
    for t in np.linspace(-4, 4, 81):
        assert model_value(new, [t]) <= 0.5 * t * t + 1e-12


@pytest.mark.parametrize("strategy", [TWO_CUT, FULL_MEMORY])
def test_minorant_on_square_over_random_descents(strategy):
    gen = stream(3, "descent-updates")
    z = gen.normal(size=1)
    model = initial_model(tangent(sq, dsq, z[0]), strategy)
    for _ in range(10):
        z = gen.normal(size=1) * 2
        model = update_after_descent(model, tangent(sq, dsq, z[0]))
        for t in gen.uniform(-6, 6, 100):
            assert model_value(model, [t]) <= t * t + 1e-9


def test_descent_without_prox_keeps_largest_old_cut():
    cuts = [tangent(sq, dsq, -1.0), tangent(sq, dsq, 1.0)]
    model = CutModel(cuts)
    new = update_after_descent(model, tangent(sq, dsq, 3.0))
    assert new.cuts[0] is cuts[1]


def test_capacity_eviction_keeps_aggregate_and_new_cut():
    P = make_sharp_regression(20, 6, 2)
    cfg = BundleConfig(StepsizePolicy.constant(0.05), model_strategy=FULL_MEMORY, capacity=3)
    state = initial_state(P, cfg, P.x_star + stream(0, "x").normal(size=6))
    gen = stream(1, "cap-points")
    nulls = 0
    for _ in range(40):
        old = state.model
        state, out = bundle_step(state, P, cfg)
        assert len(state.model) <= 3
        X = sample_ball(gen, state.x, 2.0, 200)
        vals = state.model.values(X)
        new_cut = oracle_cut(out.z, out.fz, out.gz)
        assert np.all(vals >= X @ new_cut.slope + new_cut.intercept - 1e-9)
        if not out.is_descent:
            nulls += 1
            agg = aggregate_cut(out.z, out.prox.model_value_at_z, out.prox.aggregate_subgradient)
            assert np.all(vals >= X @ agg.slope + agg.intercept - 1e-9)
        del old
    assert nulls > 5


def test_json_dump():
    m = CutModel([Cut(np.array([1.0, 2.0]), 3.0)], FULL_MEMORY, 10)
    d = json.loads(m.to_json())
    assert d["cuts"][0]["slope"] == [1.0, 2.0] and d["capacity"] == 10


# -- invariants along runs -----------------------------------------------------------

CASES = [
    (SyntheticHolder(1.0, 1.0, 3), 0.5, TWO_CUT),
    (SyntheticHolder(1.0, 1.0, 3), 0.5, FULL_MEMORY),
    (SyntheticHolder(1.0, 1.5, 2), 2.0, TWO_CUT),
    (SyntheticHolder(1.0, 1.5, 2), 2.0, FULL_MEMORY),
    (make_sharp_regression(30, 8, 1), 5.0, TWO_CUT),
    (make_sharp_regression(30, 8, 1), 5.0, FULL_MEMORY),
]


@pytest.mark.parametrize("P,rho,strategy", CASES)
def test_model_assumptions_along_run(P, rho, strategy):
    cfg = BundleConfig(StepsizePolicy.constant(rho), model_strategy=strategy, capacity=20)
    x0 = (P.x_star if P.x_star is not None else np.zeros(P.dimension)) + 1.0
    state = initial_state(P, cfg, x0)
    gen = stream(2, "model-points")
    for _ in range(30):
        old = state.model
        state, out = bundle_step(state, P, cfg)
        X = sample_ball(gen, state.x, 3.0, 1000)
        fX = np.array([P.value(x) for x in X])
        vals = state.model.values(X)
        assert np.all(vals <= fX + 1e-9)
        assert np.all(vals >= X @ out.gz + (out.fz - out.gz @ out.z) - 1e-9)
        s, z = out.prox.aggregate_subgradient, out.z
        mz = out.prox.model_value_at_z
        # s is a subgradient of the old model at z
        assert np.all(old.values(X) >= mz + (X - z) @ s - 1e-9)
        if not out.is_descent:
            assert np.all(vals >= mz + (X - z) @ s - 1e-9)
