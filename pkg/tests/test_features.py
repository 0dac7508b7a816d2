import dataclasses

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings, strategies as st

from boundest.cop import OBJECTIVE, Constraint, CopInstance, Domain, Variable
from boundest.features import (MINMAX, STANDARDIZE, STAT_NAMES, FeatureSchemaError, RecipeError,
                               apply_recipe, describe, fit_recipe, fit_recipe_maps, raw_features)
from boundest.generators import BIN_PACKING, JOBSHOP, GenSpec, generate_batch
from oracles import two_pass_mean_std


def with_params(params, name="p"):
    return CopInstance(name, (Variable("z", Domain(0, 9), OBJECTIVE),), (Constraint.le([(1, "z")], 9),),
                       "z", params)


def test_constant_array():
    stats = describe([2, 2, 2, 2])
    assert stats == {"count": 4, "min": 2, "max": 2, "mean": 2, "median": 2, "std": 0,
                     "iqr": 0, "skew": 0, "kurtosis": 0}


def test_quartile_rule():
    # positions 0.75 and 2.25 between ranks: Q1 = 1.75, Q3 = 3.25
    stats = describe([4, 1, 3, 2])
    assert stats["mean"] == 2.5 and stats["median"] == 2.5
    assert stats["iqr"] == pytest.approx(1.5, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=40))
def test_describe_against_reference(values):
    stats = describe(values)
    arr = np.asarray(values, dtype=float)
    assert list(stats) == list(STAT_NAMES)
    assert stats["std"] == pytest.approx(np.std(arr), abs=1e-9)
    q1, q3 = np.percentile(arr, [25, 75])
    assert stats["iqr"] == pytest.approx(q3 - q1, abs=1e-9)
    assert stats["median"] == pytest.approx(np.median(arr), abs=1e-9)
    if arr.max() > arr.min():
        assert stats["skew"] == pytest.approx(scipy.stats.skew(arr, bias=True), rel=1e-7, abs=1e-9)
        assert stats["kurtosis"] == pytest.approx(scipy.stats.kurtosis(arr, fisher=True, bias=True),
                                                  rel=1e-7, abs=1e-9)
    else:
        assert stats["skew"] == stats["kurtosis"] == 0


def test_ratios():
    variables = tuple(Variable(f"x{i}", Domain(0, 1)) for i in range(9)) + (Variable("z", Domain(0, 9), OBJECTIVE),)
    cons = tuple(Constraint.le([(1, f"x{i}"), (-1, "z")], 0) for i in range(7))
    feats = raw_features(CopInstance("r", variables, cons, "z"))
    assert feats["model.vars_per_constraint"] == pytest.approx(10 / 7)
    assert feats["model.constraints_per_var"] == pytest.approx(0.7)
    assert feats["objective.degree"] == 7
    assert feats["objective.domain_size"] == 10


def test_scalar_params_copied():
    feats = raw_features(with_params({"cap": 12, "w": [1, 2]}))
    assert feats["param.cap"] == 12
    assert feats["param.w.count"] == 2


@pytest.mark.parametrize("family", [BIN_PACKING, JOBSHOP])
def test_feature_count_constant_per_family(family):
    names = {tuple(raw_features(m)) for m in generate_batch(GenSpec(family, 4), 30)}
    assert len(names) == 1


def test_identical_instances_rejected():
    m = with_params({"w": [1, 2, 3]})
    with pytest.raises(RecipeError):
        fit_recipe([m, m])
    with pytest.raises(RecipeError):
        fit_recipe([m])


def test_recipe_stores_training_moments():
    values = [8.0, 12.0, 8.0, 12.0, 10.0, 10.0]
    maps = [{"f": v, "c": 1.0} for v in values]
    r = fit_recipe_maps(maps)
    assert r.kept_features == ("f",)
    mean, std = two_pass_mean_std(values)
    assert r.means == pytest.approx((mean,), abs=1e-12)
    assert r.stds == pytest.approx((std,), abs=1e-12)
    assert mean == pytest.approx(10) and std == pytest.approx(np.sqrt(8 / 3))


@pytest.mark.parametrize("family", [BIN_PACKING, JOBSHOP])
def test_standardization_identity(family):
    batch = generate_batch(GenSpec(family, 9), 40)
    r = fit_recipe(batch)
    x = np.asarray([apply_recipe(m, r).values for m in batch])
    assert np.abs(x.mean(axis=0)).max() < 1e-9
    assert np.abs(x.std(axis=0) - 1).max() < 1e-9


def test_minmax_range():
    batch = generate_batch(GenSpec(JOBSHOP, 2), 25)
    r = fit_recipe(batch, MINMAX)
    x = np.asarray([apply_recipe(m, r).values for m in batch])
    assert np.allclose(x.min(axis=0), 0) and np.allclose(x.max(axis=0), 1)
    assert r.means is None


def test_unseen_at_training_mean_maps_to_zero():
    train = [with_params({"w": [v, v + 2]}, f"t{v}") for v in (1, 3, 5)]
    r = fit_recipe(train)
    new = with_params({"w": [3, 5]}, "new")
    fv = dict(zip(r.kept_features, apply_recipe(new, r).values))
    assert fv["param.w.mean"] == pytest.approx(0, abs=1e-12)


def test_schema_mismatch():
    train = [with_params({"w": [v, 2 * v]}, f"t{v}") for v in (1, 2, 3)]
    r = fit_recipe(train)
    with pytest.raises(FeatureSchemaError, match="param.w"):
        apply_recipe(with_params({"v": [1, 2]}), r)


def test_recipe_not_changed_by_use():
    batch = generate_batch(GenSpec(BIN_PACKING, 1), 10)
    r = fit_recipe(batch)
    snapshot = dataclasses.replace(r)
    first = apply_recipe(batch[0], r)
    for m in batch:
        apply_recipe(m, r)
    assert r == snapshot
    assert apply_recipe(batch[0], r) == first


def test_raw_features_pure():
    m = generate_batch(GenSpec(JOBSHOP, 3), 1)[0]
    assert raw_features(m) == raw_features(m)


def test_recipe_json_round_trip():
    r = fit_recipe(generate_batch(GenSpec(JOBSHOP, 8), 12), STANDARDIZE)
    assert type(r).from_json(r.to_json()) == r
