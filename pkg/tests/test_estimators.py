import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boundest.cop import Domain
from boundest.estimators import (GTB, KNN, LR, MLP, SHIFTED, Estimation, Estimator, LabelShift,
                                 LossSpec, UnsupportedCombination, estimate, is_admissible,
                                 load_estimator, save_estimator, train, train_arrays)
from boundest.estimators.gtb import GTBModel, RegressionTree
from boundest.estimators.knn import KNNModel
from boundest.estimators.linear import LinearModel
from boundest.estimators.mlp import MLPModel
from boundest.features import FeatureSchemaError, apply_recipe, fit_recipe, raw_features
from boundest.generators import BIN_PACKING, JOBSHOP, GenSpec, generate, generate_batch
from boundest.solver import solve

ASYM = LossSpec(SHIFTED, -1.0)


def synthetic(n=120, seed=0, noise=1.0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 3))
    y = 50 + 8 * x[:, 0] - 3 * x[:, 1] ** 2 + rng.normal(scale=noise, size=n)
    return x, y, np.zeros(n), np.full(n, 100.0)


def test_lr_exact_fit():
    model = LinearModel().fit(np.array([[0.0], [1.0], [2.0]]), np.array([0.0, 1.0, 2.0]))
    assert model.weights[0] == pytest.approx(1, abs=1e-9)
    assert model.intercept == pytest.approx(0, abs=1e-9)
    assert not model.ridge_used


def test_lr_singular_falls_back_to_ridge():
    x = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    model = LinearModel().fit(x, np.array([1.0, 2.0, 3.0]))
    assert model.ridge_used
    assert np.allclose(model.predict(x), [1, 2, 3], atol=1e-6)


@pytest.mark.parametrize("kind", [LR, KNN])
def test_asymmetric_loss_rejected(kind):
    x, y, lb, ub = synthetic(20)
    with pytest.raises(UnsupportedCombination):
        train_arrays(kind, x, y, lb, ub, LossSpec(SHIFTED, -0.5))


def test_knn_memorizes():
    x, y, _, _ = synthetic(30)
    assert np.array_equal(KNNModel(1).fit(x, y).predict(x), y)
    assert np.allclose(KNNModel(4, "distance").fit(x, y).predict(x), y)


def test_knn_uniform_average():
    x = np.array([[0.0], [1.0], [3.0], [10.0]])
    y = np.array([0.0, 2.0, 4.0, 100.0])
    assert KNNModel(3).fit(x, y).predict(np.array([[1.2]]))[0] == pytest.approx(2.0)


@pytest.mark.parametrize("lr", [0.05, 0.1, 0.3])
@pytest.mark.parametrize("loss", [LossSpec(), ASYM, LossSpec(SHIFTED, 0.6)])
def test_gtb_training_loss_non_increasing(lr, loss):
    x, y, _, _ = synthetic(80)
    hist = GTBModel(rounds=40, learning_rate=lr).fit(x, y, loss).loss_history
    assert all(b <= a + 1e-9 for a, b in zip(hist, hist[1:]))
    assert hist[-1] < hist[0]


def test_asymmetric_gtb_underestimates_less():
    x, y, lb, ub = synthetic(200, noise=4.0)
    xt, yt, _, _ = synthetic(200, seed=1, noise=4.0)
    sym = train_arrays(GTB, x, y, lb, ub, companion=False)
    asym = train_arrays(GTB, x, y, lb, ub, ASYM, companion=False)
    under_sym = (sym.predict_bounds(xt)[1] < yt).sum()
    under_asym = (asym.predict_bounds(xt)[1] < yt).sum()
    assert under_asym < under_sym


def test_tree_split_on_step():
    x = np.array([[0.0], [1.0], [2.0], [3.0]])
    t = np.array([1.0, 1.0, 5.0, 5.0])
    tree = RegressionTree().fit(x, t, max_depth=3)
    assert np.array_equal(tree.predict(x), t)
    assert tree.feature[0] == 0 and 1.0 <= tree.threshold[0] < 2.0


def _mlp_fd_check(loss):
    rng = np.random.default_rng(3)
    x = rng.normal(size=(3, 4))
    y = rng.normal(size=3) * 3
    model = MLPModel(hidden=(5, 4))
    model.init_params(4, rng)
    gw, gb = model.batch_gradients(x, y, loss)
    h = 1e-6
    for analytic, params in ((gw, model.weights), (gb, model.biases)):
        for g, p in zip(analytic, params):
            flat = p.reshape(-1)
            num = np.empty_like(flat)
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + h
                up = model.batch_loss(x, y, loss)
                flat[i] = keep - h
                down = model.batch_loss(x, y, loss)
                flat[i] = keep
                num[i] = (up - down) / (2 * h)
            assert np.allclose(g.reshape(-1), num, atol=1e-6, rtol=1e-5)


@pytest.mark.parametrize("loss", [LossSpec(), LossSpec(SHIFTED, -0.8)])
def test_mlp_gradient_finite_difference(loss):
    _mlp_fd_check(loss)


def test_mlp_learns():
    x, y, lb, ub = synthetic(150)
    est = train_arrays(MLP, x, y, lb, ub, hyperparams={"epochs": 150}, companion=False)
    resid = est.predict_bounds(x)[1] - y
    assert np.sqrt(np.mean(resid ** 2)) < 0.5 * np.std(y)


def test_estimation_rounding():
    dom = Domain(0, 100)
    assert Estimation.from_predictions(12.3, 47.9, dom) == Estimation(12, 48)
    assert Estimation.from_predictions(-5, 150, dom) == Estimation(0, 100)
    assert Estimation.from_predictions(60, 40, dom) == Estimation(40, 60)


@pytest.mark.parametrize("lo, hi, z, expected", [(10, 40, 25, True), (10, 40, 41, False),
                                                 (25, 25, 25, True), (10, 40, 9, False)])
def test_is_admissible(lo, hi, z, expected):
    assert is_admissible(Estimation(lo, hi), z) is expected


@settings(max_examples=60, deadline=None)
@given(st.floats(-200, 200), st.floats(-200, 200), st.integers(-20, 20), st.integers(0, 60))
def test_estimation_in_domain_and_ordered(a, b, lb, span):
    dom = Domain(lb, lb + span)
    est = Estimation.from_predictions(a, b, dom)
    assert dom.lb <= est.lo <= est.hi <= dom.ub


@pytest.fixture(scope="module")
def corpus():
    ms = generate_batch(GenSpec(JOBSHOP, 21, jobs=(2, 3), machines=(2, 3)), 40)
    return ms, [solve(m).best_objective for m in ms]


def _dataset(ms, ys, recipe):
    return [(apply_recipe(m, recipe), y, m.objective_domain) for m, y in zip(ms, ys)]


@pytest.mark.parametrize("kind, loss", [(LR, LossSpec()), (KNN, LossSpec()), (GTB, ASYM), (MLP, ASYM)])
def test_serialization_round_trip(tmp_path, corpus, kind, loss):
    ms, ys = corpus
    recipe = fit_recipe(ms)
    hp = {"epochs": 20} if kind == MLP else {"rounds": 20} if kind == GTB else None
    e = train(kind, _dataset(ms, ys, recipe), loss, LabelShift(0.2), hp, recipe, seed=4)
    path = tmp_path / "model.json"
    save_estimator(e, path)
    back = load_estimator(path)
    x = recipe.matrix([raw_features(m) for m in ms])
    for a, b in zip(e.predict_bounds(x), back.predict_bounds(x)):
        assert np.array_equal(a, b)
    assert back.dumps() == e.dumps()
    assert [estimate(back, m) for m in ms] == [estimate(e, m) for m in ms]


def test_training_deterministic(corpus):
    ms, ys = corpus
    recipe = fit_recipe(ms)
    data = _dataset(ms, ys, recipe)
    hp = {"rounds": 15, "subsample": 0.7}
    assert train(GTB, data, ASYM, hyperparams=hp, recipe=recipe, seed=3).dumps() == \
        train(GTB, data, ASYM, hyperparams=hp, recipe=recipe, seed=3).dumps()


def test_companion_gives_lower_bound(corpus):
    ms, ys = corpus
    recipe = fit_recipe(ms)
    e = train(GTB, _dataset(ms, ys, recipe), ASYM, LabelShift(0.2), recipe=recipe)
    lower, upper = e.predict_bounds(recipe.matrix([raw_features(m) for m in ms]))
    assert lower is not None
    assert np.all(lower <= upper)
    ests = [estimate(e, m) for m in ms]
    assert sum(is_admissible(est, y) for est, y in zip(ests, ys)) >= 0.9 * len(ms)


def test_schema_mismatch_on_estimate(corpus):
    ms, ys = corpus
    recipe = fit_recipe(ms)
    e = train(GTB, _dataset(ms, ys, recipe), hyperparams={"rounds": 5}, recipe=recipe)
    with pytest.raises(FeatureSchemaError):
        estimate(e, generate(GenSpec(BIN_PACKING, 1)))


def test_mixed_schemas_rejected(corpus):
    ms, ys = corpus
    recipe = fit_recipe(ms)
    other = fit_recipe(generate_batch(GenSpec(BIN_PACKING, 3), 5))
    bad = _dataset(ms[:3], ys[:3], recipe) + [(apply_recipe(generate(GenSpec(BIN_PACKING, 9)), other), 3, Domain(1, 9))]
    with pytest.raises(FeatureSchemaError):
        train(GTB, bad)


def test_loading_rejects_bad_tree(corpus):
    ms, ys = corpus
    recipe = fit_recipe(ms)
    doc = train(GTB, _dataset(ms, ys, recipe), hyperparams={"rounds": 3}, recipe=recipe).to_json()
    doc = json.loads(json.dumps(doc))
    doc["primary"]["trees"][0]["feature"][0] = 10 ** 6
    with pytest.raises(ValueError):
        Estimator.from_json(doc)
