import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from topotrail.errors import ValidationError
from topotrail.learn import (
    LabeledSample,
    LogisticModel,
    accuracy,
    fit,
    gradient,
    objective,
    predict,
    standardize_params,
    train_test_split,
)


def samples(X, y):
    return [LabeledSample(np.atleast_1d(np.asarray(x, dtype=float)), int(l)) for x, l in zip(X, y)]


def balanced(n):
    return samples(np.arange(n)[:, None], [i % 2 for i in range(n)])


def test_split_sizes_240():
    tr, te = train_test_split(balanced(240), 0.65, seed=0)
    assert (len(tr), len(te)) == (156, 84)


def test_split_sizes_50():
    tr, te = train_test_split(balanced(50), 0.65, seed=0)
    assert (len(tr), len(te)) == (33, 17)
    assert sum(s.label for s in tr) in (16, 17)


def test_split_deterministic_and_disjoint():
    data = balanced(30)
    a = train_test_split(data, 0.65, seed=3)
    b = train_test_split(data, 0.65, seed=3)
    assert [id(s) for s in a[0]] == [id(s) for s in b[0]]
    assert {id(s) for s in a[0]}.isdisjoint({id(s) for s in a[1]})
    assert len(a[0]) + len(a[1]) == 30


def test_split_errors():
    with pytest.raises(ValidationError):
        train_test_split(balanced(10), 1.0)
    with pytest.raises(ValidationError):
        train_test_split(balanced(1), 0.5)
    lopsided = samples(np.zeros((10, 1)), [1] + [0] * 9)
    with pytest.raises(ValidationError):
        train_test_split(lopsided, 0.65)


def test_separable_1d():
    X = np.concatenate([np.linspace(-3, -0.5, 20), np.linspace(0.5, 3, 20)])
    y = (X > 0).astype(int)
    model = fit(samples(X, y), C=1.0)
    assert accuracy(model, samples(X, y)) == 1.0
    assert model.weights[0] > 0


def test_constant_features_give_logit_intercept():
    y = np.array([1] * 7 + [0] * 3)
    X = np.ones((10, 3))
    model = fit(samples(X, y), C=0.5, tol=1e-10)
    assert np.allclose(model.weights, 0, atol=1e-12)
    # intercept-only objective, minimized independently
    ref = minimize_scalar(lambda c: 0.5 * np.sum(np.logaddexp(0, -(2 * y - 1) * c)), bounds=(-10, 10), method="bounded",
                          options={"xatol": 1e-12})
    assert model.intercept == pytest.approx(ref.x, abs=1e-6)
    assert model.intercept == pytest.approx(math.log(7 / 3), abs=1e-8)


def test_stopping_gradient_below_tol():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(60, 5))
    y = (X[:, 0] + 0.5 * rng.normal(size=60) > 0).astype(int)
    model = fit(samples(X, y), C=1.0, tol=1e-6)
    mean, scale = standardize_params(X)
    g = gradient(np.append(model.weights, model.intercept), (X - mean) / scale, 2.0 * y - 1, 1.0)
    assert np.max(np.abs(g)) < 1e-6


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    Z = rng.normal(size=(30, 6))
    ys = rng.choice([-1.0, 1.0], size=30)
    h = 1e-6
    for _ in range(10):
        p = rng.normal(size=7)
        g = gradient(p, Z, ys, 0.7)
        fd = np.array([(objective(p + h * e, Z, ys, 0.7) - objective(p - h * e, Z, ys, 0.7)) / (2 * h) for e in np.eye(7)])
        assert np.linalg.norm(fd - g) <= 1e-5 * np.linalg.norm(g)


def test_two_inits_agree():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(40, 4))
    y = (X @ [1.0, -1.0, 0.5, 0.0] + rng.normal(size=40) > 0).astype(int)
    data = samples(X, y)
    a = fit(data, tol=1e-9)
    b = fit(data, tol=1e-9, init=rng.normal(size=5) * 3)
    mean, scale = standardize_params(X)
    Z, ys = (X - mean) / scale, 2.0 * y - 1
    fa = objective(np.append(a.weights, a.intercept), Z, ys, 1.0)
    fb = objective(np.append(b.weights, b.intercept), Z, ys, 1.0)
    assert abs(fa - fb) < 1e-6


def test_training_accuracy_monotone_in_C():
    rng = np.random.default_rng(3)
    X = np.concatenate([rng.normal(-1, 1, size=(30, 2)), rng.normal(1, 1, size=(30, 2))])
    y = np.array([0] * 30 + [1] * 30)
    data = samples(X, y)
    accs = [accuracy(fit(data, C=c), data) for c in (10.0, 0.1, 0.001)]
    assert accs[0] >= accs[1] >= accs[2]


def test_fit_errors():
    with pytest.raises(ValidationError):
        fit(samples(np.zeros((4, 2)), [1, 1, 1, 1]))
    with pytest.raises(ValidationError):
        fit(balanced(4), C=0)
    with pytest.raises(ValidationError):
        fit([])


def test_deterministic():
    data = balanced(20)
    a, b = fit(data), fit(data)
    assert np.array_equal(a.weights, b.weights) and a.intercept == b.intercept


def _model(w, c):
    w = np.asarray(w, dtype=float)
    return LogisticModel(w, c, 1.0, np.zeros(len(w)), np.ones(len(w)))


def test_predict():
    assert predict(_model([0.0], 0.0), [5.0]) == (1, 0.5)
    label, p = predict(_model([10.0], 0.0), [100.0])
    assert label == 1 and p == pytest.approx(1.0)
    label, p = predict(_model([1.0], -0.3), [0.1])
    label0 = predict(_model([-1.0], 0.3), [0.1])[1]
    assert p + label0 == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        predict(_model([1.0], 0), [1.0, 2.0])


def test_accuracy_counts():
    m = _model([1.0], 0.0)
    good = samples([[1.0]] * 42 + [[-1.0]] * 42, [1] * 42 + [0] * 42)
    assert accuracy(m, good) == 1.0
    bad = samples([[1.0]] * 42 + [[-1.0]] * 42, [0] * 42 + [1] * 42)
    assert accuracy(m, bad) == 0.0
    half = samples([[1.0]] * 84, [1] * 42 + [0] * 42)
    assert accuracy(m, half) == 0.5
    with pytest.raises(ValidationError):
        accuracy(m, [])


def test_model_json_round_trip():
    data = balanced(12)
    m = fit(data)
    back = LogisticModel.from_json(m.to_json())
    assert np.array_equal(back.weights, m.weights) and back.intercept == m.intercept
    assert accuracy(back, data) == accuracy(m, data)
