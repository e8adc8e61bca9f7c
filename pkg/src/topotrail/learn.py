"""L2-penalized binary logistic regression trained by full-batch gradient descent."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NumericError, ValidationError


@dataclass(frozen=True, eq=False)
class LabeledSample:
    features: np.ndarray
    label: int


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray  # acts on standardized features
    intercept: float
    C: float
    mean: np.ndarray
    scale: np.ndarray
    iterations: int = 0
    grad_norm: float = math.nan

    @property
    def feature_length(self) -> int:
        return len(self.weights)

    def to_json(self) -> str:
        return json.dumps(
            {
                "weights": self.weights.tolist(),
                "intercept": self.intercept,
                "C": self.C,
                "mean": self.mean.tolist(),
                "scale": self.scale.tolist(),
                "feature_length": self.feature_length,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "LogisticModel":
        d = json.loads(text)
        model = cls(
            np.array(d["weights"], dtype=float),
            float(d["intercept"]),
            float(d["C"]),
            np.array(d["mean"], dtype=float),
            np.array(d["scale"], dtype=float),
        )
        if model.feature_length != d["feature_length"]:
            raise ValidationError("feature_length does not match the stored weights")
        return model


def _as_arrays(samples: Sequence[LabeledSample]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([np.asarray(s.features, dtype=float) for s in samples])
    y = np.array([int(s.label) for s in samples])
    if X.ndim != 2:
        raise ValidationError("feature vectors must share one length")
    if not np.all(np.isfinite(X)):
        raise ValidationError("features must be finite")
    if not np.all((y == 0) | (y == 1)):
        raise ValidationError("labels must be 0 or 1")
    return X, y


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def train_test_split(samples: Sequence, train_fraction: float = 0.65, seed: int = 0, labels=None):
    """Seeded shuffle split with round-half-up train size, stratified by label.

    Works on any sequence; labels come from ``labels`` or each item's
    ``.label``. Returns (train, test) lists, or index arrays when
    ``samples`` is an integer count.
    """
    if isinstance(samples, (int, np.integer)):
        items = None
        n = int(samples)
    else:
        items = list(samples)
        n = len(items)
    if not 0 < train_fraction < 1:
        raise ValidationError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if n < 2:
        raise ValidationError("need at least two samples")
    if labels is None:
        if items is None:
            raise ValidationError("labels are required when splitting a count")
        labels = [s.label for s in items]
    labels = np.asarray(labels)
    n_train = _round_half_up(n * train_fraction)
    if not 0 < n_train < n:
        raise ValidationError(f"train size {n_train} of {n} leaves a split empty; choose another fraction")

    rng = np.random.default_rng(seed)
    classes = sorted(set(labels.tolist()))
    groups = {c: rng.permutation(np.nonzero(labels == c)[0]) for c in classes}
    # largest-remainder allocation keeps per-class shares and the total train size
    quotas = {c: len(groups[c]) * n_train / n for c in classes}
    alloc = {c: math.floor(quotas[c]) for c in classes}
    leftover = n_train - sum(alloc.values())
    for c in sorted(classes, key=lambda c: (-(quotas[c] - alloc[c]), c))[:leftover]:
        alloc[c] += 1
    if len(classes) > 1:
        for c in classes:
            if alloc[c] == 0 or alloc[c] == len(groups[c]):
                raise ValidationError(
                    f"class {c} would be missing from a split ({len(groups[c])} samples); choose another fraction"
                )
    train_idx = np.sort(np.concatenate([groups[c][: alloc[c]] for c in classes]))
    test_idx = np.sort(np.concatenate([groups[c][alloc[c] :] for c in classes]))
    if items is None:
        return train_idx, test_idx
    return [items[i] for i in train_idx], [items[i] for i in test_idx]


def standardize_params(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale <= 1e-12 * np.maximum(1.0, np.abs(mean))] = 1.0
    return mean, scale


def _log1pexp(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def objective(params: np.ndarray, Z: np.ndarray, y_signed: np.ndarray, C: float) -> float:
    """0.5 |w|^2 + C * sum log(1 + exp(-y (Z w + c))), params = [w..., c]."""
    w, c = params[:-1], params[-1]
    margins = y_signed * (Z @ w + c)
    return 0.5 * float(w @ w) + C * float(np.sum(_log1pexp(-margins)))


def gradient(params: np.ndarray, Z: np.ndarray, y_signed: np.ndarray, C: float) -> np.ndarray:
    w, c = params[:-1], params[-1]
    margins = y_signed * (Z @ w + c)
    coef = -C * y_signed * _sigmoid(-margins)
    g = np.empty_like(params)
    g[:-1] = w + Z.T @ coef
    g[-1] = coef.sum()
    return g


_EPS = np.finfo(float).eps


def _minimize(Z, ys, C, x0, max_iter, tol):
    """Nesterov-accelerated gradient descent with backtracking and restart."""
    f = lambda p: objective(p, Z, ys, C)
    grad = lambda p: gradient(p, Z, ys, C)
    x = x0.copy()
    fx = f(x)
    y = x.copy()
    step, t = 1.0, 1.0
    g = grad(x)
    it = 0
    for it in range(1, max_iter + 1):
        gy = grad(y)
        fy = f(y)
        while True:
            cand = y - step * gy
            fc = f(cand)
            if not math.isfinite(fc):
                if step < 1e-300:
                    raise NumericError(it, "non-finite loss")
                step *= 0.5
                continue
            if fc <= fy - 0.5 * step * float(gy @ gy) + 4 * _EPS * abs(fy):
                break
            step *= 0.5
            if step < 1e-300:
                raise NumericError(it, "line search failed")
        if fc > fx:
            if t > 1.0:
                # restart momentum from the current iterate
                y, t = x.copy(), 1.0
                continue
            # plain step, loss flat to rounding: progress is judged by the gradient
            gc = grad(cand)
            if np.max(np.abs(gc)) >= np.max(np.abs(g)):
                if step < 1e-12:
                    break
                step *= 0.5
                continue
            x, fx, g, y = cand, fc, gc, cand.copy()
            if np.max(np.abs(g)) < tol:
                break
            continue
        t_next = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = cand + ((t - 1) / t_next) * (cand - x)
        x, fx, t = cand, fc, t_next
        g = grad(x)
        if not np.all(np.isfinite(g)):
            raise NumericError(it, "non-finite gradient")
        if np.max(np.abs(g)) < tol:
            break
        step *= 2.0
    return x, it, float(np.max(np.abs(g)))


def fit(
    train: Sequence[LabeledSample],
    C: float = 1.0,
    max_iter: int = 5000,
    tol: float = 1e-6,
    init: np.ndarray | None = None,
) -> LogisticModel:
    """Train on standardized features; labels {0, 1} map to {-1, +1}."""
    if len(train) == 0:
        raise ValidationError("empty training set")
    if not C > 0:
        raise ValidationError(f"C must be positive, got {C}")
    X, y = _as_arrays(train)
    if len(set(y.tolist())) < 2:
        raise ValidationError("training set needs both labels")
    mean, scale = standardize_params(X)
    Z = (X - mean) / scale
    ys = 2.0 * y - 1.0
    x0 = np.zeros(X.shape[1] + 1) if init is None else np.asarray(init, dtype=float).copy()
    params, iters, gnorm = _minimize(Z, ys, C, x0, max_iter, tol)
    return LogisticModel(params[:-1].copy(), float(params[-1]), float(C), mean, scale, iters, gnorm)


def decision_function(model: LogisticModel, features) -> np.ndarray:
    X = np.atleast_2d(np.asarray(features, dtype=float))
    if X.shape[1] != model.feature_length:
        raise ValidationError(f"expected {model.feature_length} features, got {X.shape[1]}")
    return ((X - model.mean) / model.scale) @ model.weights + model.intercept


def predict(model: LogisticModel, features) -> tuple[int, float]:
    """Label and probability of label 1; ties at 0.5 go to label 1."""
    p = float(_sigmoid(decision_function(model, features))[0])
    return (1 if p >= 0.5 else 0), p


def predict_many(model: LogisticModel, X) -> tuple[np.ndarray, np.ndarray]:
    p = _sigmoid(decision_function(model, X))
    return (p >= 0.5).astype(int), p


def accuracy(model: LogisticModel, test: Sequence[LabeledSample]) -> float:
    if len(test) == 0:
        raise ValidationError("empty test set")
    X, y = _as_arrays(test)
    labels, _ = predict_many(model, X)
    return float(np.mean(labels == y))
