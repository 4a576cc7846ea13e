"""Comparison regressors for the ELM: linear regression plus two small neural networks.

Every model offers ``predict(Z)`` and ``to_dict()`` with a ``model_type`` tag,
like :class:`aeelm.elm.ElmModel`, so the pipeline treats them uniformly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist, pdist
from scipy.special import expit as sigmoid

from .autoencoder import TrainHyper, glorot_uniform, momentum_descent, two_layer_backward
from .errors import InputError


def _xy(Z, y):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z.reshape(-1, 1)
    y = np.asarray(y, dtype=float).ravel()
    if Z.shape[0] != y.size:
        raise InputError(f"{y.size} targets for {Z.shape[0]} feature rows")
    if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(y))):
        raise InputError("non-finite training data")
    return Z, y


def _check_dim(Z, dim):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z.reshape(-1, 1) if dim == 1 else Z.reshape(1, -1)
    if Z.shape[1] != dim:
        raise InputError(f"feature dimension {Z.shape[1]} does not match model ({dim})")
    return Z


def _save(model, path):
    Path(path).write_text(json.dumps(model.to_dict()) + "\n", encoding="utf-8")


# -- multiple linear regression ---------------------------------------------


@dataclass
class MlrModel:
    coefficients: np.ndarray = field(repr=False)
    intercept: float = 0.0

    model_type = "mlr"

    def predict(self, Z):
        Z = _check_dim(Z, self.coefficients.size)
        return Z @ self.coefficients + self.intercept

    def to_dict(self):
        return {"model_type": self.model_type, "coefficients": self.coefficients.tolist(),
                "intercept": self.intercept}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["coefficients"], dtype=float), float(d["intercept"]))

    save = _save


def train_mlr(Z, y):
    """Ordinary least squares with intercept; rank deficiency -> minimum-norm solution."""
    Z, y = _xy(Z, y)
    N, p = Z.shape
    if N <= p:
        raise InputError(f"MLR needs more rows than features (N={N}, p={p})")
    A = np.column_stack([Z, np.ones(N)])
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    return MlrModel(sol[:p], float(sol[p]))


# -- backprop network --------------------------------------------------------


@dataclass
class BpModel:
    """Sigmoid hidden layer + linear output; targets are standardized internally."""

    W1: np.ndarray = field(repr=False)
    b1: np.ndarray = field(repr=False)
    W2: np.ndarray = field(repr=False)  # (1, hidden)
    b2: np.ndarray = field(repr=False)  # (1,)
    y_mean: float = 0.0
    y_scale: float = 1.0

    model_type = "bp"

    @property
    def input_dim(self):
        return self.W1.shape[1]

    def copy(self):
        return BpModel(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy(),
                       self.y_mean, self.y_scale)

    def forward(self, Z):
        H = sigmoid(Z @ self.W1.T + self.b1)
        return H, (H @ self.W2.T + self.b2)[:, 0]

    def predict(self, Z):
        Z = _check_dim(Z, self.input_dim)
        return self.forward(Z)[1] * self.y_scale + self.y_mean

    def to_dict(self):
        return {"model_type": self.model_type, "W1": self.W1.tolist(), "b1": self.b1.tolist(),
                "W2": self.W2.tolist(), "b2": self.b2.tolist(),
                "y_mean": self.y_mean, "y_scale": self.y_scale}

    @classmethod
    def from_dict(cls, d):
        return cls(*(np.array(d[k], dtype=float) for k in ("W1", "b1", "W2", "b2")),
                   float(d["y_mean"]), float(d["y_scale"]))

    save = _save


def bp_loss_and_grad(model, Z, t):
    """Mean squared error on standardized targets ``t`` and its exact gradient."""
    H, out = model.forward(Z)
    r = out - t
    value = float(np.mean(r * r))
    out_delta = (2.0 / Z.shape[0]) * r[:, None]
    dW1, db1, dW2, db2 = two_layer_backward(Z, H, out_delta, model.W2)
    return value, {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2}


BP_HYPER = TrainHyper(learning_rate=0.2, momentum=0.9, max_epochs=5000, tol=1e-10)


def train_bp(Z, y, hidden=10, hyper=BP_HYPER, seed=0):
    Z, y = _xy(Z, y)
    if hidden < 1:
        raise InputError("hidden must be >= 1")
    rng = np.random.default_rng(seed)
    p = Z.shape[1]
    y_mean = float(y.mean())
    y_scale = float(y.std()) or 1.0
    model = BpModel(glorot_uniform(rng, hidden, p), np.zeros(hidden),
                    glorot_uniform(rng, 1, hidden), np.zeros(1), y_mean, y_scale)
    t = (y - y_mean) / y_scale
    model, _ = momentum_descent(model, lambda m: bp_loss_and_grad(m, Z, t), hyper)
    return model


# -- RBF network ---------------------------------------------------------------


@dataclass
class RbfModel:
    centers: np.ndarray = field(repr=False)
    sigma: float = 1.0
    weights: np.ndarray = field(default=None, repr=False)
    intercept: float = 0.0

    model_type = "rbf"

    def design(self, Z):
        d2 = cdist(Z, self.centers, "sqeuclidean")
        return np.exp(-d2 / (2.0 * self.sigma * self.sigma))

    def predict(self, Z):
        Z = _check_dim(Z, self.centers.shape[1])
        return self.design(Z) @ self.weights + self.intercept

    def to_dict(self):
        return {"model_type": self.model_type, "centers": self.centers.tolist(),
                "sigma": self.sigma, "weights": self.weights.tolist(),
                "intercept": self.intercept}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["centers"], dtype=float), float(d["sigma"]),
                   np.array(d["weights"], dtype=float), float(d["intercept"]))

    save = _save


@dataclass(frozen=True)
class KMeansResult:
    centers: np.ndarray
    labels: np.ndarray
    objective: tuple  # within-cluster sum of squares after each iteration


def kmeans(Z, k, seed=0, max_iter=100):
    """Lloyd's algorithm started from ``k`` random distinct rows."""
    Z = np.asarray(Z, dtype=float)
    distinct = np.unique(Z, axis=0)
    if distinct.shape[0] < k:
        raise InputError(f"only {distinct.shape[0]} distinct rows for {k} centers")
    rng = np.random.default_rng(seed)
    centers = distinct[np.sort(rng.choice(distinct.shape[0], size=k, replace=False))].copy()
    trace = []
    labels = None
    for _ in range(max_iter):
        d2 = cdist(Z, centers, "sqeuclidean")
        new_labels = np.argmin(d2, axis=1)
        trace.append(float(d2[np.arange(Z.shape[0]), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = Z[labels == j]
            if members.size:  # empty clusters keep their previous center
                centers[j] = members.mean(axis=0)
    return KMeansResult(centers, labels, tuple(trace))


def train_rbf(Z, y, centers=25, seed=0, width_floor=1e-3):
    """k-means centers, median-distance width, least-squares output layer."""
    Z, y = _xy(Z, y)
    if not 1 <= centers <= Z.shape[0]:
        raise InputError(f"centers must lie in [1, N={Z.shape[0]}], got {centers}")
    km = kmeans(Z, centers, seed)
    sigma = float(np.median(pdist(km.centers))) if centers > 1 else 0.0
    if not math.isfinite(sigma) or sigma < width_floor:
        sigma = width_floor
    model = RbfModel(km.centers, sigma, np.zeros(centers), 0.0)
    A = np.column_stack([model.design(Z), np.ones(Z.shape[0])])
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    model.weights = sol[:centers]
    model.intercept = float(sol[centers])
    return model


def model_from_dict(d):
    """Rebuild any regressor from its JSON envelope."""
    from .elm import ElmModel

    kinds = {"elm": ElmModel, "mlr": MlrModel, "bp": BpModel, "rbf": RbfModel}
    kind = d.get("model_type")
    if kind not in kinds:
        raise InputError(f"unknown or missing model_type {kind!r}; expected one of {sorted(kinds)}")
    try:
        return kinds[kind].from_dict(d)
    except KeyError as exc:
        raise InputError(f"{kind} model JSON lacks field {exc.args[0]!r}") from None


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
