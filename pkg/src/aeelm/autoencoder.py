"""Single-hidden-layer sigmoid autoencoder trained by full-batch gradient descent.

The encoder output ``h = sigmoid(W1 x + b1)`` is the compressed feature
vector handed to downstream regressors; the decoder
``z = sigmoid(W2 h + b2)`` reconstructs the (min-max scaled) input. The loss
is the mean over rows of ||z - x||^2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit as sigmoid

from .errors import InputError, TrainingDivergedError

PARAM_NAMES = ("W1", "b1", "W2", "b2")


@dataclass
class AutoencoderModel:
    W1: np.ndarray = field(repr=False)  # (hidden, input)
    b1: np.ndarray = field(repr=False)
    W2: np.ndarray = field(repr=False)  # (input, hidden)
    b2: np.ndarray = field(repr=False)

    @property
    def input_dim(self):
        return self.W1.shape[1]

    @property
    def hidden_dim(self):
        return self.W1.shape[0]

    def params(self):
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self):
        return AutoencoderModel(*(getattr(self, n).copy() for n in PARAM_NAMES))

    def to_dict(self):
        return {
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "W1": self.W1.tolist(),
            "b1": self.b1.tolist(),
            "W2": self.W2.tolist(),
            "b2": self.b2.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        m = cls(*(np.array(d[n], dtype=float) for n in PARAM_NAMES))
        if m.input_dim != d["input_dim"] or m.hidden_dim != d["hidden_dim"]:
            raise InputError("autoencoder JSON dimensions do not match its arrays")
        return m

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def transform(self, X):
        """Encode every row of X."""
        return encode(self, X)


@dataclass
class TrainingHistory:
    losses: list = field(default_factory=list)

    @property
    def epochs_run(self):
        return len(self.losses)

    @property
    def final_loss(self):
        return min(self.losses) if self.losses else math.nan


@dataclass(frozen=True)
class TrainHyper:
    learning_rate: float = 0.5
    momentum: float = 0.9
    max_epochs: int = 2000
    tol: float = 1e-8
    patience: int = 10


def glorot_uniform(rng, fan_out, fan_in):
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def init(input_dim, hidden_dim, seed):
    if not 1 <= hidden_dim < input_dim:
        raise InputError(f"need 1 <= hidden_dim < input_dim, got {hidden_dim} and {input_dim}")
    rng = np.random.default_rng(seed)
    W1 = glorot_uniform(rng, hidden_dim, input_dim)
    W2 = glorot_uniform(rng, input_dim, hidden_dim)
    return AutoencoderModel(W1, np.zeros(hidden_dim), W2, np.zeros(input_dim))


def _rows(X, dim, name="X"):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X2 = X.reshape(1, -1) if single else X
    if X2.ndim != 2 or X2.shape[1] != dim:
        raise InputError(f"{name} has {X2.shape[-1]} columns, expected {dim}")
    if not np.all(np.isfinite(X2)):
        raise InputError(f"{name} contains non-finite values")
    return X2, single


def encode(m, x):
    X, single = _rows(x, m.input_dim)
    H = sigmoid(X @ m.W1.T + m.b1)
    return H[0] if single else H


def decode(m, h):
    Hm, single = _rows(h, m.hidden_dim, "h")
    Z = sigmoid(Hm @ m.W2.T + m.b2)
    return Z[0] if single else Z


def loss(m, X):
    X, _ = _rows(X, m.input_dim)
    Z = decode(m, encode(m, X))
    return float(np.mean(np.sum((Z - X) ** 2, axis=1)))


def two_layer_backward(X, H, out_delta, W2):
    """Gradients of a sigmoid-hidden two-layer net given dLoss/d(output pre-activation).

    Shared by the autoencoder and the BP regressor. Returns (dW1, db1, dW2, db2).
    """
    dW2 = out_delta.T @ H
    db2 = out_delta.sum(axis=0)
    hid_delta = (out_delta @ W2) * H * (1.0 - H)
    dW1 = hid_delta.T @ X
    db1 = hid_delta.sum(axis=0)
    return dW1, db1, dW2, db2


def _loss_and_grad(m, X):
    H = sigmoid(X @ m.W1.T + m.b1)
    Z = sigmoid(H @ m.W2.T + m.b2)
    R = Z - X
    value = float(np.mean(np.sum(R * R, axis=1)))
    out_delta = (2.0 / X.shape[0]) * R * Z * (1.0 - Z)
    return value, dict(zip(PARAM_NAMES, two_layer_backward(X, H, out_delta, m.W2)))


def gradient(m, X):
    """Exact gradient of ``loss`` w.r.t. W1, b1, W2, b2 (same shapes)."""
    X, _ = _rows(X, m.input_dim)
    return _loss_and_grad(m, X)[1]


def momentum_descent(model, loss_and_grad, hyper, names=PARAM_NAMES):
    """Full-batch gradient descent with classical momentum.

    Stops after ``max_epochs`` or once the loss changes by less than ``tol``
    for ``patience`` consecutive epochs. Returns the best parameters seen and
    the per-epoch loss history. ``model`` is not modified.
    """
    current = model.copy()
    best = model.copy()
    best_loss = math.inf
    velocity = {n: np.zeros_like(getattr(current, n)) for n in names}
    history = TrainingHistory()
    calm = 0
    # a diverging run overflows before the loss check turns it into an error
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(hyper.max_epochs):
            value, grads = loss_and_grad(current)
            if not math.isfinite(value):
                raise TrainingDivergedError(epoch, value)
            if history.losses and abs(history.losses[-1] - value) < hyper.tol:
                calm += 1
            else:
                calm = 0
            history.losses.append(value)
            if value < best_loss:
                best_loss = value
                best = current.copy()
            if calm >= hyper.patience:
                break
            for n in names:
                v = velocity[n]
                v *= hyper.momentum
                v -= hyper.learning_rate * grads[n]
                setattr(current, n, getattr(current, n) + v)
    return best, history


def train(m, X, hyper=TrainHyper()):
    X, _ = _rows(X, m.input_dim)
    if X.shape[0] == 0:
        raise InputError("training matrix is empty")
    return momentum_descent(m, lambda cur: _loss_and_grad(cur, X), hyper)


@dataclass(frozen=True)
class HiddenSizeSearch:
    best: int
    mape: dict  # candidate -> validation MAPE (%)
    models: dict = field(default_factory=dict, repr=False, compare=False)
    histories: dict = field(default_factory=dict, repr=False, compare=False)


def search_hidden_size(X, y, candidates, elm_config, seed, hyper=TrainHyper(),
                       validation_fraction=0.2):
    """Pick the AE width whose encoded features give the lowest ELM validation MAPE.

    Each candidate trains an AE on all of X; the ELM is fit on the first 80 %
    of encoded rows and scored on the last 20 %. Ties go to the smaller width.
    """
    from .elm import train_elm
    from .metrics import mape
    from .seeds import derive_seed

    candidates = sorted(set(int(c) for c in candidates))
    if not candidates:
        raise InputError("no hidden-size candidates")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n_val = max(1, int(round(validation_fraction * X.shape[0])))
    n_fit = X.shape[0] - n_val
    if n_fit < 1:
        raise InputError("too few rows for the validation split")

    curve, models, histories = {}, {}, {}
    for c in candidates:
        ae, hist = train(init(X.shape[1], c, derive_seed(seed, c)), X, hyper)
        Z = encode(ae, X)
        model = train_elm(Z[:n_fit], y[:n_fit], **elm_config)
        curve[c] = mape(y[n_fit:], model.predict(Z[n_fit:]))
        models[c], histories[c] = ae, hist
    best = min(candidates, key=lambda c: (curve[c], c))
    return HiddenSizeSearch(best, curve, models, histories)
