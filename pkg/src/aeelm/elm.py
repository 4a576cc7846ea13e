"""Extreme learning machine regressor.

Hidden weights and biases are drawn once from U[-1, 1] and never trained; the
output weights are the minimum-norm least-squares solution of H beta = y,
or a ridge solution when ``ridge_lambda > 0``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit as sigmoid

from .errors import InputError

RCOND = 1e-10
DEFAULT_K = 100
K_GRID = (20, 50, 100, 200)


@dataclass
class ElmModel:
    W: np.ndarray = field(repr=False)  # (K, feature_dim)
    b: np.ndarray = field(repr=False)  # (K,)
    beta: np.ndarray = field(repr=False)  # (K,)
    ridge_lambda: float = 0.0
    seed: int = 0

    model_type = "elm"

    @property
    def K(self):
        return self.W.shape[0]

    @property
    def feature_dim(self):
        return self.W.shape[1]

    def predict(self, Z):
        return predict(self, Z)

    def to_dict(self):
        return {
            "model_type": self.model_type,
            "K": self.K,
            "feature_dim": self.feature_dim,
            "W": self.W.tolist(),
            "b": self.b.tolist(),
            "beta": self.beta.tolist(),
            "ridge_lambda": self.ridge_lambda,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        W = np.array(d["W"], dtype=float).reshape(int(d["K"]), int(d["feature_dim"]))
        return cls(W, np.array(d["b"], dtype=float), np.array(d["beta"], dtype=float),
                   float(d["ridge_lambda"]), int(d["seed"]))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")


def random_hidden_layer(K, feature_dim, seed):
    """Draw (W, b) row by row, so the first K neurons agree for every K' >= K."""
    rng = np.random.default_rng(seed)
    Wb = rng.uniform(-1.0, 1.0, size=(K, feature_dim + 1))
    return Wb[:, :feature_dim].copy(), Wb[:, feature_dim].copy()


def _features(Z, dim=None):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z.reshape(1, -1) if dim is not None and Z.size == dim else Z.reshape(-1, 1)
    if Z.ndim != 2:
        raise InputError("feature matrix must be 2-D")
    if dim is not None and Z.shape[1] != dim:
        raise InputError(f"feature dimension {Z.shape[1]} does not match model ({dim})")
    if not np.all(np.isfinite(Z)):
        raise InputError("non-finite feature values")
    return Z


def hidden_map(model, Z):
    """sigmoid(w_i . z + b_i) for every hidden neuron (rows: samples)."""
    Z = np.asarray(Z, dtype=float)
    single = Z.ndim == 1
    Zm = _features(Z, model.feature_dim)
    H = sigmoid(Zm @ model.W.T + model.b)
    return H[0] if single else H


def solve_output_weights(H, y, ridge_lambda=0.0):
    """Minimum-norm least squares via SVD (cutoff RCOND * s_max), or ridge."""
    U, s, Vt = np.linalg.svd(H, full_matrices=False)
    uty = U.T @ y
    if ridge_lambda > 0.0:
        coef = s / (s * s + ridge_lambda)
    else:
        keep = s > RCOND * s[0] if s.size else s.astype(bool)
        coef = np.zeros_like(s)
        coef[keep] = 1.0 / s[keep]
    return Vt.T @ (coef * uty)


def train_elm(Z, y, K=DEFAULT_K, seed=0, ridge_lambda=0.0):
    Z = _features(Z)
    y = np.asarray(y, dtype=float).ravel()
    N, p = Z.shape
    if N < 1 or K < 1:
        raise InputError(f"need N >= 1 and K >= 1, got N={N}, K={K}")
    if y.size != N:
        raise InputError(f"{y.size} targets for {N} feature rows")
    if not np.all(np.isfinite(y)):
        raise InputError("non-finite target values")
    if ridge_lambda < 0:
        raise InputError("ridge_lambda must be >= 0")
    W, b = random_hidden_layer(int(K), p, seed)
    H = sigmoid(Z @ W.T + b)
    beta = solve_output_weights(H, y, float(ridge_lambda))
    return ElmModel(W, b, beta, float(ridge_lambda), int(seed))


def predict(model, Z):
    Z = np.asarray(Z, dtype=float)
    single = Z.ndim == 1 and Z.size == model.feature_dim
    out = hidden_map(model, Z.reshape(1, -1) if single else Z) @ model.beta
    return float(out[0]) if single else out


def select_k(Z_fit, y_fit, Z_val, y_val, grid=K_GRID, seed=0, ridge_lambda=0.0):
    """K from ``grid`` with the lowest validation MAPE (smallest K on ties)."""
    from .metrics import mape

    scores = {}
    for K in grid:
        m = train_elm(Z_fit, y_fit, K, seed, ridge_lambda)
        scores[int(K)] = mape(y_val, m.predict(Z_val))
    best = min(scores, key=lambda k: (scores[k], k))
    return best, scores
