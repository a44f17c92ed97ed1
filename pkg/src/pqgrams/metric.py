"""Unweighted and weighted pq-gram distances.

The weighted distance puts a learnable positive weight on every vocabulary
slot: dist(x, y) = sum_i softplus(w_i) * |x_i - y_i|. Softplus keeps all
effective weights strictly positive, so the distance stays a pseudo-metric
(distinct trees may still sit at distance zero) for any finite parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grams import Profile, Vocabulary, _require_same_vocab, sym_diff

# softplus(W_INIT) == 1.0 exactly in float64, so a freshly initialized
# weighted distance reproduces the unweighted distance bit-for-bit
W_INIT = math.log(math.e - 1.0)


def softplus(x):
    """ln(1 + e^x), overflow-safe for large |x|. Works on scalars and arrays."""
    arr = np.asarray(x, dtype=np.float64)
    out = np.maximum(arr, 0.0) + np.log1p(np.exp(-np.abs(arr)))
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def sigmoid(x):
    """e^x / (1 + e^x), overflow-safe. Works on scalars and arrays."""
    arr = np.asarray(x, dtype=np.float64)
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (1.0 + ex)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


@dataclass(eq=False)
class WeightModel:
    """Raw parameter vector over a vocabulary; effective weights are softplus(w)."""

    vocab: Vocabulary
    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.shape != (self.vocab.dim,):
            raise ValueError(
                f"weight vector has shape {self.w.shape}, expected ({self.vocab.dim},)"
            )

    @classmethod
    def initial(cls, vocab: Vocabulary) -> "WeightModel":
        """All weights at W_INIT: the weighted distance equals the unweighted one."""
        return cls(vocab, np.full(vocab.dim, W_INIT))

    @property
    def shape(self):
        return self.vocab.shape

    @property
    def dim(self) -> int:
        return self.vocab.dim

    def effective_weights(self) -> np.ndarray:
        return softplus(self.w)


def pq_distance(x: Profile, y: Profile) -> int:
    """Unweighted gram distance: total symmetric-difference count."""
    _require_same_vocab(x, y)
    return sym_diff(x, y).total()


def _check_model_vocab(model: WeightModel, x: Profile, y: Profile) -> None:
    _require_same_vocab(x, y)
    if x.vocab is not model.vocab and x.vocab != model.vocab:
        raise ValueError("profiles do not share the model's vocabulary")


def weighted_distance(model: WeightModel, x: Profile, y: Profile) -> float:
    """sum_i softplus(w_i) * |x_i - y_i|; non-negative and symmetric."""
    _check_model_vocab(model, x, y)
    d = sym_diff(x, y)
    if len(d.indices) == 0:
        return 0.0
    return float(softplus(model.w[d.indices]) @ d.values)


def distance_gradient(model: WeightModel, x: Profile, y: Profile) -> np.ndarray:
    """Gradient of weighted_distance w.r.t. w: sigmoid(w_i) * |x_i - y_i|."""
    _check_model_vocab(model, x, y)
    d = sym_diff(x, y)
    grad = np.zeros(model.dim)
    if len(d.indices):
        grad[d.indices] = sigmoid(model.w[d.indices]) * d.values
    return grad
