"""Small sigmoid MLP trained by full-batch gradient descent on cross-entropy.

This is the classical comparison point, kept deliberately plain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

_EPS = 1e-12


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class MlpModel:
    layer_widths: Tuple[int, ...]  # input width first, output (1) last
    weights: List[np.ndarray]  # weights[l] has shape (widths[l+1], widths[l])
    biases: List[np.ndarray]

    def __post_init__(self):
        self.layer_widths = tuple(self.layer_widths)
        w = self.layer_widths
        if len(self.weights) != len(w) - 1 or len(self.biases) != len(w) - 1:
            raise ValueError("need one weight matrix and bias vector per layer")
        for l, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (w[l + 1], w[l]) or b.shape != (w[l + 1],):
                raise ValueError(f"layer {l} shapes {W.shape}, {b.shape} do not chain")

    @classmethod
    def init(cls, layer_widths: Sequence[int], seed: int) -> "MlpModel":
        rng = np.random.default_rng(seed)
        w = tuple(layer_widths)
        weights = [rng.uniform(-0.5, 0.5, (w[l + 1], w[l])) for l in range(len(w) - 1)]
        biases = [rng.uniform(-0.5, 0.5, w[l + 1]) for l in range(len(w) - 1)]
        return cls(w, weights, biases)

    def to_vector(self) -> np.ndarray:
        parts = []
        for W, b in zip(self.weights, self.biases):
            parts += [W.ravel(), b]
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, layer_widths: Sequence[int], vector) -> "MlpModel":
        w = tuple(layer_widths)
        vector = np.asarray(vector, dtype=np.float64)
        weights, biases, pos = [], [], 0
        for l in range(len(w) - 1):
            n = w[l + 1] * w[l]
            weights.append(vector[pos : pos + n].reshape(w[l + 1], w[l]).copy())
            pos += n
            biases.append(vector[pos : pos + w[l + 1]].copy())
            pos += w[l + 1]
        if pos != len(vector):
            raise ValueError(f"expected {pos} values for {w}, got {len(vector)}")
        return cls(w, weights, biases)

    @property
    def num_parameters(self) -> int:
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))


def _activations(model: MlpModel, X: np.ndarray):
    acts = [X]
    for W, b in zip(model.weights, model.biases):
        acts.append(sigmoid(acts[-1] @ W.T + b))
    return acts


def mlp_forward(model: MlpModel, features):
    """Class-1 probability; scalar for one row, array for a (rows, inputs) batch."""
    x = np.asarray(features, dtype=np.float64)
    if x.shape[-1] != model.layer_widths[0]:
        raise ValueError(
            f"expected {model.layer_widths[0]} inputs, got shape {x.shape}"
        )
    out = _activations(model, np.atleast_2d(x))[-1][:, 0]
    return float(out[0]) if x.ndim == 1 else out


def bce_loss(model: MlpModel, X, y) -> float:
    p = np.clip(mlp_forward(model, X), _EPS, 1 - _EPS)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def loss_and_gradient(model: MlpModel, X, y):
    """Mean BCE and its gradient as a flat vector in :meth:`MlpModel.to_vector` order."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    acts = _activations(model, X)
    p = acts[-1][:, 0]
    pc = np.clip(p, _EPS, 1 - _EPS)
    loss = float(-np.mean(y * np.log(pc) + (1 - y) * np.log(1 - pc)))
    # sigmoid output + BCE: dL/dz = p - y
    delta = ((p - y) / len(y))[:, None]
    grads = []
    for l in range(len(model.weights) - 1, -1, -1):
        gW = delta.T @ acts[l]
        gb = delta.sum(axis=0)
        grads.append((gW, gb))
        if l:
            a = acts[l]
            delta = (delta @ model.weights[l]) * a * (1 - a)
    flat = []
    for gW, gb in reversed(grads):
        flat += [gW.ravel(), gb]
    return loss, np.concatenate(flat)


def mlp_train(
    model: MlpModel, features, labels, epochs: int, learning_rate: float
) -> Tuple[MlpModel, List[float]]:
    """Full-batch gradient descent; returns the trained copy and per-epoch losses."""
    if learning_rate <= 0:
        raise ValueError("learning_rate must be positive")
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if len(y) == 0:
        raise ValueError("cannot train on an empty dataset")
    vec = model.to_vector()
    history = []
    for _ in range(epochs):
        current = MlpModel.from_vector(model.layer_widths, vec)
        loss, grad = loss_and_gradient(current, X, y)
        history.append(loss)
        vec = vec - learning_rate * grad
    return MlpModel.from_vector(model.layer_widths, vec), history
