"""Small dense network with hand-written gradients.

Only what Q-learning needs: ReLU hidden layers, identity output, mean-squared
loss on the chosen action's value. Everything is float64 numpy so runs are
reproducible bit for bit.
"""

from __future__ import annotations

import numpy as np


class QNetwork:
    def __init__(self, layer_sizes, rng: np.random.Generator):
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        self.weights = []
        self.biases = []
        for d_in, d_out in zip(self.layer_sizes, self.layer_sizes[1:]):
            limit = np.sqrt(6.0 / (d_in + d_out))
            self.weights.append(rng.uniform(-limit, limit, size=(d_in, d_out)))
            self.biases.append(np.zeros(d_out))

    def forward(self, x: np.ndarray):
        """x: (n, d_in). Returns (q, cache); pass cache to backward()."""
        a = np.asarray(x, dtype=np.float64)
        activations = [a]
        pre = []
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            pre.append(z)
            a = z if k == last else np.maximum(z, 0.0)
            activations.append(a)
        return a, (activations, pre)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, dq: np.ndarray):
        """Gradients of a scalar loss given dloss/doutput. Returns
        (weight grads, bias grads) shaped like the parameters."""
        activations, pre = cache
        d_weights = [None] * len(self.weights)
        d_biases = [None] * len(self.biases)
        delta = np.asarray(dq, dtype=np.float64)
        for k in range(len(self.weights) - 1, -1, -1):
            d_weights[k] = activations[k].T @ delta
            d_biases[k] = delta.sum(axis=0)
            if k > 0:
                delta = (delta @ self.weights[k].T) * (pre[k - 1] > 0.0)
        return d_weights, d_biases

    # -- parameter plumbing ----------------------------------------------

    def copy_from(self, other: "QNetwork") -> None:
        self.weights = [w.copy() for w in other.weights]
        self.biases = [b.copy() for b in other.biases]

    def export_parameters(self):
        return {
            "layer_sizes": list(self.layer_sizes),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_parameters(cls, data) -> "QNetwork":
        net = cls.__new__(cls)
        net.layer_sizes = tuple(int(s) for s in data["layer_sizes"])
        net.weights = [np.asarray(w, dtype=np.float64) for w in data["weights"]]
        net.biases = [np.asarray(b, dtype=np.float64) for b in data["biases"]]
        return net


def clip_gradients(d_weights, d_biases, max_norm: float):
    """Scale all gradients together so their joint norm is at most max_norm."""
    total = 0.0
    for g in d_weights:
        total += float((g * g).sum())
    for g in d_biases:
        total += float((g * g).sum())
    total = np.sqrt(total)
    if total <= max_norm or total == 0.0:
        return d_weights, d_biases, total
    scale = max_norm / total
    return ([g * scale for g in d_weights],
            [g * scale for g in d_biases], total)
