"""Dense layers with explicit forward/backward passes.

All math is float64. A layer owns its weights, biases and the matching
gradient buffers; backward() accumulates into the buffers so several loss
terms can contribute to one update step.
"""

import numpy as np

from mdalbench.errors import ShapeError

ACTIVATIONS = ("identity", "relu")


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    """Uniform init bounded by sqrt(6 / (fan_in + fan_out))."""
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class DenseLayer:
    """Fully connected layer: y = act(x W + b), W is (in x out)."""

    def __init__(self, in_dim: int, out_dim: int, activation: str = "identity",
                 *, rng: np.random.Generator):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.activation = activation
        self.w = glorot_uniform(rng, in_dim, out_dim)
        self.b = np.zeros(out_dim)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._x = None
        self._z = None  # pre-activation cache for backward

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(
                f"dense layer expects (n, {self.in_dim}) input, got {x.shape}")
        z = x @ self.w + self.b
        self._x = x
        self._z = z
        if self.activation == "relu":
            return np.maximum(z, 0.0)
        return z

    def backward(self, dy: np.ndarray) -> np.ndarray:
        """Accumulate parameter gradients; return gradient w.r.t. the input.

        Must follow the forward() call whose caches are still live.
        """
        if self._x is None:
            raise RuntimeError("backward called before forward")
        dz = np.asarray(dy, dtype=np.float64)
        if self.activation == "relu":
            dz = dz * (self._z > 0.0)
        self.dw += self._x.T @ dz
        self.db += dz.sum(axis=0)
        return dz @ self.w.T

    def zero_grad(self):
        self.dw.fill(0.0)
        self.db.fill(0.0)

    def parameters(self, prefix: str):
        """Yield (name, value, grad) triples."""
        yield f"{prefix}.w", self.w, self.dw
        yield f"{prefix}.b", self.b, self.db

    def copy_values(self) -> tuple:
        return self.w.copy(), self.b.copy()

    def load_values(self, values: tuple):
        w, b = values
        self.w[...] = w
        self.b[...] = b
