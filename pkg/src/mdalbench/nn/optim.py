"""Optimizers, learning-rate schedule, and early stopping.

Weight decay is coupled: decay * param is added to the gradient before the
update rule, identically under SGD and Adam.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from mdalbench.errors import NumericError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class Optimizer:
    """SGD or Adam over named parameter arrays, updated in place."""

    def __init__(self, kind: str, learning_rate: float, weight_decay: float = 0.0):
        if kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer kind {kind!r}")
        if learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if weight_decay < 0:
            raise ValueError("weight decay must be nonnegative")
        self.kind = kind
        self.learning_rate = float(learning_rate)
        self.weight_decay = float(weight_decay)
        self.step_count = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params):
        """Apply one update. params yields (name, value, grad) triples."""
        self.step_count += 1
        t = self.step_count
        for name, value, grad in params:
            if not np.all(np.isfinite(grad)):
                raise NumericError(f"non-finite gradient for parameter {name!r}")
            g = grad + self.weight_decay * value
            if self.kind == "sgd":
                value -= self.learning_rate * g
                continue
            m = self._m.setdefault(name, np.zeros_like(value))
            v = self._v.setdefault(name, np.zeros_like(value))
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            m_hat = m / (1.0 - ADAM_BETA1 ** t)
            v_hat = v / (1.0 - ADAM_BETA2 ** t)
            value -= self.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


@dataclass
class TrainSchedule:
    """Epoch budget plus the stall-triggered LR decay rule.

    The decay factor fires when the validation metric has not improved for
    ceil(patience / 2) consecutive evaluations, at most twice per fit and at
    most once per evaluation.
    """

    patience: int
    max_epochs: int
    lr_decay: float | None = None
    max_decays: int = 2

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if self.lr_decay is not None and not (0.0 < self.lr_decay <= 1.0):
            raise ValueError("lr decay factor must lie in (0, 1]")

    @property
    def decay_trigger(self) -> int:
        return math.ceil(self.patience / 2)

    def maybe_decay(self, optimizer: Optimizer, stale_count: int, decays_done: int) -> bool:
        """Decay optimizer.learning_rate if the stall rule fires; return True if it did."""
        if self.lr_decay is None or decays_done >= self.max_decays:
            return False
        if stale_count == self.decay_trigger:
            optimizer.learning_rate *= self.lr_decay
            return True
        return False


@dataclass
class EarlyStopMonitor:
    """Tracks the best validation metric and the parameter snapshot at it.

    Ties count as non-improvements; stop is signalled once the metric has
    been stale for `patience` evaluations.
    """

    patience: int
    best_value: float = -math.inf
    best_snapshot: object = None
    stale_count: int = 0
    history: list = field(default_factory=list)

    def update(self, value: float, snapshot) -> bool:
        """Record one evaluation; snapshot() is called only on improvement."""
        self.history.append(value)
        if value > self.best_value:
            self.best_value = value
            self.best_snapshot = snapshot()
            self.stale_count = 0
        else:
            self.stale_count += 1
        return self.stale_count >= self.patience
