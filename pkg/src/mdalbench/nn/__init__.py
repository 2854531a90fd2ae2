"""Minimal deterministic dense-network engine (float64, numpy-backed)."""

from mdalbench.nn.gradcheck import grad_check
from mdalbench.nn.layers import DenseLayer
from mdalbench.nn.losses import reverse_gradient, softmax, softmax_cross_entropy
from mdalbench.nn.optim import EarlyStopMonitor, Optimizer, TrainSchedule

__all__ = [
    "DenseLayer",
    "EarlyStopMonitor",
    "Optimizer",
    "TrainSchedule",
    "grad_check",
    "reverse_gradient",
    "softmax",
    "softmax_cross_entropy",
]
