"""Parameter update rules and the training hyperparameter bundle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NonFiniteGradient
from .model import ModelGrads, SiameseModel

__all__ = ["TrainConfig", "SgdOptimizer", "AdamOptimizer", "make_optimizer"]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 20
    batch_size: int = 32
    seed: int = 0
    optimizer: str = "adam"  # "sgd" | "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    merge_mode: str = "absdiff"

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


def _check_finite(grads: ModelGrads) -> None:
    for arr in grads.arrays:
        if not np.isfinite(arr).all():
            raise NonFiniteGradient("gradient contains NaN or inf")


class SgdOptimizer:
    def __init__(self, learning_rate: float):
        self.lr = learning_rate

    def step(self, model: SiameseModel, grads: ModelGrads) -> None:
        _check_finite(grads)
        for param, grad in zip(model.parameters(), grads.arrays):
            param -= (self.lr * grad).astype(param.dtype, copy=False)


class AdamOptimizer:
    """Adam with bias-corrected moment estimates."""

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: list[np.ndarray] | None = None
        self._v: list[np.ndarray] | None = None

    def step(self, model: SiameseModel, grads: ModelGrads) -> None:
        _check_finite(grads)
        params = model.parameters()
        if self._m is None:
            self._m = [np.zeros_like(p, dtype=np.float64) for p in params]
            self._v = [np.zeros_like(p, dtype=np.float64) for p in params]
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for param, grad, m, v in zip(params, grads.arrays, self._m, self._v):
            g = grad.astype(np.float64, copy=False)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            update = self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            param -= update.astype(param.dtype, copy=False)


def make_optimizer(config: TrainConfig):
    if config.optimizer == "sgd":
        return SgdOptimizer(config.learning_rate)
    return AdamOptimizer(config.learning_rate, config.beta1, config.beta2, config.eps)
