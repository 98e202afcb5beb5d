"""Finite-difference verification of the analytic gradients."""

from __future__ import annotations

import math

import numpy as np

from .loss import bce_loss
from .model import SiameseModel, siamese_forward, siamese_forward_backward

__all__ = ["grad_check"]


def _loss_of(model: SiameseModel, a: np.ndarray, b: np.ndarray, label: int) -> float:
    p = siamese_forward(a, b, model)
    loss, _ = bce_loss([p], [label])
    return loss


def grad_check(
    model: SiameseModel,
    a: np.ndarray,
    b: np.ndarray,
    label: int,
    h: float = 1e-5,
    min_coords: int = 200,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Runs in float64 regardless of the model's storage dtype. Coordinates
    are sampled from every parameter array, proportionally to its size but
    at least a handful each, totalling ``min_coords`` or more. The error
    per coordinate is ``|ga - gn| / max(|ga|, |gn|, 1e-8)``.
    """
    m64 = model.astype(np.float64)
    a = a.astype(np.float64)
    b = b.astype(np.float64)

    p = siamese_forward(a, b, m64)
    _, dldp = bce_loss([p], [label])
    _, grads = siamese_forward_backward(a, b, m64, float(dldp[0]))

    params = m64.parameters()
    total = sum(prm.size for prm in params)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for prm, grad in zip(params, grads.arrays):
        n = min(prm.size, max(8, math.ceil(min_coords * prm.size / total)))
        coords = rng.choice(prm.size, size=n, replace=False)
        flat = prm.reshape(-1)
        gflat = grad.reshape(-1)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + h
            up = _loss_of(m64, a, b, label)
            flat[c] = orig - h
            down = _loss_of(m64, a, b, label)
            flat[c] = orig
            numeric = (up - down) / (2.0 * h)
            analytic = float(gflat[c])
            err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst
