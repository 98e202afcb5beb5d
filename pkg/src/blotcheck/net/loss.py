"""Binary cross-entropy over pair probabilities."""

from __future__ import annotations

import numpy as np

from ..errors import EmptyBatch, LengthMismatch

__all__ = ["sigmoid", "bce_loss", "CLAMP_EPS"]

# keeps log() finite without visibly perturbing loss values
CLAMP_EPS = 1e-7


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    z = np.asarray(z)
    out = np.empty_like(z, dtype=np.result_type(z.dtype, np.float32))
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_loss(predictions, labels) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy and its gradient wrt each prediction.

    ``loss = -(1/N) sum[y log p + (1-y) log(1-p)]`` with predictions
    clamped to ``[CLAMP_EPS, 1-CLAMP_EPS]``. Returns ``(loss, dL/dp)``
    where ``dL/dp[i] = -(1/N)(y/p - (1-y)/(1-p))`` at the clamped p.
    """
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape:
        raise LengthMismatch(f"{p.shape} predictions vs {y.shape} labels")
    if p.size == 0:
        raise EmptyBatch("loss over zero samples")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    n = p.size
    pc = np.clip(p, CLAMP_EPS, 1.0 - CLAMP_EPS)
    loss = -float(np.sum(y * np.log(pc) + (1.0 - y) * np.log1p(-pc))) / n
    grads = -(y / pc - (1.0 - y) / (1.0 - pc)) / n
    return loss, grads
