"""Low-level tensor ops: valid cross-correlation, ReLU, 2x2 max pooling.

All ops take single-sample ``(C, H, W)`` arrays and have exact backward
counterparts. Convolutions run as im2col matmuls; the window view is a
stride trick, so nothing is copied until the matmul.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import InputTooSmall, ShapeMismatch

__all__ = [
    "conv2d_forward",
    "conv2d_backward",
    "relu",
    "relu_backward",
    "maxpool2",
    "maxpool2_backward",
]


def _check_conv_shapes(x: np.ndarray, weights: np.ndarray) -> None:
    if x.ndim != 3:
        raise ShapeMismatch(f"conv input must be (C,H,W), got {x.shape}")
    out_ch, in_ch, kh, kw = weights.shape
    c, h, w = x.shape
    if c != in_ch:
        raise ShapeMismatch(f"input has {c} channels, kernel expects {in_ch}")
    if h < kh or w < kw:
        raise ShapeMismatch(f"input {h}x{w} smaller than kernel {kh}x{kw}")


def conv2d_forward(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Valid (no padding, stride 1) cross-correlation plus bias.

    ``x`` is (C, H, W), ``weights`` (O, C, kh, kw), ``bias`` (O,).
    Returns (O, H-kh+1, W-kw+1).
    """
    _check_conv_shapes(x, weights)
    out_ch, in_ch, kh, kw = weights.shape
    win = sliding_window_view(x, (kh, kw), axis=(1, 2))  # (C, H', W', kh, kw)
    hp, wp = win.shape[1], win.shape[2]
    cols = win.transpose(1, 2, 0, 3, 4).reshape(hp * wp, in_ch * kh * kw)
    wmat = weights.reshape(out_ch, in_ch * kh * kw)
    out = cols @ wmat.T + bias
    return np.ascontiguousarray(out.T.reshape(out_ch, hp, wp))


def conv2d_backward(
    grad_out: np.ndarray, x: np.ndarray, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact gradients of :func:`conv2d_forward`.

    Returns ``(grad_input, grad_weights, grad_bias)`` with the shapes of
    ``x``, ``weights`` and the bias respectively.
    """
    _check_conv_shapes(x, weights)
    out_ch, in_ch, kh, kw = weights.shape
    c, h, w = x.shape
    hp, wp = h - kh + 1, w - kw + 1
    if grad_out.shape != (out_ch, hp, wp):
        raise ShapeMismatch(f"grad_out {grad_out.shape} != {(out_ch, hp, wp)}")

    grad_bias = grad_out.sum(axis=(1, 2))

    win = sliding_window_view(x, (kh, kw), axis=(1, 2))
    cols = win.transpose(1, 2, 0, 3, 4).reshape(hp * wp, in_ch * kh * kw)
    g2 = grad_out.reshape(out_ch, hp * wp)
    grad_weights = (g2 @ cols).reshape(out_ch, in_ch, kh, kw)

    # grad wrt input: full correlation of grad_out with the flipped kernel
    gp = np.zeros((out_ch, hp + 2 * (kh - 1), wp + 2 * (kw - 1)), dtype=grad_out.dtype)
    gp[:, kh - 1 : kh - 1 + hp, kw - 1 : kw - 1 + wp] = grad_out
    gwin = sliding_window_view(gp, (kh, kw), axis=(1, 2))  # (O, H, W, kh, kw)
    gcols = gwin.transpose(1, 2, 0, 3, 4).reshape(h * w, out_ch * kh * kw)
    wflip = weights[:, :, ::-1, ::-1].transpose(1, 0, 2, 3).reshape(in_ch, out_ch * kh * kw)
    grad_input = (gcols @ wflip.T).T.reshape(c, h, w)
    return np.ascontiguousarray(grad_input), grad_weights, grad_bias


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_backward(grad_out: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Pass gradient where the cached input was strictly positive."""
    return grad_out * (x > 0)


def maxpool2(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """2x2 max pooling with stride 2; odd trailing row/col dropped.

    Returns ``(pooled, argmax)`` where ``argmax`` holds the winning
    position 0..3 in row-major window order (ties go to the first).
    """
    if x.ndim != 3:
        raise ShapeMismatch(f"pool input must be (C,H,W), got {x.shape}")
    c, h, w = x.shape
    if h < 2 or w < 2:
        raise InputTooSmall(f"cannot 2x2-pool a {h}x{w} map")
    h2, w2 = h // 2, w // 2
    t = x[:, : h2 * 2, : w2 * 2].reshape(c, h2, 2, w2, 2)
    t = t.transpose(0, 1, 3, 2, 4).reshape(c, h2, w2, 4)
    idx = np.argmax(t, axis=3)
    out = np.take_along_axis(t, idx[..., None], axis=3)[..., 0]
    return np.ascontiguousarray(out), idx


def maxpool2_backward(grad_out: np.ndarray, argmax: np.ndarray, input_shape: tuple[int, int, int]) -> np.ndarray:
    """Route gradient back to the stored argmax of each 2x2 window."""
    c, h, w = input_shape
    h2, w2 = h // 2, w // 2
    if grad_out.shape != (c, h2, w2):
        raise ShapeMismatch(f"grad_out {grad_out.shape} != {(c, h2, w2)}")
    grad_in = np.zeros(input_shape, dtype=grad_out.dtype)
    ci, hi, wi = np.indices((c, h2, w2))
    rows = hi * 2 + argmax // 2
    cols = wi * 2 + argmax % 2
    grad_in[ci, rows, cols] = grad_out
    return grad_in
