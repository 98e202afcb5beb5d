"""Siamese classifier: one shared 4-stage conv branch plus a linear head.

The two "twins" are literally the same parameter set; both inputs run
through the single branch, the feature vectors are merged by (absolute)
subtraction, and a fully connected layer plus sigmoid yields the
duplication probability.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch
from .loss import sigmoid
from .ops import (
    conv2d_backward,
    conv2d_forward,
    maxpool2,
    maxpool2_backward,
    relu,
    relu_backward,
)

__all__ = [
    "ConvLayer",
    "LinearLayer",
    "SiameseModel",
    "ModelGrads",
    "init_model",
    "feature_dim_for",
    "branch_forward",
    "siamese_forward",
    "siamese_forward_backward",
]

DEFAULT_CHANNELS = (8, 16, 32, 64)
MERGE_MODES = ("absdiff", "signeddiff")


@dataclass
class ConvLayer:
    """Stride-1, no-padding convolution parameters."""

    weights: np.ndarray  # (out_ch, in_ch, kh, kw)
    bias: np.ndarray  # (out_ch,)

    def __post_init__(self) -> None:
        if self.weights.ndim != 4:
            raise ShapeMismatch(f"conv weights must be 4-d, got {self.weights.shape}")
        _, _, kh, kw = self.weights.shape
        if kh % 2 == 0 or kw % 2 == 0:
            raise ShapeMismatch(f"kernel sides must be odd, got {kh}x{kw}")
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeMismatch("bias length must equal out_ch")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise ShapeMismatch("conv parameters must be finite")


@dataclass
class LinearLayer:
    weights: np.ndarray  # (out_features, in_features)
    bias: np.ndarray  # (out_features,)


@dataclass
class SiameseModel:
    """Shared-branch similarity classifier.

    ``branch`` is the single stack of conv layers used for both inputs;
    sharing is by construction, not by copying.
    """

    branch: list[ConvLayer]
    head: LinearLayer
    input_size: int
    merge_mode: str = "absdiff"

    def __post_init__(self) -> None:
        if len(self.branch) != 4:
            raise ShapeMismatch(f"branch must have exactly 4 conv layers, got {len(self.branch)}")
        if self.merge_mode not in MERGE_MODES:
            raise ValueError(f"merge_mode must be one of {MERGE_MODES}")
        expected = feature_dim_for(self.input_size, self.channel_plan, self.kernel_size)
        if self.head.weights.shape != (1, expected):
            raise ShapeMismatch(
                f"head expects (1, {expected}) weights for input_size {self.input_size}, "
                f"got {self.head.weights.shape}"
            )

    @property
    def channel_plan(self) -> tuple[int, ...]:
        return tuple(layer.weights.shape[0] for layer in self.branch)

    @property
    def kernel_size(self) -> int:
        return self.branch[0].weights.shape[2]

    @property
    def dtype(self) -> np.dtype:
        return self.branch[0].weights.dtype

    def parameters(self) -> list[np.ndarray]:
        """All parameter arrays in declaration order (conv1..conv4, head)."""
        out: list[np.ndarray] = []
        for layer in self.branch:
            out.append(layer.weights)
            out.append(layer.bias)
        out.append(self.head.weights)
        out.append(self.head.bias)
        return out

    def set_parameters(self, arrays: list[np.ndarray]) -> None:
        own = self.parameters()
        if len(arrays) != len(own):
            raise ShapeMismatch(f"expected {len(own)} parameter arrays, got {len(arrays)}")
        for i, layer in enumerate(self.branch):
            layer.weights = arrays[2 * i].reshape(layer.weights.shape)
            layer.bias = arrays[2 * i + 1].reshape(layer.bias.shape)
        self.head.weights = arrays[-2].reshape(self.head.weights.shape)
        self.head.bias = arrays[-1].reshape(self.head.bias.shape)

    def astype(self, dtype) -> "SiameseModel":
        """Copy of the model with parameters cast to ``dtype``."""
        branch = [
            ConvLayer(layer.weights.astype(dtype), layer.bias.astype(dtype))
            for layer in self.branch
        ]
        head = LinearLayer(self.head.weights.astype(dtype), self.head.bias.astype(dtype))
        return SiameseModel(branch, head, self.input_size, self.merge_mode)

    def copy(self) -> "SiameseModel":
        return self.astype(self.dtype)


@dataclass
class ModelGrads:
    """Parameter gradients, same order and shapes as ``model.parameters()``."""

    arrays: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def zeros_like(cls, model: SiameseModel) -> "ModelGrads":
        return cls([np.zeros_like(p) for p in model.parameters()])

    def add_(self, other: "ModelGrads") -> None:
        for mine, theirs in zip(self.arrays, other.arrays):
            mine += theirs

    def scale_(self, factor: float) -> None:
        for arr in self.arrays:
            arr *= factor


def feature_dim_for(input_size: int, channels=DEFAULT_CHANNELS, kernel: int = 3) -> int:
    """Flattened feature length after 4x [conv(k) -> relu -> pool2]."""
    s = input_size
    for _ in channels:
        if s < kernel:
            raise ShapeMismatch(f"input_size {input_size} too small for the conv stack")
        s = s - kernel + 1
        if s < 2:
            raise ShapeMismatch(f"input_size {input_size} too small for the conv stack")
        s //= 2
    return channels[-1] * s * s


def init_model(
    input_size: int = 64,
    channels=DEFAULT_CHANNELS,
    kernel: int = 3,
    seed: int = 0,
    merge_mode: str = "absdiff",
    dtype=np.float32,
) -> SiameseModel:
    """He-uniform initialized model; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    branch: list[ConvLayer] = []
    in_ch = 1
    for out_ch in channels:
        fan_in = in_ch * kernel * kernel
        limit = np.sqrt(6.0 / fan_in)
        w = rng.uniform(-limit, limit, size=(out_ch, in_ch, kernel, kernel))
        branch.append(ConvLayer(w.astype(dtype), np.zeros(out_ch, dtype=dtype)))
        in_ch = out_ch
    feat = feature_dim_for(input_size, channels, kernel)
    limit = np.sqrt(6.0 / feat)
    head_w = rng.uniform(-limit, limit, size=(1, feat)).astype(dtype)
    head = LinearLayer(head_w, np.zeros(1, dtype=dtype))
    return SiameseModel(branch, head, input_size, merge_mode)


def _check_panel(x: np.ndarray, model: SiameseModel) -> None:
    if x.shape != (1, model.input_size, model.input_size):
        raise ShapeMismatch(
            f"panel must be (1, {model.input_size}, {model.input_size}), got {x.shape}"
        )


def branch_forward(x: np.ndarray, model: SiameseModel) -> np.ndarray:
    """Run one input through the shared branch; returns the flat feature."""
    _check_panel(x, model)
    t = x.astype(model.dtype, copy=False)
    for layer in model.branch:
        t = conv2d_forward(t, layer.weights, layer.bias)
        t = relu(t)
        t, _ = maxpool2(t)
    return t.ravel()


def _branch_forward_cached(x: np.ndarray, model: SiameseModel):
    t = x.astype(model.dtype, copy=False)
    cache = []
    for layer in model.branch:
        conv_in = t
        z = conv2d_forward(t, layer.weights, layer.bias)
        a = relu(z)
        t, idx = maxpool2(a)
        cache.append((conv_in, z, a.shape, idx))
    return t.ravel(), t.shape, cache


def _branch_backward(grad_feat: np.ndarray, final_shape, cache, model: SiameseModel) -> ModelGrads:
    grads = ModelGrads.zeros_like(model)
    g = grad_feat.reshape(final_shape)
    for i in range(len(model.branch) - 1, -1, -1):
        conv_in, z, relu_out_shape, idx = cache[i]
        g = maxpool2_backward(g, idx, relu_out_shape)
        g = relu_backward(g, z)
        g, gw, gb = conv2d_backward(g, conv_in, model.branch[i].weights)
        grads.arrays[2 * i] += gw
        grads.arrays[2 * i + 1] += gb
    return grads


def siamese_forward(a: np.ndarray, b: np.ndarray, model: SiameseModel) -> float:
    """Duplication probability for a panel pair, in (0, 1)."""
    fa = branch_forward(a, model)
    fb = branch_forward(b, model)
    diff = fa - fb
    if model.merge_mode == "absdiff":
        diff = np.abs(diff)
    z = model.head.weights @ diff + model.head.bias
    return float(sigmoid(z)[0])


@dataclass
class SiameseContext:
    """Intermediate activations kept between forward and backward."""

    raw_diff: np.ndarray
    merged: np.ndarray
    prob: float
    shape_a: tuple
    shape_b: tuple
    cache_a: list
    cache_b: list


def siamese_forward_cached(a: np.ndarray, b: np.ndarray, model: SiameseModel) -> tuple[float, SiameseContext]:
    """Forward pass retaining everything the backward pass needs."""
    _check_panel(a, model)
    _check_panel(b, model)
    fa, shape_a, cache_a = _branch_forward_cached(a, model)
    fb, shape_b, cache_b = _branch_forward_cached(b, model)
    raw = fa - fb
    diff = np.abs(raw) if model.merge_mode == "absdiff" else raw
    z = model.head.weights @ diff + model.head.bias
    p = float(sigmoid(z)[0])
    return p, SiameseContext(raw, diff, p, shape_a, shape_b, cache_a, cache_b)


def siamese_backward(ctx: SiameseContext, model: SiameseModel, grad_prob: float) -> ModelGrads:
    """Exact parameter gradients of ``grad_prob * p`` for one pair.

    ``grad_prob`` is dL/dp for this sample. Gradients include the sigmoid
    jacobian and both branch passes; with shared weights the two branch
    contributions accumulate into the single parameter set.
    """
    p = ctx.prob
    dz = np.asarray(grad_prob * p * (1.0 - p), dtype=model.dtype)
    grads = ModelGrads.zeros_like(model)
    grads.arrays[-2] += dz * ctx.merged[None, :]
    grads.arrays[-1] += np.atleast_1d(dz)
    ddiff = dz * model.head.weights[0]
    if model.merge_mode == "absdiff":
        draw = ddiff * np.sign(ctx.raw_diff)
    else:
        draw = ddiff
    grads.add_(_branch_backward(draw.astype(model.dtype), ctx.shape_a, ctx.cache_a, model))
    grads.add_(_branch_backward((-draw).astype(model.dtype), ctx.shape_b, ctx.cache_b, model))
    return grads


def siamese_forward_backward(
    a: np.ndarray, b: np.ndarray, model: SiameseModel, grad_prob: float
) -> tuple[float, ModelGrads]:
    p, ctx = siamese_forward_cached(a, b, model)
    return p, siamese_backward(ctx, model, grad_prob)
