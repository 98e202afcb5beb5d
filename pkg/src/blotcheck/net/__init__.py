"""From-scratch convolutional Siamese classifier on numpy arrays.

Layers store float32 parameters for training speed; every op also runs in
float64 for gradient verification. No autograd: each forward op has an
explicit backward.
"""

from .ops import (
    conv2d_forward,
    conv2d_backward,
    relu,
    relu_backward,
    maxpool2,
    maxpool2_backward,
)
from .model import (
    ConvLayer,
    LinearLayer,
    SiameseModel,
    ModelGrads,
    init_model,
    feature_dim_for,
    branch_forward,
    siamese_forward,
    siamese_forward_backward,
)
from .loss import sigmoid, bce_loss
from .optim import TrainConfig, SgdOptimizer, AdamOptimizer, make_optimizer
from .gradcheck import grad_check
from .checkpoint import save_model, load_model

__all__ = [
    "conv2d_forward",
    "conv2d_backward",
    "relu",
    "relu_backward",
    "maxpool2",
    "maxpool2_backward",
    "ConvLayer",
    "LinearLayer",
    "SiameseModel",
    "ModelGrads",
    "init_model",
    "feature_dim_for",
    "branch_forward",
    "siamese_forward",
    "siamese_forward_backward",
    "sigmoid",
    "bce_loss",
    "TrainConfig",
    "SgdOptimizer",
    "AdamOptimizer",
    "make_optimizer",
    "grad_check",
    "save_model",
    "load_model",
]
