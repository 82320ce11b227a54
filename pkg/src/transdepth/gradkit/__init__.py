"""Minimal dense-tensor automatic differentiation.

Exactly the layer set the depth network needs: 3x3 convolutions,
4x4 stride-2 transposed convolutions, batch normalization, ReLU,
2x2 average pooling, channel concatenation and an L1 loss, plus SGD
and Adam and a central-finite-difference gradient oracle.
"""

from .tensor import Tensor, ShapeError
from .ops import (
    add,
    avgpool2,
    batchnorm,
    concat,
    conv2d,
    conv_transpose2d,
    depthwise_conv_transpose2d,
    l1_loss,
    relu,
    scale,
)
from .layers import (
    BatchNorm2d,
    Conv2d,
    ConvTranspose2d,
    DepthwiseConvTranspose2d,
)
from .optim import SGD, Adam
from .checks import finite_diff_check

__all__ = [
    "Tensor",
    "ShapeError",
    "add",
    "avgpool2",
    "batchnorm",
    "concat",
    "conv2d",
    "conv_transpose2d",
    "depthwise_conv_transpose2d",
    "l1_loss",
    "relu",
    "scale",
    "BatchNorm2d",
    "Conv2d",
    "ConvTranspose2d",
    "DepthwiseConvTranspose2d",
    "SGD",
    "Adam",
    "finite_diff_check",
]
