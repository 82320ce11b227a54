"""Parameterized layers wrapping the functional ops.

Weight initialization is Kaiming-style fan-in scaling for convolutions;
transposed convolutions start as bilinear upsamplers.
"""

from __future__ import annotations

import numpy as np

from . import ops
from .tensor import Tensor, parameter


def _kaiming(rng, shape, fan_in, dtype):
    std = np.sqrt(2.0 / fan_in)
    return rng.normal(0.0, std, size=shape).astype(dtype)


def _bilinear_kernel(dtype):
    k1 = np.array([0.25, 0.75, 0.75, 0.25], dtype=dtype)
    return np.outer(k1, k1)


class Conv2d:
    def __init__(self, cin, cout, stride=1, kernel=3, padding=1, bias=False,
                 rng=None, dtype=np.float32):
        rng = rng or np.random.default_rng()
        self.stride = stride
        self.padding = padding
        self.w = parameter(
            _kaiming(rng, (cout, cin, kernel, kernel), cin * kernel * kernel, dtype),
            dtype,
        )
        self.b = parameter(np.zeros(cout), dtype) if bias else None

    def __call__(self, x):
        return ops.conv2d(x, self.w, self.b, self.stride, self.padding)

    def params(self):
        return [self.w] + ([self.b] if self.b is not None else [])


class ConvTranspose2d:
    """Full 4x4 stride-2 transposed convolution (2x upsampling)."""

    def __init__(self, cin, cout, bias=True, rng=None, dtype=np.float32):
        rng = rng or np.random.default_rng()
        if cin == cout:
            w = np.zeros((cin, cout, 4, 4), dtype=dtype)
            w[np.arange(cin), np.arange(cout)] = _bilinear_kernel(dtype)
        else:
            w = _kaiming(rng, (cin, cout, 4, 4), cin * 16, dtype)
        self.w = parameter(w, dtype)
        self.b = parameter(np.zeros(cout), dtype) if bias else None

    def __call__(self, x):
        return ops.conv_transpose2d(x, self.w, self.b)

    def params(self):
        return [self.w] + ([self.b] if self.b is not None else [])


class DepthwiseConvTranspose2d:
    """Per-channel learned 2x upsampler, initialized bilinear."""

    def __init__(self, channels, dtype=np.float32):
        w = np.broadcast_to(
            _bilinear_kernel(dtype), (channels, 1, 4, 4)
        ).copy()
        self.w = parameter(w, dtype)

    def __call__(self, x):
        return ops.depthwise_conv_transpose2d(x, self.w)

    def params(self):
        return [self.w]


class BatchNorm2d:
    def __init__(self, channels, momentum=0.1, eps=1e-5, dtype=np.float32):
        self.gamma = parameter(np.ones(channels), dtype)
        self.beta = parameter(np.zeros(channels), dtype)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self.momentum = momentum
        self.eps = eps
        self.training = True

    def __call__(self, x):
        return ops.batchnorm(
            x, self.gamma, self.beta, self.running_mean, self.running_var,
            self.training, self.momentum, self.eps,
        )

    def params(self):
        return [self.gamma, self.beta]

    def buffers(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def load_buffers(self, mean, var):
        self.running_mean = np.asarray(mean, dtype=self.running_mean.dtype)
        self.running_var = np.asarray(var, dtype=self.running_var.dtype)
