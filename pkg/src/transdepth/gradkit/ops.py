"""Differentiable operations over (N, C, H, W) tensors.

Convolutions use cross-correlation semantics and im2col lowering onto
matmul.  Transposed convolutions are implemented as the exact adjoint of
the corresponding strided convolution, so adjointness can be tested
directly: <conv(x), y> == <x, conv_T(y)>.
"""

from __future__ import annotations

import numpy as np

from .tensor import ShapeError, Tensor


def _as_array(x):
    return x.data if isinstance(x, Tensor) else np.asarray(x)


def _pad2d(x, p):
    if p == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))


def _out_size(n, k, s, p):
    return (n + 2 * p - k) // s + 1


def _windows(xp, k, stride):
    """Strided (N, C, Ho, Wo, k, k) view of a padded batch."""
    win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
    return win[:, :, ::stride, ::stride]


def _im2col(xp, k, stride):
    win = _windows(xp, k, stride)  # (N, C, Ho, Wo, k, k)
    n, c, ho, wo = win.shape[:4]
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * k * k)
    return cols, ho, wo


def _conv_forward_raw(x, w, stride, padding):
    n, c, h, wd = x.shape
    co, ci, kh, kw = w.shape
    if ci != c:
        raise ShapeError(f"conv2d: input channels {x.shape} vs weights {w.shape}")
    cols, ho, wo = _im2col(_pad2d(x, padding), kh, stride)
    out = cols @ w.reshape(co, -1).T
    return out.reshape(n, ho, wo, co).transpose(0, 3, 1, 2), cols


def _conv_input_grad(dout, w, x_shape, stride, padding):
    """Scatter dout back through the convolution onto the input."""
    n, c, h, wd = x_shape
    co, ci, kh, kw = w.shape
    _, _, ho, wo = dout.shape
    dcols = dout.transpose(0, 2, 3, 1).reshape(-1, co) @ w.reshape(co, -1)
    dc = dcols.reshape(n, ho, wo, ci, kh, kw).transpose(0, 3, 1, 2, 4, 5)
    hp, wp = h + 2 * padding, wd + 2 * padding
    dxp = np.zeros((n, ci, hp, wp), dtype=dout.dtype)
    for a in range(kh):
        for b in range(kw):
            dxp[:, :, a : a + stride * (ho - 1) + 1 : stride,
                b : b + stride * (wo - 1) + 1 : stride] += dc[:, :, :, :, a, b]
    if padding:
        return dxp[:, :, padding:-padding, padding:-padding]
    return dxp


def _conv_weight_grad(dout, cols, w_shape):
    co = w_shape[0]
    dw = dout.transpose(0, 2, 3, 1).reshape(-1, co).T @ cols
    return dw.reshape(w_shape)


def conv2d(x, w, b=None, stride=1, padding=1):
    """3x3-style convolution; output spatial size is ceil(in/stride)."""
    xd, wd = x.data, w.data
    out, cols = _conv_forward_raw(xd, wd, stride, padding)
    if b is not None:
        out = out + b.data[None, :, None, None]

    def grad_x(g):
        return _conv_input_grad(g, wd, xd.shape, stride, padding)

    def grad_w(g):
        return _conv_weight_grad(g, cols, wd.shape)

    parents = [x, w]
    fns = [grad_x, grad_w]
    if b is not None:
        parents.append(b)
        fns.append(lambda g: g.sum(axis=(0, 2, 3)))
    return Tensor._result(out, parents, fns)


def conv_transpose2d(x, w, b=None):
    """4x4 stride-2 transposed convolution: exact 2x spatial doubling.

    Weights have shape (C_in, C_out, 4, 4); the op is the adjoint of a
    stride-2, padding-1 convolution of the output.
    """
    xd, wd = x.data, w.data
    n, c, h, wdt = xd.shape
    ci, co, kh, kw = wd.shape
    if ci != c:
        raise ShapeError(
            f"conv_transpose2d: input channels {xd.shape} vs weights {wd.shape}"
        )
    out_shape = (n, co, 2 * h, 2 * wdt)
    out = _conv_input_grad(xd, wd, out_shape, stride=2, padding=1)
    if b is not None:
        out = out + b.data[None, :, None, None]

    def grad_x(g):
        return _conv_forward_raw(g, wd, stride=2, padding=1)[0]

    def grad_w(g):
        # weight grad of the adjoint: g plays the conv image, x the
        # conv output
        cols, _, _ = _im2col(_pad2d(g, 1), kh, 2)
        return _conv_weight_grad(xd, cols, wd.shape)

    parents = [x, w]
    fns = [grad_x, grad_w]
    if b is not None:
        parents.append(b)
        fns.append(lambda g: g.sum(axis=(0, 2, 3)))
    return Tensor._result(out, parents, fns)


def depthwise_conv_transpose2d(x, w, b=None):
    """Per-channel 4x4 stride-2 transposed convolution (learned 2x
    upsampler); weights have shape (C, 1, 4, 4)."""
    xd, wd = x.data, w.data
    n, c, h, wdt = xd.shape
    if wd.shape != (c, 1, 4, 4):
        raise ShapeError(
            f"depthwise_conv_transpose2d: weights {wd.shape} vs input {xd.shape}"
        )
    k = wd[:, 0]
    zp = np.zeros((n, c, 2 * h + 3, 2 * wdt + 3), dtype=xd.dtype)
    zp[:, :, 2 : 2 * h + 1 : 2, 2 : 2 * wdt + 1 : 2] = xd
    win = np.lib.stride_tricks.sliding_window_view(zp, (4, 4), axis=(2, 3))
    out = np.einsum("nchwab,cab->nchw", win, k[:, ::-1, ::-1])
    if b is not None:
        out = out + b.data[None, :, None, None]

    def _out_windows(g):
        gp = _pad2d(g, 1)
        return np.lib.stride_tricks.sliding_window_view(
            gp, (4, 4), axis=(2, 3)
        )[:, :, ::2, ::2]

    def grad_x(g):
        return np.einsum("nchwab,cab->nchw", _out_windows(g), k)

    def grad_w(g):
        dk = np.einsum("nchwab,nchw->cab", _out_windows(g), xd)
        return dk[:, None]

    parents = [x, w]
    fns = [grad_x, grad_w]
    if b is not None:
        parents.append(b)
        fns.append(lambda g: g.sum(axis=(0, 2, 3)))
    return Tensor._result(out, parents, fns)


def batchnorm(x, gamma, beta, running_mean, running_var, training,
              momentum=0.1, eps=1e-5):
    """Per-channel batch normalization over (N, H, W).

    Train mode normalizes by batch statistics and updates the running
    buffers in place; eval mode uses the running buffers.
    """
    xd = x.data
    if xd.ndim != 4:
        raise ShapeError(f"batchnorm expects (N, C, H, W), got {xd.shape}")
    n_stat = xd.shape[0] * xd.shape[2] * xd.shape[3]
    if training:
        if n_stat < 2:
            raise ShapeError(
                f"batchnorm needs at least 2 values per channel in train "
                f"mode, got batch x spatial = {n_stat}"
            )
        mu = xd.mean(axis=(0, 2, 3))
        var = xd.var(axis=(0, 2, 3))
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu
        running_var *= 1.0 - momentum
        running_var += momentum * var * n_stat / (n_stat - 1)
    else:
        mu = running_mean
        var = running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (xd - mu[None, :, None, None]) * inv_std[None, :, None, None]
    out = gamma.data[None, :, None, None] * xhat + beta.data[None, :, None, None]

    def grad_gamma(g):
        return (g * xhat).sum(axis=(0, 2, 3))

    def grad_beta(g):
        return g.sum(axis=(0, 2, 3))

    if training:

        def grad_x(g):
            dxhat = g * gamma.data[None, :, None, None]
            sum_d = dxhat.sum(axis=(0, 2, 3), keepdims=True)
            sum_dx = (dxhat * xhat).sum(axis=(0, 2, 3), keepdims=True)
            return (inv_std[None, :, None, None] / n_stat) * (
                n_stat * dxhat - sum_d - xhat * sum_dx
            )

    else:

        def grad_x(g):
            return g * (gamma.data * inv_std)[None, :, None, None]

    return Tensor._result(out, [x, gamma, beta], [grad_x, grad_gamma, grad_beta])


def relu(x):
    xd = x.data
    mask = xd > 0
    return Tensor._result(np.where(mask, xd, 0.0), [x], [lambda g: g * mask])


def avgpool2(x):
    """2x2 average pooling, stride 2."""
    xd = x.data
    n, c, h, w = xd.shape
    if h % 2 or w % 2:
        raise ShapeError(f"avgpool2 needs even spatial dims, got {xd.shape}")
    out = xd.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))

    def grad_x(g):
        return np.repeat(np.repeat(g, 2, axis=2), 2, axis=3) * 0.25

    return Tensor._result(out, [x], [grad_x])


def concat(tensors, axis=1):
    """Concatenate along the channel axis; inputs recoverable by slicing."""
    datas = [t.data for t in tensors]
    base = datas[0].shape
    for d in datas[1:]:
        if d.shape[:axis] + d.shape[axis + 1 :] != base[:axis] + base[axis + 1 :]:
            raise ShapeError(
                f"concat: incompatible shapes {[d.shape for d in datas]}"
            )
    out = np.concatenate(datas, axis=axis)
    offsets = np.cumsum([0] + [d.shape[axis] for d in datas])

    def make_grad(i):
        sl = [slice(None)] * out.ndim
        sl[axis] = slice(int(offsets[i]), int(offsets[i + 1]))
        sl = tuple(sl)
        return lambda g: g[sl]

    return Tensor._result(out, list(tensors), [make_grad(i) for i in range(len(datas))])


def l1_loss(pred, target):
    """Mean absolute error; the gradient is sign(pred - target) / count."""
    pd = pred.data
    td = _as_array(target)
    if pd.shape != td.shape:
        raise ShapeError(f"l1_loss: {pd.shape} vs {td.shape}")
    diff = pd - td
    out = np.abs(diff).mean()

    def grad_pred(g):
        return g * np.sign(diff) / diff.size

    parents = [pred]
    fns = [grad_pred]
    if isinstance(target, Tensor):
        parents.append(target)
        fns.append(lambda g: -g * np.sign(diff) / diff.size)
    return Tensor._result(np.asarray(out), parents, fns)


def add(a, b):
    return a + b


def scale(x, s):
    return x * s
