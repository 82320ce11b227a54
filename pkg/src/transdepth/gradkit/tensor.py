"""Reverse-mode autodiff over numpy arrays.

A Tensor wraps an ndarray and, when it participates in a differentiable
computation, remembers its parents and one gradient closure per parent.
backward() walks the tape in reverse topological order.  No operation
mutates its inputs; gradients accumulate into .grad buffers of the same
shape as .data.
"""

from __future__ import annotations

import numpy as np


class ShapeError(ValueError):
    """Operand shapes are incompatible for the requested operation."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_grad_fns")

    def __init__(self, data, requires_grad=False, dtype=None):
        if dtype is not None:
            data = np.asarray(data, dtype=dtype)
        else:
            data = np.asarray(data)
            if not np.issubdtype(data.dtype, np.floating):
                data = data.astype(np.float32)
        self.data = data
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._grad_fns = ()

    # -- basic introspection -------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self):
        return self.data.item()

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    # -- graph construction --------------------------------------------

    @staticmethod
    def _result(data, parents, grad_fns):
        """Wrap an op result; drops the tape when no parent needs grads."""
        out = Tensor(data)
        tracked = [
            (p, fn)
            for p, fn in zip(parents, grad_fns)
            if isinstance(p, Tensor) and p.requires_grad
        ]
        if tracked:
            out.requires_grad = True
            out._parents = tuple(p for p, _ in tracked)
            out._grad_fns = tuple(fn for _, fn in tracked)
        return out

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def backward(self):
        if self.data.size != 1:
            raise ShapeError(
                f"backward() needs a scalar, got shape {self.shape}"
            )
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node.grad is None:
                continue
            for parent, fn in zip(node._parents, node._grad_fns):
                g = fn(node.grad)
                if parent.grad is None:
                    parent.grad = g.astype(parent.data.dtype, copy=True)
                else:
                    parent.grad = parent.grad + g

    # -- arithmetic (only what the loss bookkeeping needs) ---------------

    def __add__(self, other):
        if isinstance(other, Tensor):
            if self.shape != other.shape:
                raise ShapeError(f"add: {self.shape} vs {other.shape}")
            return Tensor._result(
                self.data + other.data,
                (self, other),
                (lambda g: g, lambda g: g),
            )
        return Tensor._result(self.data + other, (self,), (lambda g: g,))

    __radd__ = __add__

    def __mul__(self, scalar):
        s = float(scalar)
        return Tensor._result(self.data * s, (self,), (lambda g: g * s,))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)


def parameter(data, dtype=np.float32):
    """A trainable leaf tensor."""
    return Tensor(np.asarray(data, dtype=dtype), requires_grad=True)
