"""Dense float64 tensors with record-then-reverse automatic differentiation.

Every differentiable operation builds a new :class:`Tensor` that remembers its
parents and a closure mapping the upstream gradient to per-parent gradients.
:meth:`Tensor.backward` walks that record in reverse topological order.

Forward and backward results are checked for NaN/Inf; a non-finite value
raises :class:`~mmft.errors.NumericError` instead of propagating.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Iterable, Sequence

import numpy as np

from mmft.errors import DimensionError, GraphError, NumericError

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference, finite differences)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def is_grad_enabled() -> bool:
    return _GRAD_ENABLED


def _check_finite(arr: np.ndarray, op: str, where: str = "forward") -> None:
    # a finite sum proves every entry finite; only overflow needs the full scan
    if not np.isfinite(np.add.reduce(arr, axis=None)) and not np.isfinite(arr).all():
        raise NumericError(f"non-finite value in {where} of '{op}'")


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (reverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    ndiff = grad.ndim - len(shape)
    if ndiff > 0:
        grad = grad.sum(axis=tuple(range(ndiff)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """n-dimensional float64 array participating in a differentiation graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op", "_consumed")
    __array_priority__ = 1000

    def __init__(self, data, requires_grad: bool = False):
        arr = np.array(data, dtype=np.float64)
        _check_finite(arr, "tensor")
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable | None = None
        self._op = "leaf"
        self._consumed = False

    # -- construction helpers -------------------------------------------------
    @classmethod
    def _from_op(cls, data: np.ndarray, parents: Sequence["Tensor"], backward: Callable, op: str) -> "Tensor":
        _check_finite(data, op)
        out = cls.__new__(cls)
        out.data = data
        out.grad = None
        out._op = op
        out._consumed = False
        track = _GRAD_ENABLED and any(p.requires_grad for p in parents)
        out.requires_grad = track
        if track:
            out._parents = tuple(parents)
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag}, op={self._op})"

    def __len__(self) -> int:
        return len(self.data)

    # -- reverse pass ------------------------------------------------------
    def backward(self) -> None:
        """Populate ``.grad`` of every ``requires_grad`` leaf reachable from this scalar."""
        if self.data.size != 1:
            raise GraphError(f"backward() needs a scalar loss, got shape {self.shape}")
        if self._consumed:
            raise GraphError("backward() already called on this graph; re-run the forward pass")
        if not self.requires_grad:
            raise GraphError("loss does not depend on any tensor requiring grad")

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))

        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            parent_grads = node._backward(g)
            for p, pg in zip(node._parents, parent_grads):
                if pg is None or not p.requires_grad:
                    continue
                _check_finite(pg, node._op, "backward")
                key = id(p)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg
            node._parents = ()
            node._backward = None
        self._consumed = True

    # -- operator sugar ------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __getitem__(self, idx):
        return index(self, idx)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def max(self, axis=-1, keepdims=False):
        return tmax(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes if axes else None)

    def swapaxes(self, a, b):
        axes = list(range(self.ndim))
        axes[a], axes[b] = axes[b], axes[a]
        return transpose(self, tuple(axes))

    @property
    def T(self):
        return self.swapaxes(-1, -2)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)

    def tanh(self):
        return tanh(self)

    def sigmoid(self):
        return sigmoid(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# -- elementwise arithmetic ---------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return Tensor._from_op(
        a.data + b.data, (a, b),
        lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)), "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    return Tensor._from_op(
        a.data - b.data, (a, b),
        lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)), "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data

    def backward(g):
        ga = _unbroadcast(g * bd, ad.shape) if a.requires_grad else None
        gb = _unbroadcast(g * ad, bd.shape) if b.requires_grad else None
        return ga, gb

    return Tensor._from_op(ad * bd, (a, b), backward, "mul")


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    if not np.all(bd != 0):
        raise NumericError("division by zero in 'div'")
    out = ad / bd

    def backward(g):
        ga = _unbroadcast(g / bd, ad.shape) if a.requires_grad else None
        gb = _unbroadcast(-g * out / bd, bd.shape) if b.requires_grad else None
        return ga, gb

    return Tensor._from_op(out, (a, b), backward, "div")


def power(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    p = float(exponent)
    ad = a.data
    with np.errstate(all="ignore"):
        out = ad ** p
    return Tensor._from_op(out, (a,), lambda g: (g * p * ad ** (p - 1.0),), "pow")


def exp(a) -> Tensor:
    a = as_tensor(a)
    with np.errstate(over="ignore"):
        out = np.exp(a.data)
    return Tensor._from_op(out, (a,), lambda g: (g * out,), "exp")


def log(a) -> Tensor:
    a = as_tensor(a)
    ad = a.data
    if not np.all(ad > 0):
        raise NumericError("log of non-positive value")
    return Tensor._from_op(np.log(ad), (a,), lambda g: (g / ad,), "log")


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    if not np.all(a.data > 0):
        raise NumericError("sqrt of non-positive value")
    out = np.sqrt(a.data)
    return Tensor._from_op(out, (a,), lambda g: (g * 0.5 / out,), "sqrt")


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = np.tanh(a.data)
    return Tensor._from_op(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return Tensor._from_op(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    return Tensor._from_op(a.data * mask, (a,), lambda g: (g * mask,), "relu")


def leaky_relu(a, slope: float = 0.2) -> Tensor:
    a = as_tensor(a)
    scale = np.where(a.data > 0, 1.0, slope)
    return Tensor._from_op(a.data * scale, (a,), lambda g: (g * scale,), "leaky_relu")


def elu(a, alpha: float = 1.0) -> Tensor:
    a = as_tensor(a)
    x = a.data
    neg = alpha * np.expm1(np.minimum(x, 0.0))
    out = np.where(x > 0, x, neg)
    slope = np.where(x > 0, 1.0, neg + alpha)
    return Tensor._from_op(out, (a,), lambda g: (g * slope,), "elu")


def where(cond, a, b) -> Tensor:
    """Elementwise select; ``cond`` is a constant boolean array."""
    cond = np.asarray(cond, dtype=bool)
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.shape, b.shape
    out = np.where(cond, a.data, b.data)
    return Tensor._from_op(
        out, (a, b),
        lambda g: (_unbroadcast(np.where(cond, g, 0.0), sa), _unbroadcast(np.where(cond, 0.0, g), sb)),
        "where")


# -- reductions -----------------------------------------------------------

def _norm_axis(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    shape = a.shape
    axes = _norm_axis(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, shape).copy(),)

    return Tensor._from_op(np.asarray(out), (a,), backward, "sum")


def mean(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    axes = _norm_axis(axis, a.ndim)
    n = int(np.prod([a.shape[i] for i in axes])) if axes else 1
    return tsum(a, axes, keepdims) * (1.0 / n)


def tmax(a, axis=-1, keepdims=False) -> Tensor:
    """Max along one axis; the gradient flows to the first maximal entry."""
    a = as_tensor(a)
    ax = axis % a.ndim
    idx = np.argmax(a.data, axis=ax)
    out = np.take_along_axis(a.data, np.expand_dims(idx, ax), axis=ax)
    shape = a.shape

    def backward(g):
        gk = g if keepdims else np.expand_dims(g, ax)
        full = np.zeros(shape)
        np.put_along_axis(full, np.expand_dims(idx, ax), gk, axis=ax)
        return (full,)

    return Tensor._from_op(out if keepdims else np.squeeze(out, ax), (a,), backward, "max")


# -- shape manipulation -------------------------------------------------------

def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    return Tensor._from_op(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),), "reshape")


def transpose(a, axes=None) -> Tensor:
    a = as_tensor(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inv = tuple(np.argsort(axes))
    return Tensor._from_op(a.data.transpose(axes), (a,), lambda g: (g.transpose(inv),), "transpose")


def _is_basic_index(idx) -> bool:
    items = idx if isinstance(idx, tuple) else (idx,)
    return all(isinstance(i, (int, np.integer, slice)) or i is None or i is Ellipsis for i in items)


def index(a, idx) -> Tensor:
    """Basic or advanced (gather) indexing; advanced gradients scatter-add."""
    a = as_tensor(a)
    shape = a.shape
    basic = _is_basic_index(idx)
    out = a.data[idx]
    if not basic:
        out = out.copy()

    def backward(g):
        full = np.zeros(shape)
        if basic:
            full[idx] += g
        else:
            np.add.at(full, idx, g)
        return (full,)

    return Tensor._from_op(np.asarray(out), (a,), backward, "index")


def concat(tensors: Iterable, axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    ax = axis % ts[0].ndim
    sizes = [t.shape[ax] for t in ts]
    bounds = np.cumsum([0] + sizes)

    def backward(g):
        return tuple(
            np.take(g, np.arange(bounds[i], bounds[i + 1]), axis=ax) for i in range(len(ts)))

    return Tensor._from_op(np.concatenate([t.data for t in ts], axis=ax), ts, backward, "concat")


def stack(tensors: Iterable, axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    ax = axis % (ts[0].ndim + 1)
    return Tensor._from_op(
        np.stack([t.data for t in ts], axis=ax), ts,
        lambda g: tuple(np.take(g, i, axis=ax) for i in range(len(ts))), "stack")


def pad_left(a, n: int, axis: int) -> Tensor:
    """Zero-pad ``n`` entries at the start of ``axis``."""
    a = as_tensor(a)
    if n == 0:
        return a
    ax = axis % a.ndim
    widths = [(0, 0)] * a.ndim
    widths[ax] = (n, 0)
    size = a.shape[ax]
    return Tensor._from_op(
        np.pad(a.data, widths), (a,),
        lambda g: (np.take(g, np.arange(n, n + size), axis=ax),), "pad_left")


# -- linear algebra -----------------------------------------------------------

def matmul(a, b) -> Tensor:
    """Matrix product over the last two axes, batch axes broadcast."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul needs ndim >= 2 operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data

    def backward(g):
        ga = _unbroadcast(g @ np.swapaxes(bd, -1, -2), ad.shape) if a.requires_grad else None
        gb = None
        if b.requires_grad:
            if bd.ndim == 2:
                # shared weight: fold the batch axes into one product
                gb = ad.reshape(-1, ad.shape[-1]).T @ g.reshape(-1, g.shape[-1])
            else:
                gb = _unbroadcast(np.swapaxes(ad, -1, -2) @ g, bd.shape)
        return ga, gb

    return Tensor._from_op(ad @ bd, (a, b), backward, "matmul")


# -- normalisation ------------------------------------------------------------

def softmax(x, axis: int = -1, mask=None) -> Tensor:
    """Max-subtracted softmax. ``mask`` (bool, broadcastable) marks admissible entries.

    Masked-out entries are exactly zero and do not influence the result.
    """
    x = as_tensor(x)
    if np.isnan(x.data).any():
        raise NumericError("NaN input to softmax")
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        full = np.broadcast_shapes(x.shape, mask.shape)
        if full != x.shape:
            x = add(x, np.zeros(full))
        mask = np.broadcast_to(mask, full)
    z = x.data
    if mask is not None:
        if not mask.any(axis=axis).all():
            raise NumericError("softmax row with every entry masked")
        z = np.where(mask, z, -np.inf)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return Tensor._from_op(out, (x,), backward, "softmax")


def log_softmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    if np.isnan(x.data).any():
        raise NumericError("NaN input to log_softmax")
    z = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    out = z - lse
    sm = np.exp(out)
    return Tensor._from_op(
        out, (x,), lambda g: (g - sm * g.sum(axis=axis, keepdims=True),), "log_softmax")


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    mu = mean(x, axis=-1, keepdims=True)
    xc = x - mu
    var = mean(xc * xc, axis=-1, keepdims=True)
    return xc / sqrt(var + eps) * gain + bias


def softmax_stable(x, axis: int = -1) -> Tensor:
    """Alias kept for readability at call sites that emphasise overflow safety."""
    return softmax(x, axis=axis)
