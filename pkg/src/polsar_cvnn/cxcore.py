"""Complex tensors with reverse-mode differentiation.

Gradient convention
-------------------
For a real scalar loss ``L`` and a tensor ``w = x + j*y`` the stored gradient is

    grad(w) = dL/dx + j * dL/dy  ( = 2 * dL/d conj(w) )

so plain descent ``w <- w - lr * grad(w)`` lowers ``L``.  Real-valued tensors
receive the ordinary real gradient.  Every backward rule below receives the
upstream gradient ``g`` of its output in this convention and returns the
gradients of its inputs in the same convention.  For an elementwise map with
Wirtinger partials ``dy/dz`` and ``dy/dz*`` the rule is

    grad(z) = g * conj(dy/dz) + conj(g) * dy/dz*
"""
from __future__ import annotations

from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import ContractViolation, ShapeError

DEFAULT_DTYPE = np.complex64


class GradRecord(NamedTuple):
    op: str
    parents: tuple
    backward: Callable  # upstream grad -> tuple of parent grads (None = no grad)


def _as_array(value, dtype=None):
    if isinstance(value, CTensor):
        return value.data
    arr = np.asarray(value)
    if dtype is not None:
        return arr.astype(dtype, copy=False)
    if arr.dtype.kind in "biu":
        return arr.astype(np.float64)
    return arr


class CTensor:
    """N-dimensional (complex or real) array that records how it was computed."""

    __slots__ = ("data", "grad", "requires_grad", "node", "name", "__weakref__")
    __array_priority__ = 100

    def __init__(self, data, requires_grad=False, dtype=None, name=None):
        if isinstance(data, np.ndarray) and dtype is None:
            self.data = data
        else:
            self.data = np.asarray(_as_array(data, dtype))
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.node = None
        self.name = name

    # -- construction helpers -------------------------------------------------
    @classmethod
    def _from_op(cls, data, op, parents, backward):
        out = cls(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out.node = GradRecord(op, tuple(parents), backward)
        return out

    def detach(self):
        return CTensor(self.data)

    # -- array-like properties ------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_complex(self):
        return np.iscomplexobj(self.data)

    def numpy(self):
        return self.data

    def item(self):
        return self.data.item()

    def __len__(self):
        return len(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"CTensor(shape={self.shape}, dtype={self.dtype}{flag})"

    # -- operators ------------------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)

    def conj(self):
        return conj(self)

    def abs(self):
        return cabs(self)

    def angle(self):
        return angle(self)

    def exp(self):
        return cexp(self)

    @property
    def real(self):
        return real(self)

    @property
    def imag(self):
        return imag(self)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        return transpose(self, axes or None)

    def backward(self, leaves=None):
        wirtinger_backward(self, leaves)


def as_tensor(value, dtype=None) -> CTensor:
    if isinstance(value, CTensor):
        return value
    return CTensor(_as_array(value, dtype))


def tensor(data, requires_grad=False, dtype=DEFAULT_DTYPE, name=None) -> CTensor:
    """Copy ``data`` into a new leaf tensor (complex64 unless told otherwise)."""
    return CTensor(np.array(data, dtype=dtype), requires_grad=requires_grad, name=name)


# -- gradient plumbing --------------------------------------------------------

def _fit_grad(g, like):
    """Reduce a broadcast gradient back onto the shape/dtype of ``like``."""
    shape = like.shape
    if g.shape != shape:
        extra = g.ndim - len(shape)
        if extra:
            g = g.sum(axis=tuple(range(extra)))
        axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
        if axes:
            g = g.sum(axis=axes, keepdims=True)
    if not np.iscomplexobj(like.data) and np.iscomplexobj(g):
        g = g.real
    return g.astype(like.dtype, copy=False)


def _broadcast_shape(a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeError(f"cannot broadcast {a.shape} with {b.shape}") from exc


def _toposort(root):
    order, state = [], {}
    stack = [(root, False)]
    while stack:
        t, done = stack.pop()
        key = id(t)
        if done:
            state[key] = 2
            order.append(t)
            continue
        s = state.get(key)
        if s == 2:
            continue
        if s == 1:
            raise RuntimeError("cycle detected in gradient graph")
        state[key] = 1
        stack.append((t, True))
        if t.node is not None:
            for p in t.node.parents:
                if p.requires_grad and state.get(id(p)) != 2:
                    if state.get(id(p)) == 1:
                        raise RuntimeError("cycle detected in gradient graph")
                    stack.append((p, False))
    return order


def wirtinger_backward(loss: CTensor, leaves=None, imag_tol=1e-6):
    """Populate ``.grad`` on every tensor that ``loss`` depends on.

    Gradients accumulate into existing ``.grad`` arrays.  When ``leaves`` is
    given, only those tensors receive a ``.grad``.  Intermediate gradients may
    share storage with each other and must be treated as read-only.
    """
    if loss.size != 1 or loss.ndim != 0:
        raise ContractViolation(f"loss must be a 0-d scalar, got shape {loss.shape}")
    value = complex(loss.data)
    if abs(value.imag) > imag_tol * max(1.0, abs(value.real)):
        raise ContractViolation(f"loss must be real-valued, got imaginary part {value.imag:g}")
    if not loss.requires_grad:
        return
    only = None if leaves is None else {id(t) for t in leaves}
    grads = {id(loss): np.ones((), dtype=loss.dtype)}
    for t in reversed(_toposort(loss)):
        g = grads.pop(id(t), None)
        if g is None:
            continue
        if only is None or id(t) in only:
            if t.grad is not None:
                t.grad = t.grad + g
            else:
                t.grad = g.copy() if t.node is None else g
        if t.node is None:
            continue
        pgrads = t.node.backward(g)
        for p, pg in zip(t.node.parents, pgrads):
            if pg is None or not p.requires_grad:
                continue
            pg = _fit_grad(pg, p)
            key = id(p)
            grads[key] = pg if key not in grads else grads[key] + pg


# -- elementwise ops ----------------------------------------------------------

def add(a, b) -> CTensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b)
    return CTensor._from_op(a.data + b.data, "add", (a, b), lambda g: (g, g))


def sub(a, b) -> CTensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b)
    return CTensor._from_op(a.data - b.data, "sub", (a, b), lambda g: (g, -g))


def mul(a, b) -> CTensor:
    """Hadamard product."""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b)
    ad, bd = a.data, b.data
    return CTensor._from_op(ad * bd, "mul", (a, b),
                            lambda g: (g * np.conj(bd), g * np.conj(ad)))


hadamard = mul


def div(a, b) -> CTensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b)
    ad, bd = a.data, b.data
    out = ad / bd

    def backward(g):
        gb = g * np.conj(-out / bd) if b.requires_grad else None
        return g * np.conj(1.0 / bd), gb

    return CTensor._from_op(out, "div", (a, b), backward)


def conj(a) -> CTensor:
    a = as_tensor(a)
    return CTensor._from_op(np.conj(a.data), "conj", (a,), lambda g: (np.conj(g),))


def cabs(a) -> CTensor:
    """Modulus, returned as a real tensor."""
    a = as_tensor(a)
    r = np.abs(a.data)

    def backward(g):
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(r > 0, a.data / np.where(r > 0, r, 1), 0)
        return (np.real(g) * unit,)

    return CTensor._from_op(r, "abs", (a,), backward)


def angle(a) -> CTensor:
    """Argument in (-pi, pi], real-valued; angle(0) is 0 with zero gradient."""
    a = as_tensor(a)
    z = a.data
    theta = np.angle(z) if np.iscomplexobj(z) else np.where(z < 0, np.pi, 0.0).astype(z.dtype)
    theta = np.where(z == 0, 0, theta).astype(np.real(z).dtype)

    def backward(g):
        r2 = np.abs(z) ** 2
        safe = np.where(r2 > 0, r2, 1)
        # d theta/dx = -y/r^2, d theta/dy = x/r^2
        return (np.where(r2 > 0, np.real(g) * 1j * z / safe, 0),)

    return CTensor._from_op(theta, "angle", (a,), backward)


def cexp(a) -> CTensor:
    a = as_tensor(a)
    out = np.exp(a.data)
    return CTensor._from_op(out, "exp", (a,), lambda g: (g * np.conj(out),))


def real(a) -> CTensor:
    a = as_tensor(a)
    return CTensor._from_op(np.real(a.data).copy(), "real", (a,), lambda g: (np.real(g),))


def imag(a) -> CTensor:
    a = as_tensor(a)
    return CTensor._from_op(np.imag(a.data).copy(), "imag", (a,), lambda g: (1j * np.real(g),))


def make_complex(re, im) -> CTensor:
    """Assemble ``re + j*im`` from two real tensors."""
    re, im = as_tensor(re), as_tensor(im)
    _broadcast_shape(re, im)
    out = re.data + 1j * im.data
    return CTensor._from_op(out, "complex", (re, im), lambda g: (np.real(g), np.imag(g)))


def sqrt(a) -> CTensor:
    a = as_tensor(a)
    out = np.sqrt(a.data)
    return CTensor._from_op(out, "sqrt", (a,), lambda g: (g * np.conj(0.5 / out),))


def relu(a) -> CTensor:
    """Real rectifier; only meaningful for real tensors."""
    a = as_tensor(a)
    mask = a.data > 0
    return CTensor._from_op(np.where(mask, a.data, 0).astype(a.dtype), "relu", (a,),
                            lambda g: (np.where(mask, g, 0),))


# -- reductions and shape ops ------------------------------------------------

def tsum(a, axis=None, keepdims=False) -> CTensor:
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)
    shape = a.shape

    def backward(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape),)

    return CTensor._from_op(np.asarray(out), "sum", (a,), backward)


def mean(a, axis=None, keepdims=False) -> CTensor:
    a = as_tensor(a)
    n = a.size if axis is None else int(np.prod([a.shape[i] for i in np.atleast_1d(axis)]))
    return tsum(a, axis=axis, keepdims=keepdims) * (1.0 / n)


def reshape(a, shape) -> CTensor:
    a = as_tensor(a)
    old = a.shape
    try:
        out = a.data.reshape(shape)
    except ValueError as exc:
        raise ShapeError(str(exc)) from exc
    return CTensor._from_op(out, "reshape", (a,), lambda g: (g.reshape(old),))


def transpose(a, axes=None) -> CTensor:
    a = as_tensor(a)
    inv = None if axes is None else tuple(np.argsort(axes))
    return CTensor._from_op(np.transpose(a.data, axes), "transpose", (a,),
                            lambda g: (np.transpose(g, inv),))


def getitem(a, index) -> CTensor:
    a = as_tensor(a)
    shape = a.shape

    def backward(g):
        full = np.zeros(shape, dtype=g.dtype)
        np.add.at(full, index, g)
        return (full,)

    return CTensor._from_op(np.asarray(a.data[index]), "getitem", (a,), backward)


def concat(tensors: Sequence[CTensor], axis=0) -> CTensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    splits = np.cumsum(sizes)[:-1]
    return CTensor._from_op(out, "concat", tuple(tensors),
                            lambda g: tuple(np.split(g, splits, axis=axis)))


def matmul(a, b) -> CTensor:
    """Complex matrix product (batched over leading axes like ``np.matmul``)."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 1 or a.shape[-1] != b.shape[-2 if b.ndim > 1 else 0]:
        raise ShapeError(f"matmul inner extents differ: {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data
    vec = bd.ndim == 1

    def backward(g):
        if vec:
            ga = g[..., :, None] * np.conj(bd)[None, :]
            gb = np.conj(np.swapaxes(ad, -1, -2)) @ g
        else:
            ga = g @ np.conj(np.swapaxes(bd, -1, -2))
            gb = np.conj(np.swapaxes(ad, -1, -2)) @ g
        return ga, gb

    return CTensor._from_op(ad @ bd, "matmul", (a, b), backward)
