"""Reverse-mode autodiff over numpy float64 arrays.

Covers exactly the operation set the networks and losses in this project
need (dense/conv layers, squashed-Gaussian policies, L2-norm losses).
Anything fancier is out of scope on purpose.
"""

from __future__ import annotations

import contextlib

import numpy as np

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Disable graph building inside the block (forward values unchanged)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def grad_enabled():
    return _GRAD_ENABLED


def _as_array(x):
    return np.asarray(x, dtype=np.float64)


class Var:
    """A node in the backward graph: a float64 array plus its pullback."""

    __slots__ = ("data", "grad", "_parents", "_bw", "requires_grad")

    def __init__(self, data, parents=(), bw=None, requires_grad=None):
        self.data = _as_array(data)
        self.grad = None
        if requires_grad is None:
            requires_grad = _GRAD_ENABLED and (
                bw is not None or not parents
            )
        if not _GRAD_ENABLED:
            requires_grad = False
        self.requires_grad = requires_grad
        self._parents = parents if self.requires_grad else ()
        self._bw = bw if self.requires_grad else None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Var(shape={self.data.shape}, grad={'set' if self.grad is not None else 'none'})"

    def backward(self, grad_output=None):
        """Accumulate d(self)/d(leaf) into .grad of every reachable leaf."""
        if grad_output is None:
            if self.data.size != 1:
                raise ValueError("backward() without grad_output needs a scalar")
            grad_output = np.ones_like(self.data)
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen and p.requires_grad:
                    stack.append((p, False))
        self.grad = _as_array(grad_output)
        if self.grad.shape != self.data.shape:
            raise ValueError(
                f"grad_output shape {self.grad.shape} != value shape {self.data.shape}"
            )
        for node in reversed(topo):
            if node._bw is not None and node.grad is not None:
                node._bw(node.grad)

    def _accum(self, g):
        if self.grad is None:
            self.grad = g.copy() if isinstance(g, np.ndarray) else _as_array(g)
        else:
            self.grad = self.grad + g

    # operator sugar
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

    def __matmul__(self, other):
        return matmul(self, other)


def as_var(x):
    return x if isinstance(x, Var) else Var(x, requires_grad=False)


def _unbroadcast(grad, shape):
    """Sum grad down to `shape` (reverse of numpy broadcasting)."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _binary(a, b, out, bw_a, bw_b):
    if not _GRAD_ENABLED:
        return Var(out)
    parents = []
    closures = []
    if isinstance(a, Var) and a.requires_grad:
        parents.append(a)
        closures.append((a, bw_a))
    if isinstance(b, Var) and b.requires_grad:
        parents.append(b)
        closures.append((b, bw_b))
    if not parents:
        return Var(out, requires_grad=False)

    def bw(g):
        for node, fn in closures:
            node._accum(_unbroadcast(fn(g), node.data.shape))

    return Var(out, tuple(parents), bw)


def _unary(a, out, bw_fn):
    if not _GRAD_ENABLED or not (isinstance(a, Var) and a.requires_grad):
        return Var(out, requires_grad=False)

    def bw(g):
        a._accum(_unbroadcast(bw_fn(g), a.data.shape))

    return Var(out, (a,), bw)


def add(a, b):
    a, b = as_var(a), as_var(b)
    return _binary(a, b, a.data + b.data, lambda g: g, lambda g: g)


def sub(a, b):
    a, b = as_var(a), as_var(b)
    return _binary(a, b, a.data - b.data, lambda g: g, lambda g: -g)


def mul(a, b):
    a, b = as_var(a), as_var(b)
    return _binary(a, b, a.data * b.data, lambda g: g * b.data, lambda g: g * a.data)


def div(a, b):
    a, b = as_var(a), as_var(b)
    out = a.data / b.data
    return _binary(
        a, b, out, lambda g: g / b.data, lambda g: -g * a.data / (b.data * b.data)
    )


def matmul(a, b):
    a, b = as_var(a), as_var(b)
    out = a.data @ b.data
    return _binary(a, b, out, lambda g: g @ b.data.T, lambda g: a.data.T @ g)


def leaky_relu(a, slope=0.01):
    a = as_var(a)
    mask = a.data > 0.0
    out = np.where(mask, a.data, slope * a.data)
    return _unary(a, out, lambda g: g * np.where(mask, 1.0, slope))


def tanh(a):
    a = as_var(a)
    out = np.tanh(a.data)
    return _unary(a, out, lambda g: g * (1.0 - out * out))


def exp(a):
    a = as_var(a)
    out = np.exp(a.data)
    return _unary(a, out, lambda g: g * out)


def log(a):
    a = as_var(a)
    return _unary(a, np.log(a.data), lambda g: g / a.data)


def softplus(a):
    """log(1 + e^x), computed without overflow for large |x|."""
    a = as_var(a)
    out = np.maximum(a.data, 0.0) + np.log1p(np.exp(-np.abs(a.data)))
    sig = 1.0 / (1.0 + np.exp(-a.data))
    return _unary(a, out, lambda g: g * sig)


def square(a):
    a = as_var(a)
    return _unary(a, a.data * a.data, lambda g: g * 2.0 * a.data)


def row_norm(a):
    """Euclidean norm of each row of a 2-D array -> shape (rows,).

    Forward is the exact norm; at a zero row the (sub)gradient 0 is used so
    perfect predictions do not poison the backward pass with NaNs.
    """
    a = as_var(a)
    out = np.sqrt(np.sum(a.data * a.data, axis=-1))
    safe = np.where(out > 0.0, out, 1.0)

    def bw_fn(g):
        return (g / safe)[..., None] * a.data

    return _unary(a, out, bw_fn)


def vsum(a, axis=None):
    a = as_var(a)
    out = np.sum(a.data, axis=axis)

    def bw_fn(g):
        if axis is None:
            return np.broadcast_to(g, a.data.shape)
        return np.broadcast_to(np.expand_dims(g, axis), a.data.shape)

    return _unary(a, out, bw_fn)


def vmean(a, axis=None):
    a = as_var(a)
    n = a.data.size if axis is None else a.data.shape[axis]
    return mul(vsum(a, axis=axis), 1.0 / n)


def concat(vars_, axis=-1):
    vars_ = [as_var(v) for v in vars_]
    out = np.concatenate([v.data for v in vars_], axis=axis)
    if not _GRAD_ENABLED:
        return Var(out)
    parents = [v for v in vars_ if v.requires_grad]
    if not parents:
        return Var(out, requires_grad=False)
    sizes = [v.data.shape[axis] for v in vars_]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        pieces = [
            np.take(g, range(offsets[i], offsets[i + 1]), axis=axis)
            for i in range(len(vars_))
        ]
        for v, piece in zip(vars_, pieces):
            if v.requires_grad:
                v._accum(piece)

    return Var(out, tuple(parents), bw)


def take_cols(a, start, stop):
    a = as_var(a)
    out = a.data[..., start:stop]

    def bw_fn(g):
        full = np.zeros_like(a.data)
        full[..., start:stop] = g
        return full

    return _unary(a, out, bw_fn)


def clip(a, lo, hi):
    """Clamp values; gradient passes only through the interior."""
    a = as_var(a)
    out = np.clip(a.data, lo, hi)
    interior = (a.data > lo) & (a.data < hi)
    return _unary(a, out, lambda g: g * interior)


def minimum(a, b):
    a, b = as_var(a), as_var(b)
    take_a = a.data <= b.data
    out = np.where(take_a, a.data, b.data)
    return _binary(
        a, b, out, lambda g: g * take_a, lambda g: g * (~take_a)
    )


def reshape(a, shape):
    a = as_var(a)
    return _unary(a, a.data.reshape(shape), lambda g: g.reshape(a.data.shape))


def _im2col(x, kh, kw, sh, sw, ho, wo):
    b, c = x.shape[0], x.shape[1]
    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    windows = windows[:, :, ::sh, ::sw]  # (B, C, Ho, Wo, kh, kw), still a view
    return windows.transpose(0, 2, 3, 1, 4, 5).reshape(b * ho * wo, c * kh * kw)


def _col2im(cols, xshape, kh, kw, sh, sw, ho, wo):
    b, c = xshape[0], xshape[1]
    cols = cols.reshape(b, ho, wo, c, kh, kw).transpose(0, 3, 4, 5, 1, 2)
    dx = np.zeros(xshape, dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            dx[:, :, i : i + sh * ho : sh, j : j + sw * wo : sw] += cols[:, :, i, j]
    return dx


def conv2d(x, w, b, stride):
    """Valid (unpadded) 2-D convolution, NCHW, via im2col + GEMM.

    x: (B, Cin, H, W), w: (Cout, Cin, kh, kw), b: (Cout,).
    """
    x, w, b = as_var(x), as_var(w), as_var(b)
    bsz, cin, h, wid = x.data.shape
    cout, cin_w, kh, kw = w.data.shape
    if cin != cin_w:
        raise ValueError(f"conv2d channel mismatch: input {cin}, weight {cin_w}")
    sh = sw = int(stride)
    ho = (h - kh) // sh + 1
    wo = (wid - kw) // sw + 1
    if ho < 1 or wo < 1:
        raise ValueError(f"conv2d kernel {kh}x{kw} does not fit input {h}x{wid}")
    cols = _im2col(x.data, kh, kw, sh, sw, ho, wo)
    wmat = w.data.reshape(cout, -1)
    out2 = cols @ wmat.T + b.data
    out = out2.reshape(bsz, ho, wo, cout).transpose(0, 3, 1, 2)
    if not _GRAD_ENABLED:
        return Var(out)
    parents = tuple(v for v in (x, w, b) if v.requires_grad)
    if not parents:
        return Var(out, requires_grad=False)

    def bw(g):
        g2 = g.transpose(0, 2, 3, 1).reshape(bsz * ho * wo, cout)
        if w.requires_grad:
            w._accum((g2.T @ cols).reshape(w.data.shape))
        if b.requires_grad:
            b._accum(g2.sum(axis=0))
        if x.requires_grad:
            dcols = g2 @ wmat
            x._accum(_col2im(dcols, x.data.shape, kh, kw, sh, sw, ho, wo))

    return Var(out, parents, bw)
