"""Reverse-mode automatic differentiation on numpy arrays.

A Tape records operations in creation order; backward() replays the list
in reverse, so no explicit topological sort is needed. When no tape is
active, every op is plain numpy (inference costs no graph bookkeeping).

Only float64 is supported. The op set is exactly what the layout model
needs: dense linear algebra, row gather/scatter for message passing,
pointwise nonlinearities, reductions, and a pairwise-distance op whose
backward is written in closed form.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

__all__ = [
    "Tape",
    "Tensor",
    "record",
    "active_tape",
    "constant",
    "parameter",
    "matmul",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "concat",
    "gather_rows",
    "scatter_add_rows",
    "slice_rows",
    "sigmoid",
    "tanh",
    "relu",
    "square",
    "clamp_min",
    "tsum",
    "tmean",
    "pairwise_distances",
]

_TAPE: "Tape | None" = None

# coincident points get subgradient zero in pairwise_distances
_DIST_EPS = 1e-12


class Tape:
    """Ordered log of (output tensor, backward closure) pairs."""

    def __init__(self):
        self.ops: list[tuple["Tensor", callable]] = []

    def __len__(self):
        return len(self.ops)

    def backward(self, loss: "Tensor"):
        if loss.data.ndim != 0:
            raise ValueError("backward starts from a scalar")
        loss.grad = np.ones_like(loss.data)
        for out, fn in reversed(self.ops):
            if out.grad is not None:
                fn(out.grad)


@contextmanager
def record(tape: Tape):
    global _TAPE
    prev = _TAPE
    _TAPE = tape
    try:
        yield tape
    finally:
        _TAPE = prev


def active_tape() -> Tape | None:
    return _TAPE


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self):
        self.grad = None

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.data.shape}, grad={self.grad is not None})"

    # operator sugar
    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

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

    def __neg__(self):
        return neg(self)


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def parameter(data, name: str = "") -> Tensor:
    return Tensor(np.array(data, dtype=np.float64, copy=True),
                  requires_grad=True, name=name)


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accumulate(t: Tensor, g: np.ndarray, owned: bool = False):
    """Add g into t.grad. owned=True promises g is a fresh array no one
    else references, so the initial assignment can skip the copy."""
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = g if owned else np.array(g, dtype=np.float64, copy=True)
    else:
        t.grad += g


def _make(data, parents, backward_fn) -> Tensor:
    """Wrap an op result; register on the active tape when grads can flow."""
    out = Tensor(data)
    tape = _TAPE
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        tape.ops.append((out, backward_fn))
    return out


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Reduce a broadcast gradient back to the parent's shape."""
    if g.shape == tuple(shape):
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# binary ops


def matmul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)

    def backward(g):
        _accumulate(a, g @ b.data.T, owned=True)
        _accumulate(b, a.data.T @ g, owned=True)

    return _make(a.data @ b.data, (a, b), backward)


def add(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(g, b.data.shape))

    return _make(a.data + b.data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)

    def backward(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(-g, b.data.shape), owned=True)

    return _make(a.data - b.data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)

    def backward(g):
        _accumulate(a, _unbroadcast(g * b.data, a.data.shape), owned=True)
        _accumulate(b, _unbroadcast(g * a.data, b.data.shape), owned=True)

    return _make(a.data * b.data, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = _lift(a), _lift(b)

    def backward(g):
        _accumulate(a, _unbroadcast(g / b.data, a.data.shape), owned=True)
        _accumulate(b, _unbroadcast(-g * a.data / (b.data * b.data),
                                    b.data.shape), owned=True)

    return _make(a.data / b.data, (a, b), backward)


def neg(a) -> Tensor:
    a = _lift(a)

    def backward(g):
        _accumulate(a, -g, owned=True)

    return _make(-a.data, (a,), backward)


# ---------------------------------------------------------------------------
# structure ops


def concat(tensors, axis: int = 0) -> Tensor:
    ts = [_lift(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in ts]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        for t, piece in zip(ts, np.split(g, splits, axis=axis)):
            _accumulate(t, piece)

    return _make(np.concatenate([t.data for t in ts], axis=axis), ts, backward)


def gather_rows(x, idx) -> Tensor:
    x = _lift(x)
    idx = np.asarray(idx, dtype=np.int64)

    def backward(g):
        if x.requires_grad:
            _accumulate(x, _scatter_sum(g, idx, x.data.shape), owned=True)

    return _make(x.data[idx], (x,), backward)


def _scatter_sum(rows: np.ndarray, idx: np.ndarray, shape) -> np.ndarray:
    """Sum rows into a zeros(shape) at idx. bincount beats ufunc.at here."""
    if rows.ndim == 2 and rows.flags.c_contiguous:
        cols = shape[1]
        flat = (idx[:, None] * cols + np.arange(cols)).ravel()
        return np.bincount(flat, weights=rows.ravel(),
                           minlength=shape[0] * cols).reshape(shape)
    acc = np.zeros(shape, dtype=np.float64)
    np.add.at(acc, idx, rows)
    return acc


def scatter_add_rows(x, idx, n_rows: int) -> Tensor:
    """out[idx[i]] += x[i]; rows never indexed stay zero."""
    x = _lift(x)
    idx = np.asarray(idx, dtype=np.int64)
    out_data = _scatter_sum(x.data, idx, (n_rows,) + x.data.shape[1:])

    def backward(g):
        _accumulate(x, g[idx], owned=True)

    return _make(out_data, (x,), backward)


def slice_rows(x, start: int, stop: int) -> Tensor:
    """Contiguous row slice; the forward pass is a view, no copy."""
    x = _lift(x)

    def backward(g):
        if x.requires_grad:
            acc = np.zeros_like(x.data)
            acc[start:stop] = g
            _accumulate(x, acc, owned=True)

    return _make(x.data[start:stop], (x,), backward)


# ---------------------------------------------------------------------------
# pointwise


def sigmoid(a) -> Tensor:
    a = _lift(a)
    # stable in both tails
    x = a.data
    z = np.exp(-np.abs(x))
    out_data = np.where(x >= 0, 1.0, z) / (1.0 + z)

    def backward(g):
        _accumulate(a, g * out_data * (1.0 - out_data), owned=True)

    return _make(out_data, (a,), backward)


def tanh(a) -> Tensor:
    a = _lift(a)
    out_data = np.tanh(a.data)

    def backward(g):
        _accumulate(a, g * (1.0 - out_data * out_data), owned=True)

    return _make(out_data, (a,), backward)


def relu(a) -> Tensor:
    a = _lift(a)
    mask = a.data > 0

    def backward(g):
        _accumulate(a, g * mask, owned=True)

    return _make(np.where(mask, a.data, 0.0), (a,), backward)


def square(a) -> Tensor:
    a = _lift(a)

    def backward(g):
        _accumulate(a, 2.0 * g * a.data, owned=True)

    return _make(a.data * a.data, (a,), backward)


def clamp_min(a, floor: float) -> Tensor:
    a = _lift(a)
    mask = a.data >= floor

    def backward(g):
        _accumulate(a, g * mask, owned=True)

    return _make(np.maximum(a.data, floor), (a,), backward)


# ---------------------------------------------------------------------------
# reductions


def tsum(a) -> Tensor:
    a = _lift(a)

    def backward(g):
        _accumulate(a, np.full(a.data.shape, g), owned=True)

    return _make(a.data.sum(), (a,), backward)


def tmean(a) -> Tensor:
    a = _lift(a)
    count = a.data.size

    def backward(g):
        _accumulate(a, np.full(a.data.shape, g / count), owned=True)

    return _make(a.data.mean(), (a,), backward)


# ---------------------------------------------------------------------------
# geometry


def pairwise_distances(x) -> Tensor:
    """(n, n) Euclidean distance matrix of row vectors, zero diagonal.

    Backward uses the closed form: with S = (G + G^T) / max(D, eps) and
    zero where D vanishes, dL/dX = rowsum(S) * X - S @ X.
    """
    x = _lift(x)
    pts = x.data
    sq = np.sum(pts * pts, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    dist = np.sqrt(d2)

    def backward(g):
        if not x.requires_grad:
            return
        denom = np.maximum(dist, _DIST_EPS)
        s = (g + g.T) / denom
        s[dist <= _DIST_EPS] = 0.0
        np.fill_diagonal(s, 0.0)
        _accumulate(x, s.sum(axis=1)[:, None] * pts - s @ pts, owned=True)

    return _make(dist, (x,), backward)
