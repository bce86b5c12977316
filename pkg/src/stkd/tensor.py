"""Reverse-mode autodiff over dense numpy arrays.

Every model in this package builds its forward pass from the primitives here;
`Tensor.backward()` then fills `.grad` on any tensor created with
`requires_grad=True`. Gradient scatter/accumulation is index-ordered, so runs
are reproducible under a fixed seed.
"""

from __future__ import annotations

import numpy as np

from . import config
from .errors import InvalidArgumentError, NumericsError

# Single documented stability policy: floor for logs and divisions.
CLAMP = 1e-12


class Tensor:
    """Dense real array plus optional gradient buffer and tape linkage."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=config.dtype())
        self.grad = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad}{tag})"

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

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def backward(self) -> None:
        """Backpropagate from a scalar output through the recorded tape."""
        if self.data.size != 1:
            raise InvalidArgumentError("backward() requires a scalar tensor")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        for node in topo:
            node.grad = np.zeros_like(node.data)
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _link(out: Tensor, parents: tuple[Tensor, ...], backward, op: str) -> Tensor:
    if config.debug_checks() and not np.all(np.isfinite(out.data)):
        raise NumericsError(f"non-finite values produced by op '{op}'")
    if any(p.requires_grad or p._parents for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _accum(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient back down to the shape it was broadcast from."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise / arithmetic primitives
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data)

    def backward(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _link(out, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data - b.data)

    def backward(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(-g, b.data.shape))

    return _link(out, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data * b.data)

    def backward(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _link(out, (a, b), backward, "mul")


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data / b.data)

    def backward(g):
        _accum(a, _unbroadcast(g / b.data, a.data.shape))
        _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _link(out, (a, b), backward, "div")


def power(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data ** exponent)

    def backward(g):
        _accum(a, g * exponent * a.data ** (exponent - 1))

    return _link(out, (a,), backward, "power")


def relu(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.maximum(a.data, 0.0))

    def backward(g):
        _accum(a, g * (a.data > 0))

    return _link(out, (a,), backward, "relu")


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    x = a.data
    s = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                 np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out = Tensor(s)

    def backward(g):
        _accum(a, g * s * (1.0 - s))

    return _link(out, (a,), backward, "sigmoid")


def tanh(a) -> Tensor:
    a = as_tensor(a)
    t = np.tanh(a.data)
    out = Tensor(t)

    def backward(g):
        _accum(a, g * (1.0 - t * t))

    return _link(out, (a,), backward, "tanh")


def exp(a) -> Tensor:
    a = as_tensor(a)
    e = np.exp(a.data)
    out = Tensor(e)

    def backward(g):
        _accum(a, g * e)

    return _link(out, (a,), backward, "exp")


def log(a) -> Tensor:
    """Natural log with inputs floored at CLAMP; clamped entries get zero grad."""
    a = as_tensor(a)
    clamped = np.maximum(a.data, CLAMP)
    out = Tensor(np.log(clamped))

    def backward(g):
        _accum(a, np.where(a.data > CLAMP, g / clamped, 0.0))

    return _link(out, (a,), backward, "log")


# ---------------------------------------------------------------------------
# linear algebra / shape
# ---------------------------------------------------------------------------

def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(np.matmul(a.data, b.data))

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        _accum(a, _unbroadcast(ga, a.data.shape))
        _accum(b, _unbroadcast(gb, b.data.shape))

    return _link(out, (a, b), backward, "matmul")


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims))

    def backward(g):
        if axis is None:
            _accum(a, np.broadcast_to(g, a.data.shape).copy())
            return
        gg = g
        if not keepdims:
            gg = np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(gg, a.data.shape).copy())

    return _link(out, (a,), backward, "sum")


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        count = a.data.size
    else:
        count = a.data.shape[axis]
    return div(tsum(a, axis=axis, keepdims=keepdims), float(count))


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.reshape(shape))

    def backward(g):
        _accum(a, g.reshape(a.data.shape))

    return _link(out, (a,), backward, "reshape")


def swapaxes(a, ax1: int, ax2: int) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.swapaxes(a.data, ax1, ax2))

    def backward(g):
        _accum(a, np.swapaxes(g, ax1, ax2))

    return _link(out, (a,), backward, "swapaxes")


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis if axis >= 0 else g.ndim + axis] = slice(lo, hi)
            _accum(t, g[tuple(idx)])

    return _link(out, tuple(tensors), backward, "concat")


def rows(a, start: int, stop: int) -> Tensor:
    """Contiguous row slice a[start:stop] with scatter-back gradient."""
    a = as_tensor(a)
    out = Tensor(a.data[start:stop])

    def backward(g):
        full = np.zeros_like(a.data)
        full[start:stop] = g
        _accum(a, full)

    return _link(out, (a,), backward, "rows")


# ---------------------------------------------------------------------------
# indexed gathers (embedding lookups and friends)
# ---------------------------------------------------------------------------

def take_rows(table, ids) -> Tensor:
    """Embedding lookup: table[ids].

    ids may be any integer ndarray; gradient is scatter-added per index in
    ascending flat position order (deterministic).
    """
    table = as_tensor(table)
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= table.data.shape[0]):
        raise IndexError(
            f"row index out of range [0, {table.data.shape[0]}): "
            f"min={ids.min()}, max={ids.max()}")
    out = Tensor(table.data[ids])

    def backward(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, ids.reshape(-1), g.reshape(-1, table.data.shape[1]))
        _accum(table, gt)

    return _link(out, (table,), backward, "take_rows")


def take_rows_padded(table, ids, pad_below: int = 0) -> Tensor:
    """Like take_rows but ids < pad_below yield all-zero rows and no gradient."""
    table = as_tensor(table)
    ids = np.asarray(ids)
    valid = ids >= pad_below
    safe = np.where(valid, ids, 0)
    data = table.data[safe]
    data[~valid] = 0.0
    out = Tensor(data)

    def backward(g):
        gt = np.zeros_like(table.data)
        flat_ids = safe.reshape(-1)
        flat_g = (g * valid[..., None]).reshape(-1, table.data.shape[1])
        np.add.at(gt, flat_ids, flat_g)
        _accum(table, gt)

    return _link(out, (table,), backward, "take_rows_padded")


def take_at(a, idx) -> Tensor:
    """Per-row element pick: out[i] = a[i, idx[i]] for 2-D a."""
    a = as_tensor(a)
    idx = np.asarray(idx)
    rows_ = np.arange(a.data.shape[0])
    if idx.size and (idx.min() < 0 or idx.max() >= a.data.shape[1]):
        raise IndexError(f"column index out of range [0, {a.data.shape[1]})")
    out = Tensor(a.data[rows_, idx])

    def backward(g):
        ga = np.zeros_like(a.data)
        np.add.at(ga, (rows_, idx), g)
        _accum(a, ga)

    return _link(out, (a,), backward, "take_at")


def take_positions(a, pos) -> Tensor:
    """Per-batch row pick: out[b] = a[b, pos[b], :] for 3-D a."""
    a = as_tensor(a)
    pos = np.asarray(pos)
    batch = np.arange(a.data.shape[0])
    out = Tensor(a.data[batch, pos])

    def backward(g):
        ga = np.zeros_like(a.data)
        np.add.at(ga, (batch, pos), g)
        _accum(a, ga)

    return _link(out, (a,), backward, "take_positions")


def segment_sum(x, segments, num_segments: int) -> Tensor:
    """Sum rows of x into num_segments buckets keyed by `segments`."""
    x = as_tensor(x)
    segments = np.asarray(segments)
    data = np.zeros((num_segments,) + x.data.shape[1:], dtype=x.data.dtype)
    np.add.at(data, segments, x.data)
    out = Tensor(data)

    def backward(g):
        _accum(x, g[segments])

    return _link(out, (x,), backward, "segment_sum")


# ---------------------------------------------------------------------------
# softmax family and losses
# ---------------------------------------------------------------------------

def masked_softmax(scores, valid=None, temperature: float = 1.0, axis: int = -1) -> Tensor:
    """Numerically stable softmax with optional boolean mask.

    Masked entries get probability exactly 0; rows with no valid entry come
    out all-zero. Temperature divides the inputs before exponentiation.
    """
    if temperature <= 0:
        raise InvalidArgumentError(f"temperature must be positive, got {temperature}")
    scores = as_tensor(scores)
    if scores.data.shape[axis] == 0:
        raise InvalidArgumentError("softmax over an empty axis")
    z = scores.data / temperature
    if valid is None:
        vmask = np.ones(scores.data.shape, dtype=bool)
    else:
        vmask = np.broadcast_to(np.asarray(valid, dtype=bool), scores.data.shape)
    neg = np.where(vmask, z, -np.inf)
    m = neg.max(axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    e = np.where(vmask, np.exp(neg - m), 0.0)
    s = e.sum(axis=axis, keepdims=True)
    y = e / np.maximum(s, CLAMP)
    out = Tensor(y)

    def backward(g):
        inner = (g * y).sum(axis=axis, keepdims=True)
        _accum(scores, y * (g - inner) / temperature)

    return _link(out, (scores,), backward, "softmax")


def softmax(v, temperature: float = 1.0) -> Tensor:
    """Probability vector from a 1-D score vector (see masked_softmax)."""
    v = as_tensor(v)
    if v.data.ndim != 1 or v.data.size == 0:
        raise InvalidArgumentError("softmax expects a non-empty 1-D vector")
    return masked_softmax(v, valid=None, temperature=temperature, axis=-1)


def cross_entropy(pred, target: int) -> Tensor:
    """-log(pred[target] + CLAMP) for a 1-D probability vector."""
    pred = as_tensor(pred)
    if pred.data.ndim != 1:
        raise InvalidArgumentError("cross_entropy expects a 1-D probability vector")
    if not 0 <= int(target) < pred.data.size:
        raise IndexError(f"target {target} out of range [0, {pred.data.size})")
    if config.debug_checks() and abs(pred.data.sum() - 1.0) > 1e-6:
        raise InvalidArgumentError("cross_entropy input does not sum to 1")
    picked = take_at(reshape(pred, (1, -1)), np.array([int(target)]))
    return -tsum(log(picked))


def batch_cross_entropy(probs, targets) -> Tensor:
    """Mean of -log(probs[i, targets[i]] + CLAMP) over a batch."""
    picked = take_at(probs, np.asarray(targets))
    return -tmean(log(picked))


def kl_divergence(p, q) -> Tensor:
    """KL(p || q) with q floored at CLAMP; p is treated as a constant."""
    p_arr = p.data if isinstance(p, Tensor) else np.asarray(p, dtype=config.dtype())
    q = as_tensor(q)
    if p_arr.shape != q.data.shape:
        raise InvalidArgumentError(
            f"kl_divergence shape mismatch: {p_arr.shape} vs {q.data.shape}")
    # 0 * log(0 / q) contributes exactly 0.
    p_logp = float(np.sum(np.where(p_arr > 0, p_arr * np.log(np.maximum(p_arr, CLAMP)), 0.0)))
    cross = tsum(mul(Tensor(p_arr), log(q)))
    return sub(p_logp, cross)


def batch_kl_divergence(p, q, axis: int = -1) -> Tensor:
    """Mean over leading axes of KL(p_i || q_i); p constant, q on the tape."""
    p_arr = p.data if isinstance(p, Tensor) else np.asarray(p, dtype=config.dtype())
    q = as_tensor(q)
    if p_arr.shape != q.data.shape:
        raise InvalidArgumentError(
            f"kl_divergence shape mismatch: {p_arr.shape} vs {q.data.shape}")
    n_rows = int(np.prod(p_arr.shape) // p_arr.shape[axis])
    p_logp = np.where(p_arr > 0, p_arr * np.log(np.maximum(p_arr, CLAMP)), 0.0).sum()
    cross = tsum(mul(Tensor(p_arr), log(q)))
    return div(sub(float(p_logp), cross), float(n_rows))


# ---------------------------------------------------------------------------
# normalization / regularization
# ---------------------------------------------------------------------------

def layer_norm(x, gain, bias, eps: float = 1e-6) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale-shift."""
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    d = x.data.shape[-1]
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = Tensor(xhat * gain.data + bias.data)

    def backward(g):
        reduce_axes = tuple(range(g.ndim - 1))
        _accum(gain, (g * xhat).sum(axis=reduce_axes))
        _accum(bias, g.sum(axis=reduce_axes))
        gy = g * gain.data
        gx = inv * (gy - gy.mean(axis=-1, keepdims=True)
                    - xhat * (gy * xhat).mean(axis=-1, keepdims=True))
        _accum(x, gx)

    return _link(out, (x, gain, bias), backward, "layer_norm")


def dropout(x, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout; call only in training mode."""
    x = as_tensor(x)
    if rate <= 0.0:
        return x
    keep = (rng.random(x.data.shape) >= rate).astype(x.data.dtype) / (1.0 - rate)
    out = Tensor(x.data * keep)

    def backward(g):
        _accum(x, g * keep)

    return _link(out, (x,), backward, "dropout")
