"""Small dense tensor engine with reverse-mode differentiation.

Tensors wrap numpy arrays.  Only the handful of operations the recommender
and the compressor need are provided; each op records a closure that maps the
output gradient to its parents' gradients.  Parameters live in a
:class:`ParamStore` together with their gradient accumulators and Adam
moments.
"""
from __future__ import annotations

import contextlib
import contextvars
import math
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import NumericError, ShapeError

_dtype: contextvars.ContextVar[type] = contextvars.ContextVar("dtype", default=np.float32)
_grad_enabled: contextvars.ContextVar[bool] = contextvars.ContextVar("grad_enabled", default=True)


@contextlib.contextmanager
def precision(dtype) -> Iterator[None]:
    """Build new tensors with ``dtype`` inside the block (float64 for gradient checks)."""
    token = _dtype.set(np.dtype(dtype).type)
    try:
        yield
    finally:
        _dtype.reset(token)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def current_dtype() -> type:
    return _dtype.get()


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=_dtype.get())
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self.name = name
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, dtype={self.data.dtype})"

    # operator sugar for the common cases
    def __matmul__(self, other: Tensor) -> Tensor:
        return matmul(self, other)

    def __add__(self, other: Tensor) -> Tensor:
        return add(self, other)

    @property
    def T(self) -> Tensor:
        return transpose(self)


def constant(data) -> Tensor:
    return Tensor(data)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _finite(out: np.ndarray, op: str) -> np.ndarray:
    if not np.isfinite(out).all():
        raise NumericError(f"{op} produced non-finite values")
    return out


def _node(out: np.ndarray, op: str, parents: tuple[Tensor, ...], backward) -> Tensor:
    t = Tensor(_finite(out, op))
    if _grad_enabled.get() and any(p.requires_grad for p in parents):
        t.requires_grad = True
        t._parents = parents
        t._backward = backward
    return t


# ----------------------------------------------------------------------------
# forward operations


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product; either operand may be a vector (numpy semantics)."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim not in (1, 2) or b.data.ndim not in (1, 2):
        raise ShapeError(f"matmul expects 1-D or 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    A, B = a.data, b.data

    def backward(g):
        if A.ndim == 2 and B.ndim == 2:
            return g @ B.T, A.T @ g
        if A.ndim == 2:  # (n,k) @ (k,)
            return np.outer(g, B), A.T @ g
        if B.ndim == 2:  # (k,) @ (k,m)
            return B @ g, np.outer(A, g)
        return g * B, g * A

    return _node(A @ B, "matmul", (a, b), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; ``b`` may also be a row vector broadcast over the leading axis."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape == b.shape:
        return _node(a.data + b.data, "add", (a, b), lambda g: (g, g))
    if a.data.ndim == 2 and b.data.ndim == 1 and a.shape[1] == b.shape[0]:
        return _node(a.data + b.data, "add", (a, b), lambda g: (g, g.sum(axis=0, dtype=np.float64).astype(g.dtype)))
    raise ShapeError(f"add shape mismatch: {a.shape} + {b.shape}")


def scale(a: Tensor, c: float) -> Tensor:
    a = _as_tensor(a)
    return _node(a.data * a.data.dtype.type(c), "scale", (a,), lambda g: (g * g.dtype.type(c),))


def scalar_times(s: Tensor, c: np.ndarray) -> Tensor:
    """Product of a learned scalar (shape ``(1,)``) with a constant array."""
    s = _as_tensor(s)
    if s.data.size != 1:
        raise ShapeError(f"scalar_times expects a single-element tensor, got {s.shape}")
    c = np.asarray(c, dtype=s.data.dtype)

    def backward(g):
        return (np.array([np.sum(g * c, dtype=np.float64)], dtype=g.dtype).reshape(s.shape),)

    return _node(s.data.reshape(()) * c, "scalar_times", (s,), backward)


def transpose(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"transpose expects a matrix, got {a.shape}")
    return _node(a.data.T, "transpose", (a,), lambda g: (g.T,))


def relu(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    mask = a.data > 0
    return _node(np.where(mask, a.data, 0).astype(a.data.dtype), "relu", (a,), lambda g: (g * mask,))


def row_softmax(a: Tensor) -> Tensor:
    """Softmax along the last axis, stabilised by the row maximum."""
    a = _as_tensor(a)
    if a.data.ndim not in (1, 2):
        raise ShapeError(f"row_softmax expects 1-D or 2-D input, got {a.shape}")
    x = a.data.astype(np.float64)
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    p64 = e / e.sum(axis=-1, keepdims=True)
    p = p64.astype(a.data.dtype)

    def backward(g):
        g64 = g.astype(np.float64)
        dot = (g64 * p64).sum(axis=-1, keepdims=True)
        return ((p64 * (g64 - dot)).astype(g.dtype),)

    return _node(p, "row_softmax", (a,), backward)


def embedding_lookup(table: Tensor, index: Sequence[int] | np.ndarray) -> Tensor:
    table = _as_tensor(table)
    idx = np.asarray(index, dtype=np.int64)
    if table.data.ndim != 2:
        raise ShapeError(f"embedding table must be a matrix, got {table.shape}")
    if idx.ndim != 1:
        raise ShapeError("embedding index must be a flat list")
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise ShapeError(f"embedding index out of range for table with {table.shape[0]} rows")

    def backward(g):
        out = np.zeros_like(table.data)
        np.add.at(out, idx, g)
        return (out,)

    return _node(table.data[idx], "embedding_lookup", (table,), backward)


def mean_pool_rows(a: Tensor, mask: Sequence[bool] | np.ndarray | None = None) -> Tensor:
    """Mean of the rows selected by ``mask`` (all rows when omitted)."""
    a = _as_tensor(a)
    if a.data.ndim != 2:
        raise ShapeError(f"mean_pool_rows expects a matrix, got {a.shape}")
    m = np.ones(a.shape[0], dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if m.shape != (a.shape[0],):
        raise ShapeError(f"mask length {m.shape} does not match {a.shape[0]} rows")
    n = int(m.sum())
    if n == 0:
        raise ShapeError("mean_pool_rows needs at least one selected row")
    # sorting each column first makes the result independent of row order
    out = (np.sort(a.data[m], axis=0).sum(axis=0, dtype=np.float64) / n).astype(a.data.dtype)

    def backward(g):
        full = np.zeros_like(a.data)
        full[m] = g / n
        return (full,)

    return _node(out, "mean_pool_rows", (a,), backward)


def cross_entropy(logits: Tensor, target: int) -> Tensor:
    """Negative log-likelihood of ``target`` under softmax(logits), as a scalar tensor."""
    logits = _as_tensor(logits)
    if logits.data.ndim != 1:
        raise ShapeError(f"cross_entropy expects a logit vector, got {logits.shape}")
    if not 0 <= target < logits.shape[0]:
        raise ShapeError(f"target {target} outside {logits.shape[0]} classes")
    x = logits.data.astype(np.float64)
    mx = x.max()
    lse = mx + math.log(np.exp(x - mx).sum())
    loss = lse - x[target]

    def backward(g):
        p = np.exp(x - lse)
        p[target] -= 1.0
        return ((p * float(g.reshape(-1)[0])).astype(logits.data.dtype),)

    return _node(np.array([loss]), "cross_entropy", (logits,), backward)


def total(a: Tensor) -> Tensor:
    """Sum of all entries as a single-element tensor."""
    a = _as_tensor(a)
    s = np.array([a.data.sum(dtype=np.float64)])
    return _node(s, "total", (a,), lambda g: (np.full_like(a.data, g.reshape(-1)[0]),))


# ----------------------------------------------------------------------------
# reverse pass


def _topological(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
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
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(param) into ``param.grad`` for every reachable parameter."""
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward is None:
            node.grad += g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = pg


# ----------------------------------------------------------------------------
# parameters and optimisation


class ParamStore:
    """Named parameters with gradient accumulators and Adam moment buffers."""

    def __init__(self) -> None:
        self.params: dict[str, Tensor] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, value: np.ndarray) -> Tensor:
        if name in self.params:
            raise ValueError(f"duplicate parameter name: {name}")
        t = Tensor(value, requires_grad=True, name=name)
        self.params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __iter__(self):
        return iter(self.params.items())

    def names(self) -> list[str]:
        return list(self.params)

    def grads(self) -> dict[str, np.ndarray]:
        return {k: t.grad for k, t in self.params.items()}

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad[...] = 0

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: t.data for k, t in self.params.items()}

    def load(self, arrays: dict[str, np.ndarray]) -> None:
        for name, value in arrays.items():
            t = self.params[name]
            if t.shape != value.shape:
                raise ShapeError(f"parameter {name}: expected {t.shape}, got {value.shape}")
            t.data = np.asarray(value, dtype=t.data.dtype).copy()


def adam_step(store: ParamStore, lr: float = 3e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8) -> None:
    """One bias-corrected Adam update over every parameter, then zero the gradients."""
    store.step_count += 1
    t = store.step_count
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    step_size = lr / c1
    inv_c2 = 1.0 / math.sqrt(c2)
    for name, p in store.params.items():
        g = p.grad
        m = store._m.get(name)
        if m is None:
            m = store._m[name] = np.zeros_like(p.data)
            store._v[name] = np.zeros_like(p.data)
        v = store._v[name]
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * (g * g)
        denom = np.sqrt(v)
        denom *= inv_c2
        denom += eps
        upd = m / denom
        upd *= step_size
        p.data -= upd
        _finite(p.data, f"adam update of {name}")
    store.zero_grad()


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    a = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_in, fan_out))


def normal_table(rng: np.random.Generator, rows: int, cols: int, std: float = 0.1) -> np.ndarray:
    return rng.normal(0.0, std, size=(rows, cols))


# ----------------------------------------------------------------------------
# gradient checking


def gradient_check(loss_fn: Callable[[], Tensor], store: ParamStore, h: float = 1e-3, names: Sequence[str] | None = None) -> dict[str, float]:
    """Compare analytic gradients with central differences.

    Returns the worst elementwise relative error per parameter, where the
    error is ``|analytic - numeric| / max(|analytic|, |numeric|, 1)``.  Run
    under ``precision(np.float64)``; float32 round-off at ``h = 1e-3`` is of
    the same order as the tolerance.
    """
    store.zero_grad()
    backward(loss_fn())
    analytic = {k: v.copy() for k, v in store.grads().items()}
    store.zero_grad()
    worst: dict[str, float] = {}
    with no_grad():
        for name in names or store.names():
            p = store[name]
            flat = p.data.reshape(-1)
            assert np.shares_memory(flat, p.data), "parameter storage must be contiguous"
            num = np.zeros(flat.size)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + h
                up = loss_fn().item()
                flat[i] = orig - h
                down = loss_fn().item()
                flat[i] = orig
                num[i] = (up - down) / (2 * h)
            a = analytic[name].reshape(-1).astype(np.float64)
            denom = np.maximum(np.maximum(np.abs(a), np.abs(num)), 1.0)
            worst[name] = float(np.max(np.abs(a - num) / denom)) if flat.size else 0.0
    return worst
