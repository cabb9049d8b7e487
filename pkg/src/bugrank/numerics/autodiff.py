"""Reverse-mode automatic differentiation over dense 2-D float64 tensors.

Every operation returns a fresh ``Tensor`` holding a backward closure;
``backward(scalar)`` walks the recorded graph in reverse topological
order and accumulates exact analytic gradients into every tensor built
with ``requires_grad=True``. A graph instance is single-threaded.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..errors import BugrankError, LengthMismatch


class ShapeMismatch(BugrankError):
    pass


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeMismatch(f"tensors are 2-D; got shape {arr.shape}")
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeMismatch(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def constant(data) -> Tensor:
    return Tensor(data, requires_grad=False)


def parameter(data) -> Tensor:
    return Tensor(data, requires_grad=True)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward_fn) -> Tensor:
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad:
        out._parents = parents
        out._backward = backward_fn
    return out


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into every requires-grad tensor's ``grad``."""
    if loss.shape != (1, 1):
        raise ShapeMismatch(f"backward needs a scalar (1x1) tensor, got {loss.shape}")
    if not loss.requires_grad:
        return
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    loss.grad = np.ones((1, 1))
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")
    out_data = a.data @ b.data

    def back(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return _make(out_data, (a, b), back)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeMismatch(f"add: {a.shape} vs {b.shape}")

    def back(g):
        if a.requires_grad:
            a._accumulate(g)
        if b.requires_grad:
            b._accumulate(g)

    return _make(a.data + b.data, (a, b), back)


def add_row(a: Tensor, row: Tensor) -> Tensor:
    """Broadcast-add a (1, d) row onto every row of an (n, d) tensor."""
    if row.shape != (1, a.shape[1]):
        raise ShapeMismatch(f"add_row: {a.shape} + {row.shape}")

    def back(g):
        if a.requires_grad:
            a._accumulate(g)
        if row.requires_grad:
            row._accumulate(g.sum(axis=0, keepdims=True))

    return _make(a.data + row.data, (a, row), back)


def transpose(a: Tensor) -> Tensor:
    def back(g):
        if a.requires_grad:
            a._accumulate(g.T)

    return _make(a.data.T.copy(), (a,), back)


def relu(x: Tensor) -> Tensor:
    pos = x.data > 0

    def back(g):
        if x.requires_grad:
            x._accumulate(g * pos)

    return _make(np.where(pos, x.data, 0.0), (x,), back)


def elu(x: Tensor, alpha: float = 1.0) -> Tensor:
    pos = x.data > 0
    out_data = np.where(pos, x.data, alpha * np.expm1(x.data))

    def back(g):
        if x.requires_grad:
            x._accumulate(g * np.where(pos, 1.0, out_data + alpha))

    return _make(out_data, (x,), back)


def leaky_relu(x: Tensor, negative_slope: float = 0.2) -> Tensor:
    pos = x.data > 0

    def back(g):
        if x.requires_grad:
            x._accumulate(g * np.where(pos, 1.0, negative_slope))

    return _make(np.where(pos, x.data, negative_slope * x.data), (x,), back)


def softmax_rows(x: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """Row-wise softmax; with a boolean mask, off-mask entries get weight 0
    and rows with no admitted entry come out all-zero."""
    z = x.data
    if mask is not None:
        if mask.shape != z.shape:
            raise ShapeMismatch(f"softmax mask: {mask.shape} vs {z.shape}")
        masked = np.where(mask, z, -np.inf)
        row_max = masked.max(axis=1, keepdims=True)
        row_max = np.where(np.isfinite(row_max), row_max, 0.0)
        e = np.exp(np.where(mask, z - row_max, -np.inf))
    else:
        e = np.exp(z - z.max(axis=1, keepdims=True))
    denom = e.sum(axis=1, keepdims=True)
    out_data = np.divide(e, denom, out=np.zeros_like(e), where=denom > 0)

    def back(g):
        if x.requires_grad:
            inner = (g * out_data).sum(axis=1, keepdims=True)
            x._accumulate(out_data * (g - inner))

    return _make(out_data, (x,), back)


def dropout(x: Tensor, p: float, seed: int) -> Tensor:
    """Inverted dropout with a per-call seed; ``p == 0`` is the identity."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout p must be in [0, 1), got {p}")
    if p == 0.0:
        return x
    rng = np.random.default_rng(seed)
    scale = (rng.random(x.shape) >= p) / (1.0 - p)

    def back(g):
        if x.requires_grad:
            x._accumulate(g * scale)

    return _make(x.data * scale, (x,), back)


def concat_cols(parts: list[Tensor]) -> Tensor:
    if not parts:
        raise ShapeMismatch("concat_cols needs at least one tensor")
    n = parts[0].shape[0]
    if any(p.shape[0] != n for p in parts):
        raise ShapeMismatch(
            f"concat_cols: row counts differ: {[p.shape for p in parts]}"
        )
    widths = [p.shape[1] for p in parts]
    offsets = np.cumsum([0] + widths)

    def back(g):
        for part, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if part.requires_grad:
                part._accumulate(g[:, lo:hi])

    return _make(np.hstack([p.data for p in parts]), tuple(parts), back)


class SparseMatrix:
    """Constant sparse operand for ``sparse_matmul``; never differentiated."""

    def __init__(self, matrix: sp.spmatrix):
        self.csr = sp.csr_matrix(matrix)
        self.csr.sort_indices()
        self._transpose = self.csr.T.tocsr()
        self._transpose.sort_indices()

    @property
    def shape(self) -> tuple[int, int]:
        return self.csr.shape

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()


def sparse_matmul(a: SparseMatrix, x: Tensor) -> Tensor:
    if a.shape[1] != x.shape[0]:
        raise ShapeMismatch(f"sparse_matmul: {a.shape} @ {x.shape}")

    def back(g):
        if x.requires_grad:
            x._accumulate(a._transpose @ g)

    return _make(a.csr @ x.data, (x,), back)


def selection_matrix(indices, n_cols: int) -> SparseMatrix:
    """Row-selection operator: (len(indices), n_cols) 0/1 matrix."""
    indices = np.asarray(indices, dtype=np.int64)
    data = np.ones(len(indices))
    rows = np.arange(len(indices))
    return SparseMatrix(
        sp.csr_matrix((data, (rows, indices)), shape=(len(indices), n_cols))
    )


def _check_loss_shapes(pred: Tensor, target: Tensor) -> None:
    if pred.shape != target.shape:
        raise LengthMismatch(f"loss: {pred.shape} vs {target.shape}")
    if pred.data.size < 1:
        raise LengthMismatch("loss needs at least one element")


def mae_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean absolute error; gradient is sign(pred - target)/n, zero at ties."""
    _check_loss_shapes(pred, target)
    diff = pred.data - target.data
    n = diff.size

    def back(g):
        scaled = g[0, 0] * np.sign(diff) / n
        if pred.requires_grad:
            pred._accumulate(scaled)
        if target.requires_grad:
            target._accumulate(-scaled)

    return _make(np.array([[np.abs(diff).mean()]]), (pred, target), back)


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    _check_loss_shapes(pred, target)
    diff = pred.data - target.data
    n = diff.size

    def back(g):
        scaled = g[0, 0] * 2.0 * diff / n
        if pred.requires_grad:
            pred._accumulate(scaled)
        if target.requires_grad:
            target._accumulate(-scaled)

    return _make(np.array([[(diff * diff).mean()]]), (pred, target), back)
