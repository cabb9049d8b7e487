"""The four regressors: text MLP, GCN, GAT, and GraphSAGE.

All models end in the same prediction head, a linear layer under ReLU,
so predictions are non-negative like the log-rank targets. Graph models
run transductively over a fixed node order; SAGE additionally supports
mini-batched, neighbor-sampled training forwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .graph import BugBugGraph
from .numerics import (
    SparseMatrix,
    Tensor,
    add,
    add_row,
    concat_cols,
    constant,
    dropout,
    elu,
    leaky_relu,
    matmul,
    parameter,
    relu,
    selection_matrix,
    softmax_rows,
    sparse_matmul,
    transpose,
)

MODEL_KINDS = ("MLP", "GCN", "GAT", "SAGE")

LEAKY_SLOPE = 0.2  # attention logit nonlinearity


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    input_dim: int
    hidden_dim: int
    heads: int = 1
    in_dropout: float = 0.0
    attn_dropout: float = 0.0
    sage_samples: tuple[int, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.input_dim <= 0 or self.hidden_dim <= 0:
            raise ValueError("dims must be positive")
        if not (0.0 <= self.in_dropout < 1.0 and 0.0 <= self.attn_dropout < 1.0):
            raise ValueError("dropouts must be in [0, 1)")
        if self.heads < 1:
            raise ValueError("heads must be >= 1")
        if self.kind == "SAGE":
            if not self.sage_samples:
                raise ValueError("SAGE needs per-layer sample counts")
            object.__setattr__(self, "sage_samples", tuple(int(s) for s in self.sage_samples))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "heads": self.heads,
            "in_dropout": self.in_dropout,
            "attn_dropout": self.attn_dropout,
            "sage_samples": list(self.sage_samples),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelConfig":
        return cls(
            kind=obj["kind"],
            input_dim=int(obj["input_dim"]),
            hidden_dim=int(obj["hidden_dim"]),
            heads=int(obj.get("heads", 1)),
            in_dropout=float(obj.get("in_dropout", 0.0)),
            attn_dropout=float(obj.get("attn_dropout", 0.0)),
            sage_samples=tuple(obj.get("sage_samples", ())),
            seed=int(obj.get("seed", 0)),
        )


@dataclass
class TrainedModel:
    config: ModelConfig
    parameters: dict[str, np.ndarray]
    best_epoch: int
    training_trace: list[tuple[float, float]] = field(default_factory=list)


def _glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


HEAD_BIAS_INIT = 0.1
# The prediction head is ReLU(h.w + b) trained with MAE against non-negative
# targets, and the flat ReLU region is an absorbing state: once every
# training node's pre-activation goes negative the gradient is exactly zero
# forever. Glorot head weights make that happen at (or shortly after) init
# with O(1) probability, because graph layers smooth rows so the head
# pre-activations share a sign. Starting the head at w = 0, b = +0.1 puts
# every node in the live region with no random transient.


def init_params(config: ModelConfig) -> dict[str, Tensor]:
    """Glorot-uniform hidden weights, zero hidden biases; the prediction
    head starts at zero weights and a small positive bias. Seeded by the
    config."""
    rng = np.random.default_rng(config.seed)
    d, h = config.input_dim, config.hidden_dim
    params: dict[str, Tensor] = {}
    if config.kind == "MLP":
        params["w1"] = parameter(_glorot(rng, d, h))
        params["b1"] = parameter(np.zeros((1, h)))
        params["w2"] = parameter(np.zeros((h, 1)))
        params["b2"] = parameter(np.full((1, 1), HEAD_BIAS_INIT))
        return params
    if config.kind == "GCN":
        params["wg"] = parameter(_glorot(rng, d, h))
    elif config.kind == "GAT":
        for k in range(config.heads):
            params[f"head{k}.w"] = parameter(_glorot(rng, d, h))
            params[f"head{k}.a_src"] = parameter(_glorot(rng, h, 1))
            params[f"head{k}.a_dst"] = parameter(_glorot(rng, h, 1))
    elif config.kind == "SAGE":
        params["w1"] = parameter(_glorot(rng, 2 * d, h))
        params["w2"] = parameter(_glorot(rng, 2 * h, h))
    head_in = h * config.heads if config.kind == "GAT" else h
    params["out_w"] = parameter(np.zeros((head_in, 1)))
    params["out_b"] = parameter(np.full((1, 1), HEAD_BIAS_INIT))
    return params


def count_parameters(params: dict) -> int:
    return sum(np.asarray(getattr(v, "data", v)).size for v in params.values())


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else constant(np.asarray(x, dtype=np.float64))


def _head(hidden: Tensor, params: dict[str, Tensor]) -> Tensor:
    return relu(add_row(matmul(hidden, params["out_w"]), params["out_b"]))


def _sub_seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


@lru_cache(maxsize=8)
def normalized_adjacency(g: BugBugGraph) -> SparseMatrix:
    """Self-loop renormalization: D~^(-1/2) (A + I) D~^(-1/2)."""
    a_hat = g.adjacency_matrix() + sp.identity(g.n, format="csr")
    deg = np.asarray(a_hat.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(deg)
    scaled = a_hat.multiply(inv_sqrt[:, np.newaxis]).multiply(inv_sqrt[np.newaxis, :])
    return SparseMatrix(scaled)


@lru_cache(maxsize=8)
def attention_mask(g: BugBugGraph) -> np.ndarray:
    """Boolean n x n mask of attention neighborhoods N(i) + self-loop."""
    mask = g.adjacency_matrix().toarray() > 0
    np.fill_diagonal(mask, True)
    mask.setflags(write=False)
    return mask


@lru_cache(maxsize=8)
def mean_adjacency(g: BugBugGraph) -> SparseMatrix:
    """Row-normalized adjacency (no self-loops); zero rows for isolated nodes."""
    adj = g.adjacency_matrix()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    return SparseMatrix(adj.multiply(inv[:, np.newaxis]))


def mlp_forward(X, params: dict[str, Tensor], config: ModelConfig | None = None,
                mode: str = "eval", seed: int = 0) -> Tensor:
    x = _as_tensor(X)
    if mode == "train" and config is not None and config.in_dropout > 0:
        x = dropout(x, config.in_dropout, seed)
    hidden = relu(add_row(matmul(x, params["w1"]), params["b1"]))
    return relu(add_row(matmul(hidden, params["w2"]), params["b2"]))


def gcn_forward(g: BugBugGraph, X, params: dict[str, Tensor], config: ModelConfig,
                mode: str = "eval", seed: int = 0) -> Tensor:
    x = _as_tensor(X)
    if mode == "train" and config.in_dropout > 0:
        x = dropout(x, config.in_dropout, seed)
    hidden = elu(sparse_matmul(normalized_adjacency(g), matmul(x, params["wg"])))
    return _head(hidden, params)


def gat_forward(g: BugBugGraph, X, params: dict[str, Tensor], config: ModelConfig,
                mode: str = "eval", seed: int = 0,
                attention_sink: list | None = None) -> Tensor:
    x = _as_tensor(X)
    seeds = _sub_seeds(seed, config.heads + 1)
    if mode == "train" and config.in_dropout > 0:
        x = dropout(x, config.in_dropout, seeds[0])
    mask = attention_mask(g)
    n = g.n
    ones_row = constant(np.ones((1, n)))
    ones_col = constant(np.ones((n, 1)))
    head_outputs = []
    for k in range(config.heads):
        h = matmul(x, params[f"head{k}.w"])
        src_score = matmul(h, params[f"head{k}.a_src"])   # contribution of node i
        dst_score = matmul(h, params[f"head{k}.a_dst"])   # contribution of node j
        logits = leaky_relu(
            add(matmul(src_score, ones_row), matmul(ones_col, transpose(dst_score))),
            LEAKY_SLOPE,
        )
        alpha = softmax_rows(logits, mask=mask)
        if attention_sink is not None:
            attention_sink.append(alpha.data.copy())
        if mode == "train" and config.attn_dropout > 0:
            alpha = dropout(alpha, config.attn_dropout, seeds[1 + k])
        head_outputs.append(matmul(alpha, h))
    hidden = elu(concat_cols(head_outputs) if len(head_outputs) > 1 else head_outputs[0])
    return _head(hidden, params)


def _sample_neighbors(g: BugBugGraph, v: int, size: int,
                      rng: np.random.Generator) -> list[int]:
    nbrs = g.neighbors(v)
    if not nbrs:
        return []
    if size >= len(nbrs):
        return list(nbrs)
    picks = sorted(rng.choice(len(nbrs), size=size, replace=False))
    return [nbrs[i] for i in picks]


def sage_forward(g: BugBugGraph, X, params: dict[str, Tensor], config: ModelConfig,
                 mode: str = "eval", seed: int = 0, targets=None) -> Tensor:
    """Two mean-aggregator layers. Train mode samples neighborhoods without
    replacement per layer and evaluates only the target rows; eval mode uses
    every neighbor for every node and ignores the seed."""
    X = np.asarray(getattr(X, "data", X), dtype=np.float64)
    samples = config.sage_samples
    s1 = samples[0]
    s2 = samples[1] if len(samples) > 1 else samples[0]
    if mode == "eval":
        mean_adj = mean_adjacency(g)
        x0 = constant(X)
        h1 = elu(matmul(concat_cols([x0, sparse_matmul(mean_adj, x0)]), params["w1"]))
        h2 = elu(matmul(concat_cols([h1, sparse_matmul(mean_adj, h1)]), params["w2"]))
        return _head(h2, params)
    rng = np.random.default_rng(seed)
    batch = np.arange(g.n) if targets is None else np.asarray(list(targets), dtype=np.int64)
    # outer layer samples first so the inner layer knows which nodes it feeds
    outer_sets: list[list[int]] = []
    layer1_nodes: set[int] = set(int(v) for v in batch)
    for v in batch:
        chosen = _sample_neighbors(g, int(v), s2, rng)
        outer_sets.append(chosen)
        layer1_nodes.update(chosen)
    layer1 = np.asarray(sorted(layer1_nodes), dtype=np.int64)
    layer1_index = {int(v): i for i, v in enumerate(layer1)}
    # inner layer: sampled means of raw features for every layer-1 node
    layer0_nodes: set[int] = set(int(v) for v in layer1)
    inner_sets: list[list[int]] = []
    for v in layer1:
        chosen = _sample_neighbors(g, int(v), s1, rng)
        inner_sets.append(chosen)
        layer0_nodes.update(chosen)
    layer0 = np.asarray(sorted(layer0_nodes), dtype=np.int64)
    layer0_index = {int(v): i for i, v in enumerate(layer0)}

    rows, cols, data = [], [], []
    for r, chosen in enumerate(inner_sets):
        for u in chosen:
            rows.append(r)
            cols.append(layer0_index[u])
            data.append(1.0 / len(chosen))
    m1 = SparseMatrix(sp.csr_matrix((data, (rows, cols)),
                                    shape=(len(layer1), len(layer0))))
    rows, cols, data = [], [], []
    for r, chosen in enumerate(outer_sets):
        for u in chosen:
            rows.append(r)
            cols.append(layer1_index[u])
            data.append(1.0 / len(chosen))
    m2 = SparseMatrix(sp.csr_matrix((data, (rows, cols)),
                                    shape=(len(batch), len(layer1))))

    x0 = constant(X[layer0])
    self1 = constant(X[layer1])
    h1 = elu(matmul(concat_cols([self1, sparse_matmul(m1, x0)]), params["w1"]))
    batch_sel = selection_matrix([layer1_index[int(v)] for v in batch], len(layer1))
    self2 = sparse_matmul(batch_sel, h1)
    h2 = elu(matmul(concat_cols([self2, sparse_matmul(m2, h1)]), params["w2"]))
    return _head(h2, params)


def forward(g: BugBugGraph | None, X, params: dict[str, Tensor], config: ModelConfig,
            mode: str = "eval", seed: int = 0, targets=None) -> Tensor:
    if config.kind == "MLP":
        return mlp_forward(X, params, config, mode, seed)
    if config.kind == "GCN":
        return gcn_forward(g, X, params, config, mode, seed)
    if config.kind == "GAT":
        return gat_forward(g, X, params, config, mode, seed)
    if config.kind == "SAGE":
        return sage_forward(g, X, params, config, mode, seed, targets)
    raise ValueError(f"unknown model kind {config.kind!r}")


def predict(model: TrainedModel, g: BugBugGraph | None, X) -> np.ndarray:
    """Eval-mode predictions (length-n vector) from stored parameters."""
    params = {name: constant(value) for name, value in model.parameters.items()}
    out = forward(g, X, params, model.config, mode="eval")
    return out.data.ravel().copy()
