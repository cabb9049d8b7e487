"""Experiment protocol: temporal splits, log-rank targets, transductive
training with early stopping, metrics, the training-fraction sweep, and
error analysis.

The graph is built over every split node; models only ever see labels on
the training mask. Validation labels influence nothing but early stopping
and model selection, so perturbing test labels cannot change a trained
model. Ranks are recomputed independently inside each mask group.
"""

from __future__ import annotations

import csv
import importlib.resources
import json
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import date, datetime
from pathlib import Path

import numpy as np

from .corpus import BugRecord, Corpus, clean_text, comment_window
from .errors import BugrankError, UserDataError
from .features import (
    FIELD_SPECS,
    FeatureMatrix,
    HashedTfidfProvider,
    build_features,
    comment_document,
    load_embeddings,
)
from .graph import BugBugGraph, build_bipartite, project
from .models import (
    MODEL_KINDS,
    ModelConfig,
    TrainedModel,
    forward,
    init_params,
    predict,
)
from .numerics import AdamState, adam_step, backward, constant, mae_loss, selection_matrix, sparse_matmul

FRACTIONS = (0.70, 0.50, 0.25, 0.10, 0.05)

MASK_GROUPS = ("train", "val", "test", "hidden")


class EmptySplit(UserDataError):
    pass


class Divergence(BugrankError):
    pass


class MaskMismatch(BugrankError):
    pass


class MissingHeatSnapshot(UserDataError):
    def __init__(self, bug_id: int, crawl: date):
        super().__init__(f"bug {bug_id} has no heat snapshot at or before {crawl}")
        self.bug_id = bug_id


@dataclass(frozen=True)
class SplitSpec:
    train_window: tuple[datetime, datetime]   # half-open [start, end)
    train_comment_end: datetime
    test_window: tuple[datetime, datetime]
    test_comment_end: datetime
    train_heat_crawl: date
    test_heat_crawl: date
    train_fraction: float = 0.70
    seed: int = 0

    def __post_init__(self):
        if self.train_window[0] >= self.train_window[1]:
            raise ValueError("train window must be non-empty")
        if self.test_window[0] >= self.test_window[1]:
            raise ValueError("test window must be non-empty")
        if self.train_window[1] > self.test_window[0]:
            raise ValueError("train and test windows must be ordered and disjoint")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"fraction must be in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class TargetVector:
    node_ids: tuple[int, ...]
    values: np.ndarray
    mask: tuple[str, ...]

    def __post_init__(self):
        if len(self.node_ids) != len(self.values) or len(self.node_ids) != len(self.mask):
            raise MaskMismatch("node_ids, values and mask lengths differ")
        if not np.isfinite(self.values).all():
            raise ValueError("targets must be finite")
        if any(m not in MASK_GROUPS for m in self.mask):
            raise ValueError("unknown mask group")

    def indices(self, group: str) -> np.ndarray:
        return np.array([i for i, m in enumerate(self.mask) if m == group], dtype=np.int64)


@dataclass(frozen=True)
class MetricsReport:
    mae: float
    mse: float
    mape: float | None
    n_eval: int
    n_mape_excluded: int
    model_kind: str
    fraction: float | None = None
    field_spec: str | None = None

    def __post_init__(self):
        if self.mae * self.mae > self.mse + 1e-9:
            raise ValueError(f"mae^2 ({self.mae ** 2}) exceeds mse ({self.mse})")
        if self.mape is not None and self.mape < 0:
            raise ValueError("mape must be non-negative")

    def to_dict(self) -> dict:
        return {
            "model": self.model_kind,
            "fraction": self.fraction,
            "fields": self.field_spec,
            "mae": self.mae,
            "mse": self.mse,
            "mape": self.mape,
            "n_eval": self.n_eval,
            "n_mape_excluded": self.n_mape_excluded,
        }


@dataclass(frozen=True)
class TrainParams:
    learning_rate: float
    eps: float = 1e-8
    weight_decay: float = 0.0
    batch_size: int = 64
    max_epochs: int = 200
    patience: int = 15
    seed: int = 0


def competition_ranks(values, descending: bool = True) -> np.ndarray:
    """1-based ranks; tied values all take the smallest rank of their block."""
    v = np.asarray(values, dtype=np.float64)
    keys = -v if descending else v
    order = np.argsort(keys, kind="stable")
    ranks = np.empty(len(v), dtype=np.float64)
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and keys[order[j + 1]] == keys[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = i + 1
        i = j + 1
    return ranks


def log_rank_targets(heats, most_severe_first: bool = True) -> np.ndarray:
    """ln(competition rank) within one group; rank 1 is the highest heat."""
    if len(heats) == 0:
        raise EmptySplit("cannot rank an empty group")
    return np.log(competition_ranks(heats, descending=most_severe_first))


def heat_at(rec: BugRecord, crawl: date) -> int:
    """Heat from the latest snapshot at or before the crawl date."""
    candidates = [(d, h) for d, h in rec.heat_snapshots if d <= crawl]
    if not candidates:
        raise MissingHeatSnapshot(rec.id, crawl)
    return max(candidates)[1]


def _window_ids(corpus: Corpus, window: tuple[datetime, datetime],
                comment_end: datetime) -> list[int]:
    out = []
    for rec in corpus:
        if window[0] <= rec.created_at < window[1] and comment_window(rec, comment_end):
            out.append(rec.id)
    return sorted(out)


def temporal_split(corpus: Corpus, spec: SplitSpec) -> tuple[list[int], list[int], list[int]]:
    """(train ids, val ids, test ids), each sorted ascending.

    Train-window bugs with at least one windowed comment are shuffled by the
    split seed; the first ``train_fraction`` become training nodes and the
    rest validation. Test-window bugs qualify by the test comment window.
    """
    pool = _window_ids(corpus, spec.train_window, spec.train_comment_end)
    test_ids = _window_ids(corpus, spec.test_window, spec.test_comment_end)
    if not pool:
        raise EmptySplit("no bugs in the training window")
    if not test_ids:
        raise EmptySplit("no bugs in the test window")
    rng = np.random.default_rng(spec.seed)
    shuffled = [pool[i] for i in rng.permutation(len(pool))]
    n_train = max(1, int(round(spec.train_fraction * len(pool))))
    if n_train >= len(pool):
        raise EmptySplit(
            f"fraction {spec.train_fraction} leaves no validation bugs "
            f"(pool of {len(pool)})"
        )
    train_ids = sorted(shuffled[:n_train])
    val_ids = sorted(shuffled[n_train:])
    return train_ids, val_ids, test_ids


def build_targets(corpus: Corpus, node_ids, train_ids, val_ids, test_ids,
                  spec: SplitSpec, most_severe_first: bool = True) -> TargetVector:
    """Log-rank labels with ranks computed independently per mask group."""
    node_ids = tuple(node_ids)
    position = {bid: i for i, bid in enumerate(node_ids)}
    values = np.zeros(len(node_ids))
    mask = ["hidden"] * len(node_ids)
    groups = (
        (train_ids, "train", spec.train_heat_crawl),
        (val_ids, "val", spec.train_heat_crawl),
        (test_ids, "test", spec.test_heat_crawl),
    )
    for ids, group, crawl in groups:
        ids = list(ids)
        if not ids:
            continue
        heats = [heat_at(corpus.get(bid), crawl) for bid in ids]
        targets = log_rank_targets(heats, most_severe_first)
        for bid, t in zip(ids, targets):
            values[position[bid]] = t
            mask[position[bid]] = group
    return TargetVector(node_ids, values, tuple(mask))


def split_graph(corpus: Corpus, node_ids, cutoff: datetime) -> BugBugGraph:
    """Transductive bug-bug graph over exactly the split nodes."""
    keep = set(node_ids)
    sub = Corpus(tuple(rec for rec in corpus if rec.id in keep), corpus.provenance)
    return project(build_bipartite(sub, cutoff))


@dataclass(frozen=True)
class FeatureSource:
    """Where node features come from: deterministic hashed TF-IDF fitted on
    the corpus, or precomputed embedding files."""
    kind: str = "hashed"          # "hashed" | "files"
    dim: int = 100                # per-field dim for hashed providers
    hash_seed: int = 0
    desc_path: str | None = None
    comm_path: str | None = None

    def __post_init__(self):
        if self.kind not in ("hashed", "files"):
            raise ValueError(f"unknown feature source {self.kind!r}")
        if self.kind == "files" and not (self.desc_path and self.comm_path):
            raise ValueError("file feature source needs both embedding paths")


def build_split_features(corpus: Corpus, node_ids, test_id_set, field_spec: str,
                         source: FeatureSource, train_comment_end: datetime,
                         test_comment_end: datetime) -> FeatureMatrix:
    """Node-aligned features; train/val and test rows use their own comment
    windows. File-backed rows arrive pre-windowed, so they load directly."""
    node_ids = tuple(node_ids)
    if source.kind == "files":
        parts = []
        if field_spec in ("description", "both"):
            parts.append(load_embeddings(source.desc_path, node_ids))
        if field_spec in ("comments", "both"):
            parts.append(load_embeddings(source.comm_path, node_ids))
        return FeatureMatrix(node_ids, np.hstack(parts), field_spec)
    end_for = {bid: (test_comment_end if bid in test_id_set else train_comment_end)
               for bid in node_ids}
    provider_desc = provider_comm = None
    if field_spec in ("description", "both"):
        desc_texts = [clean_text(corpus.get(bid).description) for bid in node_ids]
        provider_desc = HashedTfidfProvider(desc_texts, source.dim, source.hash_seed)
    if field_spec in ("comments", "both"):
        comm_texts = [
            comment_document(corpus.get(bid), end_for[bid]) for bid in node_ids
        ]
        provider_comm = HashedTfidfProvider(comm_texts, source.dim, source.hash_seed + 1)
    train_val = [bid for bid in node_ids if bid not in test_id_set]
    test = [bid for bid in node_ids if bid in test_id_set]
    blocks = {}
    if train_val:
        fm = build_features(corpus, train_val, provider_desc, provider_comm,
                            field_spec, train_comment_end)
        blocks.update(zip(train_val, fm.rows))
    if test:
        fm = build_features(corpus, test, provider_desc, provider_comm,
                            field_spec, test_comment_end)
        blocks.update(zip(test, fm.rows))
    rows = np.vstack([blocks[bid] for bid in node_ids])
    return FeatureMatrix(node_ids, rows, field_spec)


def _epoch_metrics(config: ModelConfig, g, X, params, targets: TargetVector,
                   train_idx, val_idx) -> tuple[float, float]:
    out = forward(g, X, {k: constant(v.data) for k, v in params.items()},
                  config, mode="eval")
    preds = out.data.ravel()
    train_mae = float(np.abs(preds[train_idx] - targets.values[train_idx]).mean())
    val_mae = (
        float(np.abs(preds[val_idx] - targets.values[val_idx]).mean())
        if len(val_idx) else float("nan")
    )
    return train_mae, val_mae


def run_training(config: ModelConfig, g: BugBugGraph | None, X,
                 targets: TargetVector, hp: TrainParams) -> TrainedModel:
    """Train with MAE on the training mask only; early-stop on validation
    MAE (training MAE when the validation mask is empty) with the given
    patience; return the parameters of the best epoch."""
    X = np.asarray(getattr(X, "rows", X), dtype=np.float64)
    train_idx = targets.indices("train")
    val_idx = targets.indices("val")
    if len(train_idx) == 0:
        raise EmptySplit("no training nodes")
    params = init_params(config)
    param_list = list(params.values())
    adam = AdamState(hp.learning_rate, eps=hp.eps, weight_decay=hp.weight_decay)
    rng = np.random.default_rng(hp.seed)
    minibatched = config.kind in ("MLP", "SAGE") and hp.batch_size > 0
    y = targets.values.reshape(-1, 1)
    n_nodes = X.shape[0]

    best_signal = float("inf")
    best_epoch = -1
    best_params: dict[str, np.ndarray] = {}
    bad_epochs = 0
    trace: list[tuple[float, float]] = []
    train_select = None if minibatched else selection_matrix(train_idx, n_nodes)

    for epoch in range(hp.max_epochs):
        if minibatched:
            order = train_idx[rng.permutation(len(train_idx))]
            for lo in range(0, len(order), hp.batch_size):
                batch = order[lo:lo + hp.batch_size]
                step_seed = int(rng.integers(2 ** 63))
                if config.kind == "MLP":
                    out = forward(None, X[batch], params, config, "train", step_seed)
                else:
                    out = forward(g, X, params, config, "train", step_seed, targets=batch)
                loss = mae_loss(out, constant(y[batch]))
                if not np.isfinite(loss.item()):
                    raise Divergence(f"non-finite loss at epoch {epoch}")
                backward(loss)
                adam_step(adam, param_list)
                for p in param_list:
                    p.grad = None
        else:
            step_seed = int(rng.integers(2 ** 63))
            out = forward(g, X, params, config, "train", step_seed)
            picked = sparse_matmul(train_select, out)
            loss = mae_loss(picked, constant(y[train_idx]))
            if not np.isfinite(loss.item()):
                raise Divergence(f"non-finite loss at epoch {epoch}")
            backward(loss)
            adam_step(adam, param_list)
            for p in param_list:
                p.grad = None
        train_mae, val_mae = _epoch_metrics(config, g, X, params, targets,
                                            train_idx, val_idx)
        if not np.isfinite(train_mae):
            raise Divergence(f"non-finite training metric at epoch {epoch}")
        trace.append((train_mae, val_mae))
        signal = val_mae if len(val_idx) else train_mae
        if signal < best_signal:
            best_signal = signal
            best_epoch = epoch
            best_params = {name: t.data.copy() for name, t in params.items()}
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= hp.patience:
                break
    if best_epoch < 0:
        raise Divergence("training never produced a finite validation signal")
    return TrainedModel(config, best_params, best_epoch, trace)


def evaluate(model: TrainedModel, g: BugBugGraph | None, X,
             targets: TargetVector, fraction: float | None = None,
             field_spec: str | None = None, group: str = "test") -> MetricsReport:
    """MAE/MSE over the group; MAPE over its nonzero-target nodes, with the
    zero-target exclusions counted."""
    X = np.asarray(getattr(X, "rows", X), dtype=np.float64)
    idx = targets.indices(group)
    preds = predict(model, g, X)[idx]
    truth = targets.values[idx]
    err = np.abs(preds - truth)
    nonzero = truth > 0
    mape = float((err[nonzero] / truth[nonzero]).mean()) if nonzero.any() else None
    return MetricsReport(
        mae=float(err.mean()),
        mse=float((err * err).mean()),
        mape=mape,
        n_eval=len(idx),
        n_mape_excluded=int((~nonzero).sum()),
        model_kind=model.config.kind,
        fraction=fraction,
        field_spec=field_spec,
    )


# ---------------------------------------------------------------------------
# default hyperparameters and the fraction sweep


def load_default_hyperparams() -> dict:
    blob = (importlib.resources.files("bugrank") / "data" / "hyperparams.json").read_text()
    return json.loads(blob)


def fraction_key(fraction: float) -> str:
    return f"{fraction:.2f}"


def resolve_cell_settings(kind: str, fraction: float, input_dim: int,
                          overrides: dict | None = None) -> dict:
    """Merged settings for one sweep cell: defaults, then override layers
    ``all`` < ``<kind>.all`` < ``<kind>.<fraction key>``."""
    defaults = load_default_hyperparams()
    table = defaults["models"][kind]
    key = fraction_key(fraction)
    merged: dict = {
        "patience": defaults["patience"],
        "max_epochs": table.get("max_epochs", defaults["max_epochs"]),
        "batch_size": table.get("batch_size", 64),
        "hidden_dim": table.get("hidden_dim", 64),
        "learning_rate": 0.01,   # for fractions outside the shipped grid
        "eps": 1e-8,
        "weight_decay": 0.0,
        "in_dropout": 0.0,
        "attn_dropout": 0.0,
        "heads": 1,
        "sage_samples": [],
    }
    merged.update(table.get("fractions", {}).get(key, {}))
    overrides = overrides or {}
    for layer in (
        overrides.get("all", {}),
        overrides.get(kind, {}).get("all", {}),
        overrides.get(kind, {}).get(key, {}),
    ):
        merged.update(layer)
    merged["input_dim"] = input_dim
    return merged


def cell_seed(master_seed: int, kind: str, fraction: float, field_spec: str) -> int:
    tag = f"{master_seed}|{kind}|{fraction_key(fraction)}|{field_spec}"
    return zlib.crc32(tag.encode("utf-8")) & 0x7FFFFFFF


def make_cell_config(kind: str, settings: dict, seed: int) -> tuple[ModelConfig, TrainParams]:
    config = ModelConfig(
        kind="MLP" if kind.startswith("MLP") else kind,
        input_dim=settings["input_dim"],
        hidden_dim=int(settings["hidden_dim"]),
        heads=int(settings["heads"]) if kind == "GAT" else 1,
        in_dropout=float(settings["in_dropout"]),
        attn_dropout=float(settings["attn_dropout"]) if kind == "GAT" else 0.0,
        sage_samples=tuple(settings["sage_samples"]) if kind == "SAGE" else (),
        seed=seed,
    )
    hp = TrainParams(
        learning_rate=float(settings["learning_rate"]),
        eps=float(settings["eps"]),
        weight_decay=float(settings["weight_decay"]),
        batch_size=int(settings["batch_size"]),
        max_epochs=int(settings["max_epochs"]),
        patience=int(settings["patience"]),
        seed=seed,
    )
    return config, hp


@dataclass
class SweepCellResult:
    model_kind: str
    fraction: float
    field_spec: str
    metrics: MetricsReport
    best_epoch: int
    n_epochs: int
    model: TrainedModel | None = None


def _run_sweep_cell(args) -> SweepCellResult:
    (kind, fraction, field_spec, g, X, targets, settings, seed,
     keep_model, checkpoint_path) = args
    config, hp = make_cell_config(kind, settings, seed)
    model = run_training(config, g, X, targets, hp)
    metrics = evaluate(model, g, X, targets, fraction=fraction, field_spec=field_spec)
    if checkpoint_path is not None:
        from .numerics import save_checkpoint

        save_checkpoint(checkpoint_path, config.kind, config.to_dict(), model.parameters)
    return SweepCellResult(
        model_kind=kind,
        fraction=fraction,
        field_spec=field_spec,
        metrics=metrics,
        best_epoch=model.best_epoch,
        n_epochs=len(model.training_trace),
        model=model if keep_model else None,
    )


def fraction_sweep(corpus: Corpus, spec: SplitSpec, models=MODEL_KINDS,
                   fractions=FRACTIONS, field_specs=("both",),
                   source: FeatureSource = FeatureSource(),
                   overrides: dict | None = None, seed: int = 0,
                   jobs: int = 1, out_dir: str | Path | None = None,
                   keep_models: bool = False) -> list[SweepCellResult]:
    """One report per (model, fraction, field spec). The node set, graph and
    test set are shared across every cell; only the train/val assignment
    moves with the fraction. Deterministic given the seed, independent of
    ``jobs``."""
    for kind in models:
        if kind not in MODEL_KINDS and not kind.startswith("MLP"):
            raise ValueError(f"unknown model {kind!r}")
    for fs in field_specs:
        if fs not in FIELD_SPECS:
            raise ValueError(f"unknown field spec {fs!r}")
    base = spec
    train0, val0, test_ids = temporal_split(corpus, replace(base, train_fraction=fractions[0]))
    node_ids = tuple(sorted(set(train0) | set(val0) | set(test_ids)))
    g = split_graph(corpus, node_ids, base.test_window[1])
    test_set = set(test_ids)
    features = {
        fs: build_split_features(corpus, node_ids, test_set, fs, source,
                                 base.train_comment_end, base.test_comment_end)
        for fs in field_specs
    }
    targets_by_fraction = {}
    for fraction in fractions:
        tr, va, te = temporal_split(corpus, replace(base, train_fraction=fraction))
        targets_by_fraction[fraction] = build_targets(
            corpus, node_ids, tr, va, te, base
        )
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
    tasks = []
    for field_spec in field_specs:
        for kind in models:
            for fraction in fractions:
                settings = resolve_cell_settings(
                    kind, fraction, features[field_spec].dim, overrides
                )
                ckpt = (
                    str(out_path / _cell_name(kind, fraction, field_spec)) + ".ckpt"
                    if out_path is not None else None
                )
                tasks.append((
                    kind, fraction, field_spec, g, features[field_spec].rows,
                    targets_by_fraction[fraction], settings,
                    cell_seed(seed, kind, fraction, field_spec),
                    keep_models, ckpt,
                ))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_sweep_cell, tasks))
    else:
        results = [_run_sweep_cell(task) for task in tasks]
    if out_path is not None:
        write_reports(results, out_path)
    return results


def _cell_name(kind: str, fraction: float, field_spec: str) -> str:
    return f"{kind}_{fraction_key(fraction)}_{field_spec}"


def write_reports(results: list[SweepCellResult], out_dir: str | Path) -> Path:
    """Per-cell JSON files plus the aggregate CSV; returns the CSV path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ordered = sorted(
        results, key=lambda r: (r.field_spec, r.model_kind, -r.fraction)
    )
    for result in ordered:
        payload = result.metrics.to_dict()
        payload["best_epoch"] = result.best_epoch
        payload["n_epochs"] = result.n_epochs
        name = _cell_name(result.model_kind, result.fraction, result.field_spec)
        (out_dir / f"report_{name}.json").write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    csv_path = out_dir / "aggregate.csv"
    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "fraction", "fields", "mae", "mse", "mape"])
        for result in ordered:
            m = result.metrics
            writer.writerow([
                result.model_kind,
                fraction_key(result.fraction),
                result.field_spec,
                f"{m.mae:.6f}",
                f"{m.mse:.6f}",
                "" if m.mape is None else f"{m.mape:.6f}",
            ])
    return csv_path


# ---------------------------------------------------------------------------
# error analysis


def error_analysis(pred_a, pred_b, targets: TargetVector, g: BugBugGraph,
                   label_a: str = "a", label_b: str = "b") -> dict:
    """Per-bug comparison of two prediction vectors on the test mask.

    Delta is |prediction - truth|; rows are sorted by how much model a beats
    model b. Also counts, among a's wins, test bugs with at least one
    training-mask neighbor."""
    pred_a = np.asarray(pred_a, dtype=np.float64).ravel()
    pred_b = np.asarray(pred_b, dtype=np.float64).ravel()
    n = len(targets.node_ids)
    if len(pred_a) != n or len(pred_b) != n:
        raise MaskMismatch(
            f"predictions cover {len(pred_a)}/{len(pred_b)} nodes, graph has {n}"
        )
    if tuple(g.node_ids) != tuple(targets.node_ids):
        raise MaskMismatch("graph and target node orders differ")
    test_idx = targets.indices("test")
    if len(test_idx) == 0:
        raise MaskMismatch("no test nodes")
    train_set = set(targets.indices("train").tolist())
    neighbor_counts = {
        int(v): sum(1 for u in g.neighbors(int(v)) if u in train_set)
        for v in test_idx
    }
    rows = []
    for v in test_idx:
        v = int(v)
        truth = targets.values[v]
        delta_a = abs(pred_a[v] - truth)
        delta_b = abs(pred_b[v] - truth)
        rows.append({
            "bug_id": targets.node_ids[v],
            "true": float(truth),
            f"pred_{label_a}": float(pred_a[v]),
            f"pred_{label_b}": float(pred_b[v]),
            f"delta_{label_a}": float(delta_a),
            f"delta_{label_b}": float(delta_b),
            "train_neighbors": neighbor_counts[v],
        })
    rows.sort(key=lambda r: r[f"delta_{label_b}"] - r[f"delta_{label_a}"], reverse=True)
    wins = [r for r in rows if r[f"delta_{label_a}"] < r[f"delta_{label_b}"]]
    wins_with_neighbor = [r for r in wins if r["train_neighbors"] > 0]
    return {
        "label_a": label_a,
        "label_b": label_b,
        "n_test": len(test_idx),
        "n_train": len(train_set),
        "a_better": len(wins),
        "a_better_pct": 100.0 * len(wins) / len(test_idx),
        "a_better_with_train_neighbor": len(wins_with_neighbor),
        "a_better_with_train_neighbor_pct": (
            100.0 * len(wins_with_neighbor) / len(wins) if wins else 0.0
        ),
        "cases": rows,
    }


@dataclass(frozen=True)
class NeighborhoodReport:
    anchor: int
    node_ids: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    degrees: dict[int, int]


def anchor_neighborhood(g: BugBugGraph, anchor_id: int, train_ids) -> NeighborhoodReport:
    """The 1.5-hop subgraph: the anchor, its training-mask neighbors, and
    every edge among that node set, with each node's degree inside it."""
    train_ids = set(train_ids)
    anchor_idx = g.index_of(anchor_id)
    members = [anchor_idx] + [
        u for u in g.neighbors(anchor_idx) if g.node_ids[u] in train_ids
    ]
    member_set = set(members)
    edges = []
    for i in sorted(member_set):
        for j in g.neighbors(i):
            if j in member_set and i < j:
                edges.append((g.node_ids[i], g.node_ids[j]))
    degrees = {g.node_ids[i]: 0 for i in sorted(member_set)}
    for a, b in edges:
        degrees[a] += 1
        degrees[b] += 1
    return NeighborhoodReport(
        anchor=anchor_id,
        node_ids=tuple(g.node_ids[i] for i in sorted(member_set)),
        edges=tuple(edges),
        degrees=degrees,
    )
