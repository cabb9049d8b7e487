"""Batch command-line interface.

Subcommands: ingest, graph, analyze, train, evaluate, error-analysis.
``train``/``evaluate``/``error-analysis`` are driven by a JSON config file;
command-line flags override config keys, which override built-in defaults.
Exit codes: 0 success, 1 internal error, 2 user/config error.
"""

from __future__ import annotations

import argparse
import csv as csv_mod
import json
import sys
from dataclasses import replace
from datetime import date
from pathlib import Path

from . import corpus as corpus_mod
from . import experiment as exp
from .errors import BugrankError, UserDataError
from .features import FIELD_SPECS
from .graph import build_bipartite, centrality_heat_correlation, load_edge_list, project, save_edge_list
from .models import MODEL_KINDS, ModelConfig, TrainedModel, predict
from .numerics import load_checkpoint


class ConfigError(UserDataError):
    pass


def _load_config(path: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}")
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return raw


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config missing key {key!r}")
    return cfg[key]


def _parse_split(obj: dict) -> exp.SplitSpec:
    try:
        return exp.SplitSpec(
            train_window=(
                corpus_mod.parse_timestamp(obj["train_window"][0]),
                corpus_mod.parse_timestamp(obj["train_window"][1]),
            ),
            train_comment_end=corpus_mod.parse_timestamp(obj["train_comment_end"]),
            test_window=(
                corpus_mod.parse_timestamp(obj["test_window"][0]),
                corpus_mod.parse_timestamp(obj["test_window"][1]),
            ),
            test_comment_end=corpus_mod.parse_timestamp(obj["test_comment_end"]),
            train_heat_crawl=date.fromisoformat(obj["train_heat_crawl"]),
            test_heat_crawl=date.fromisoformat(obj["test_heat_crawl"]),
            seed=int(obj.get("seed", 0)),
        )
    except (KeyError, IndexError, TypeError, ValueError) as err:
        raise ConfigError(f"bad split spec: {err}")


def _parse_source(obj: dict | None) -> exp.FeatureSource:
    obj = obj or {}
    kind = obj.get("kind", "hashed")
    if kind == "files":
        source = exp.FeatureSource(
            kind="files",
            desc_path=obj.get("description"),
            comm_path=obj.get("comments"),
        )
        for path in (source.desc_path, source.comm_path):
            if not Path(path).exists():
                raise ConfigError(f"embeddings file not found: {path}")
        return source
    try:
        return exp.FeatureSource(
            kind=kind,
            dim=int(obj.get("dim", 100)),
            hash_seed=int(obj.get("hash_seed", 0)),
        )
    except ValueError as err:
        raise ConfigError(str(err))


def _run_settings(cfg: dict, args) -> dict:
    corpus_path = _require(cfg, "corpus")
    if not Path(corpus_path).exists():
        raise ConfigError(f"corpus file not found: {corpus_path}")
    out_dir = args.out or cfg.get("out_dir")
    if not out_dir:
        raise ConfigError("no output directory (config out_dir or --out)")
    models = [args.model] if args.model else cfg.get("models", list(MODEL_KINDS))
    fields = [args.fields] if args.fields else cfg.get("fields", ["both"])
    fractions = [args.fraction] if args.fraction else cfg.get("fractions", list(exp.FRACTIONS))
    for kind in models:
        if kind not in MODEL_KINDS and not kind.startswith("MLP"):
            raise ConfigError(f"unknown model {kind!r}")
    for fs in fields:
        if fs not in FIELD_SPECS:
            raise ConfigError(f"unknown field spec {fs!r}")
    return {
        "corpus": corpus_mod.load_corpus(corpus_path),
        "out_dir": out_dir,
        "split": _parse_split(_require(cfg, "split")),
        "source": _parse_source(cfg.get("features")),
        "models": models,
        "fields": fields,
        "fractions": [float(f) for f in fractions],
        "seed": args.seed if args.seed is not None else int(cfg.get("seed", 0)),
        "jobs": args.jobs if args.jobs is not None else int(cfg.get("jobs", 1)),
        "overrides": cfg.get("overrides", {}),
    }


def cmd_ingest(args) -> int:
    corpus = corpus_mod.load_corpus(args.corpus)
    stats = corpus_mod.corpus_stats(corpus)
    for key, value in stats.items():
        print(f"{key}: {value:.3f}" if isinstance(value, float) else f"{key}: {value}")
    if args.validate_heat:
        mismatches = corpus_mod.heat_mismatches(corpus)
        print(f"heat_mismatches: {len(mismatches)}")
        for bug_id, recomputed, snapshots in mismatches:
            print(f"  bug {bug_id}: recomputed {recomputed}, snapshots {snapshots}")
    return 0


def cmd_graph(args) -> int:
    corpus = corpus_mod.load_corpus(args.corpus)
    cutoff = corpus_mod.parse_timestamp(args.cutoff)
    g = project(build_bipartite(corpus, cutoff))
    save_edge_list(g, args.out)
    print(f"nodes: {g.n}")
    print(f"edges: {len(g.adjacency)}")
    print(f"edge_list: {args.out}")
    return 0


def cmd_analyze(args) -> int:
    g = load_edge_list(args.graph)
    heat_map = json.loads(Path(args.heat).read_text(encoding="utf-8"))
    try:
        heat = [heat_map[str(bid)] for bid in g.node_ids]
    except KeyError as err:
        raise ConfigError(f"heat file missing bug id {err}")
    report = centrality_heat_correlation(g, heat, args.k)
    blob = json.dumps(report, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(blob + "\n", encoding="utf-8")
    print(blob)
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    st = _run_settings(cfg, args)
    results = exp.fraction_sweep(
        st["corpus"], st["split"], models=st["models"], fractions=st["fractions"],
        field_specs=st["fields"], source=st["source"], overrides=st["overrides"],
        seed=st["seed"], jobs=st["jobs"], out_dir=st["out_dir"],
    )
    for r in sorted(results, key=lambda r: (r.field_spec, r.model_kind, -r.fraction)):
        m = r.metrics
        mape = "-" if m.mape is None else f"{m.mape:.4f}"
        print(
            f"{r.model_kind} f={exp.fraction_key(r.fraction)} fields={r.field_spec} "
            f"mae={m.mae:.4f} mse={m.mse:.4f} mape={mape} "
            f"best_epoch={r.best_epoch} epochs={r.n_epochs}"
        )
    print(f"reports: {Path(st['out_dir']) / 'aggregate.csv'}")
    return 0


def _split_artifacts(st: dict):
    corpus, split = st["corpus"], st["split"]
    train0, val0, test_ids = exp.temporal_split(corpus, replace(split, train_fraction=st["fractions"][0]))
    node_ids = tuple(sorted(set(train0) | set(val0) | set(test_ids)))
    g = exp.split_graph(corpus, node_ids, split.test_window[1])
    return node_ids, g, set(test_ids)


def cmd_evaluate(args) -> int:
    cfg = _load_config(args.config)
    st = _run_settings(cfg, args)
    out_dir = Path(st["out_dir"])
    node_ids, g, test_set = _split_artifacts(st)
    results = []
    for field_spec in st["fields"]:
        feats = exp.build_split_features(
            st["corpus"], node_ids, test_set, field_spec, st["source"],
            st["split"].train_comment_end, st["split"].test_comment_end,
        )
        for kind in st["models"]:
            for fraction in st["fractions"]:
                name = f"{kind}_{exp.fraction_key(fraction)}_{field_spec}"
                ckpt = out_dir / f"{name}.ckpt"
                if not ckpt.exists():
                    raise ConfigError(f"missing checkpoint {ckpt} (run train first)")
                _, config_dict, params = load_checkpoint(ckpt)
                model = TrainedModel(ModelConfig.from_dict(config_dict), params, -1, [])
                tr, va, te = exp.temporal_split(
                    st["corpus"], replace(st["split"], train_fraction=fraction)
                )
                targets = exp.build_targets(st["corpus"], node_ids, tr, va, te, st["split"])
                metrics = exp.evaluate(model, g, feats, targets,
                                       fraction=fraction, field_spec=field_spec)
                results.append(exp.SweepCellResult(
                    model_kind=kind, fraction=fraction, field_spec=field_spec,
                    metrics=metrics, best_epoch=-1, n_epochs=0,
                ))
                mape = "-" if metrics.mape is None else f"{metrics.mape:.4f}"
                print(f"{kind} f={exp.fraction_key(fraction)} fields={field_spec} "
                      f"mae={metrics.mae:.4f} mse={metrics.mse:.4f} mape={mape}")
    exp.write_reports(results, out_dir)
    print(f"reports: {out_dir / 'aggregate.csv'}")
    return 0


def cmd_error_analysis(args) -> int:
    cfg = _load_config(args.config)
    st = _run_settings(cfg, args)
    ea_cfg = cfg.get("error_analysis", {})
    model_a = ea_cfg.get("model_a", "GAT")
    model_b = ea_cfg.get("model_b", "MLP")
    fraction = float(args.fraction or ea_cfg.get("fraction", 0.05))
    field_spec = args.fields or ea_cfg.get("fields", "both")
    for kind in (model_a, model_b):
        if kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model {kind!r}")
    out_dir = Path(st["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus, split = st["corpus"], st["split"]
    node_ids, g, test_set = _split_artifacts(st)
    feats = exp.build_split_features(
        corpus, node_ids, test_set, field_spec, st["source"],
        split.train_comment_end, split.test_comment_end,
    )
    tr, va, te = exp.temporal_split(corpus, replace(split, train_fraction=fraction))
    targets = exp.build_targets(corpus, node_ids, tr, va, te, split)
    preds = {}
    for kind in (model_a, model_b):
        settings = exp.resolve_cell_settings(kind, fraction, feats.dim, st["overrides"])
        config, hp = exp.make_cell_config(
            kind, settings, exp.cell_seed(st["seed"], kind, fraction, field_spec)
        )
        model = exp.run_training(config, g, feats, targets, hp)
        preds[kind] = predict(model, g, feats.rows)
    report = exp.error_analysis(preds[model_a], preds[model_b], targets, g,
                                label_a=model_a.lower(), label_b=model_b.lower())
    cases = report.pop("cases")
    summary_path = out_dir / f"error_analysis_{model_a}_vs_{model_b}.json"
    summary_path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n",
                            encoding="utf-8")
    cases_path = out_dir / f"error_cases_{model_a}_vs_{model_b}.csv"
    with cases_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv_mod.writer(fh)
        header = ["bug_id", "true", f"pred_{model_b.lower()}", f"pred_{model_a.lower()}",
                  f"delta_{model_b.lower()}", f"delta_{model_a.lower()}", "train_neighbors"]
        writer.writerow(header)
        for row in cases:
            writer.writerow([
                row["bug_id"], f"{row['true']:.3f}",
                f"{row[f'pred_{model_b.lower()}']:.3f}", f"{row[f'pred_{model_a.lower()}']:.3f}",
                f"{row[f'delta_{model_b.lower()}']:.3f}", f"{row[f'delta_{model_a.lower()}']:.3f}",
                row["train_neighbors"],
            ])
    print(json.dumps(report, sort_keys=True, indent=2))
    print(f"cases: {cases_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bugrank",
                                     description="Bug severity ranking pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load a corpus and print statistics")
    p.add_argument("corpus")
    p.add_argument("--validate-heat", action="store_true",
                   help="recompute heat from attrs and report mismatches")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("graph", help="build and export the bug-bug graph")
    p.add_argument("corpus")
    p.add_argument("--cutoff", required=True, help="RFC 3339 timestamp")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("analyze", help="centrality vs heat rank correlations")
    p.add_argument("graph", help="edge-list file written by the graph command")
    p.add_argument("--heat", required=True, help="JSON file: bug id -> heat")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    for name, func in (("train", cmd_train), ("evaluate", cmd_evaluate),
                       ("error-analysis", cmd_error_analysis)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--fraction", type=float)
        p.add_argument("--model", choices=MODEL_KINDS)
        p.add_argument("--fields", choices=FIELD_SPECS)
        p.add_argument("--jobs", type=int)
        p.add_argument("--out")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UserDataError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except BugrankError as err:
        print(f"internal error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
