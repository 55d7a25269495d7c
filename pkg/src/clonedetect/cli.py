"""Command-line entry point: ``clonedetect <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import report as figures
from .account_views import load_post_embeddings
from .candidate_graph import GraphConfig, build_candidate_graph, candidate_pairs, write_edge_list
from .dataset import DatasetError, ingest, write_dataset
from .pair_features import DescriptionIndex, extract_pair_features, write_feature_dump
from .pipeline import (
    ABLATIONS,
    BundleError,
    PipelineConfig,
    PipelineError,
    Prediction,
    evaluate,
    evaluate_holdout,
    fit,
    fit_tfidf,
    load_bundle,
    predict_pipeline,
    prepare,
    save_bundle,
)
from .synthetic import generate_synthetic
from .wgcca import DEFAULT_WEIGHTS, write_embeddings

log = logging.getLogger("clonedetect")


def _weights(text: str) -> tuple:
    try:
        values = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad weight list {text!r}") from None
    if len(values) != 4:
        raise argparse.ArgumentTypeError("expected 4 comma-separated weights (post, follower, friend, profile)")
    return values


def _add_data_args(p, labels=False):
    p.add_argument("data", nargs="?", help="dataset directory (accounts.jsonl, edges.tsv, labels.tsv, manifest.json)")
    p.add_argument("--accounts", help="accounts file (overrides DATA/accounts.jsonl)")
    p.add_argument("--edges", help="edges file (overrides DATA/edges.tsv)")
    if labels:
        p.add_argument("--labels", help="labels file (overrides DATA/labels.tsv)")
    p.add_argument("--manifest", help="manifest file (overrides DATA/manifest.json)")


def _load(args, labels=False):
    def pick(explicit, name):
        if explicit:
            return explicit
        if not args.data:
            raise SystemExit(f"error: give a dataset directory or --{name}")
        path = os.path.join(args.data, {"accounts": "accounts.jsonl", "edges": "edges.tsv",
                                        "labels": "labels.tsv", "manifest": "manifest.json"}[name])
        return path if os.path.exists(path) or name == "accounts" else None

    return ingest(
        pick(args.accounts, "accounts"),
        pick(args.edges, "edges"),
        pick(getattr(args, "labels", None), "labels") if labels else None,
        pick(args.manifest, "manifest"),
    )


def _post_vectors(args):
    if getattr(args, "embeddings_file", None):
        vectors, _ = load_post_embeddings(args.embeddings_file)
        return vectors
    return None


def _print_report(rep, title):
    print(f"{title}: {rep.format()}")


def cmd_generate(args):
    ds = generate_synthetic(args.n_legit, args.pairs, args.noise, args.seed)
    paths = write_dataset(ds, args.out)
    print(f"wrote {len(ds.accounts)} accounts, {len(ds.edges)} edges, {len(ds.labels)} labels to {args.out}")
    return paths


def cmd_build_graph(args):
    ds = _load(args, labels=True)
    graph = build_candidate_graph(ds.accounts, GraphConfig(args.delta))
    pairs = candidate_pairs(graph)
    out = args.out or "candidate_edges.tsv"
    write_edge_list(graph, out)
    truth = ds.label_pairs()
    recovered = len(truth & graph.edges)
    print(f"{len(pairs)} candidate pairs at delta {args.delta:.4f} -> {out}")
    if truth:
        print(f"labeled pairs recovered: {recovered}/{len(truth)} ({recovered / len(truth):.4f})")
    if args.features:
        index = DescriptionIndex(fit_tfidf(ds))
        by_id = ds.by_id()
        rows = ((p, extract_pair_features(by_id[p[0]], by_id[p[1]], index, ds.reference_date)) for p in pairs)
        write_feature_dump(rows, args.features)
        print(f"pair features -> {args.features}")
    if args.figures and truth:
        sweep = []
        for d in sorted(set(args.sweep) | {args.delta}):
            g = graph if d == args.delta else build_candidate_graph(ds.accounts, GraphConfig(d))
            sweep.append((d, max(len(g.edges), 1), len(truth & g.edges) / len(truth)))
        path = figures.plot_delta_sweep(sweep, os.path.join(args.figures, "delta_sweep.png"))
        print(f"figure -> {path}")


def cmd_train(args):
    ds = _load(args, labels=True)
    config = PipelineConfig(
        delta=args.delta,
        wgcca_weights=args.wgcca_weights,
        latent_dim=args.latent_dim,
        folds=args.folds,
        ablation=args.ablation,
        cascade=args.cascade,
        seed=args.seed if args.seed is not None else ds.seed,
    )
    post_vectors = _post_vectors(args)
    prepared = prepare(ds, config, post_vectors)
    print(f"candidate pairs: {len(prepared.pairs)}  labeled recovered: "
          f"{prepared.recovered_pairs}/{prepared.labeled_pairs}  input dim: {prepared.X.shape[1]}")
    bundle = fit(prepared)
    save_bundle(bundle, args.bundle)
    hist = ", ".join(f"{v:.4f}" for v in bundle.cascade.validation_history)
    print(f"cascade levels: {bundle.cascade.stop_level}  validation accuracy: [{hist}]")
    print(f"bundle -> {args.bundle}")
    predictions = predict_pipeline(bundle, ds, post_vectors)
    rep = evaluate_holdout(bundle, ds, predictions)
    _print_report(rep, "held-out")
    if args.report:
        _write_json(args.report, {"split": "held-out", "config": config.to_dict(), **rep.to_dict()})
    if args.embeddings_out and bundle.embeddings is not None:
        ids = sorted(bundle.embeddings.rows)
        import numpy as np

        write_embeddings(ids, np.array([bundle.embeddings.rows[i] for i in ids]), args.embeddings_out)
    if args.figures:
        test = set(bundle.test_pairs)
        held = [p for p in predictions if p.pair in test]
        for path in (
            figures.plot_validation_history(bundle.cascade.validation_history,
                                            os.path.join(args.figures, "validation_history.png")),
            figures.plot_confusion(rep, os.path.join(args.figures, "holdout_confusion.png")),
            figures.plot_score_histogram(held, ds.label_pairs() & test, os.path.join(args.figures, "holdout_scores.png")),
        ):
            print(f"figure -> {path}")


def cmd_predict(args):
    ds = _load(args)
    bundle = load_bundle(args.bundle)
    preds = predict_pipeline(bundle, ds, _post_vectors(args))
    out = args.out or "predictions.tsv"
    write_predictions(preds, out)
    n_pos = sum(p.label for p in preds)
    print(f"{len(preds)} candidate pairs, {n_pos} predicted clone/victim -> {out}")


def cmd_evaluate(args):
    preds = read_predictions(args.predictions)
    truth = set()
    with open(args.labels, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 2:
                    raise DatasetError(f"{args.labels}:{lineno}: malformed label record")
                truth.add(tuple(parts))
    rep = evaluate(preds, truth)
    _print_report(rep, "evaluation")
    if args.out:
        _write_json(args.out, rep.to_dict())
    if args.figures:
        print(f"figure -> {figures.plot_confusion(rep, os.path.join(args.figures, 'confusion.png'))}")
        path = figures.plot_score_histogram(preds, truth, os.path.join(args.figures, "scores.png"))
        print(f"figure -> {path}")


def write_predictions(preds, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id_a\tid_b\tclone_probability\tlabel\n")
        for p in preds:
            fh.write(f"{p.pair[0]}\t{p.pair[1]}\t{p.clone_probability:.4f}\t{p.label}\n")


def read_predictions(path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("id_a\t"):
            raise DatasetError(f"{path}: missing predictions header")
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            try:
                a, b, prob, label = parts
                out.append(Prediction((a, b) if a <= b else (b, a), float(prob), int(label)))
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: malformed prediction record") from None
    return out


def _write_json(path, obj):
    rounded = {k: round(v, 4) if isinstance(v, float) else v for k, v in obj.items()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rounded, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"report -> {path}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clonedetect", description="Detect cloned accounts among look-alike profiles.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a seeded synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n-legit", type=int, default=1000)
    p.add_argument("--pairs", type=int, default=200)
    p.add_argument("--noise", type=int, default=2000)
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("build-graph", help="candidate pairs with look-alike names")
    _add_data_args(p, labels=True)
    p.add_argument("--delta", type=float, default=0.8)
    p.add_argument("--out", help="edge list output (default candidate_edges.tsv)")
    p.add_argument("--features", help="also dump the 10 pair features here")
    p.add_argument("--figures", help="directory for the threshold-sweep figure")
    p.add_argument("--sweep", type=float, nargs="+", default=[0.6, 0.7, 0.8, 0.9])
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("train", help="train a model bundle and report held-out metrics")
    _add_data_args(p, labels=True)
    p.add_argument("--bundle", required=True, help="output bundle path (.gz for compression)")
    p.add_argument("--delta", type=float, default=0.8)
    p.add_argument("--wgcca-weights", type=_weights, default=DEFAULT_WEIGHTS)
    p.add_argument("--latent-dim", type=int, default=64)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--ablation", choices=ABLATIONS, default="full")
    p.add_argument("--cascade", choices=("default", "rf", "ert", "lr"), default="default")
    p.add_argument("--seed", type=int, default=None, help="default: the dataset manifest seed")
    p.add_argument("--embeddings-file", help="precomputed per-account post vectors")
    p.add_argument("--embeddings-out", help="write the shared account embedding here")
    p.add_argument("--report", help="machine-readable held-out report (JSON)")
    p.add_argument("--figures", help="directory for figures")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score candidate pairs with a trained bundle")
    _add_data_args(p)
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", help="predictions output (default predictions.tsv)")
    p.add_argument("--embeddings-file", help="precomputed per-account post vectors")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="precision/recall/F1 of predictions against labels")
    p.add_argument("predictions")
    p.add_argument("labels")
    p.add_argument("--out", help="machine-readable report (JSON)")
    p.add_argument("--figures", help="directory for figures")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (DatasetError, PipelineError, BundleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
