"""Command line entry point.

Subcommands cover the pipeline stages (build-supra, embed, refine), the
evaluation protocols (eval nc|lp|cd), and an end-to-end `pipeline` run.
Exit codes: 0 success, 1 validation/usage, 2 I/O, 3 numeric failure.
Set SUPRAWALK_LOG=debug|info|warning to control logging.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluate
from .config import RunConfig, load_config, save_config
from .errors import NumericError, ValidationError
from .graph import load_labels, load_multilayer, save_multilayer
from .modularity import save_partition
from .refine import refine
from .sgns import load_embeddings, save_embeddings, train
from .supra import build_supra, save_supra
from .walks import generate_walks, save_corpus

log = logging.getLogger("suprawalk")

_OVERRIDES = (
    ("seed", int),
    ("theta", float),
    ("dim", int),
    ("window", int),
    ("negatives", int),
    ("epochs", int),
    ("walks_per_node", int),
    ("walk_length", int),
    ("batch_size", int),
    ("workers", int),
    ("num_communities", int),
    ("gamma", float),
    ("sigma", float),
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="run configuration file (key = value lines)")
    for name, kind in _OVERRIDES:
        parser.add_argument(f"--{name.replace('_', '-')}", type=kind, default=None)
    parser.add_argument(
        "--deterministic",
        action="store_true",
        help="force workers=1 so reruns are bit-identical",
    )


def _config_from(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for name, _ in _OVERRIDES:
        value = getattr(args, name, None)
        if value is not None:
            cfg = dataclasses.replace(cfg, **{name: value})
    if getattr(args, "deterministic", False):
        cfg = dataclasses.replace(cfg, workers=1)
    cfg.validate()
    return cfg


def _embed(net, cfg: RunConfig, save_walks: str | None = None, save_supra_path: str | None = None):
    supra = build_supra(net, cfg.theta)
    if save_supra_path:
        save_supra(supra, save_supra_path)
    corpus = generate_walks(supra, cfg.walk_config())
    if save_walks:
        save_corpus(corpus, supra, save_walks)
    table = train(supra, corpus, cfg.sgns_config())
    return supra, table


def _cmd_build_supra(args) -> int:
    cfg = _config_from(args)
    net = load_multilayer(args.edges)
    supra = build_supra(net, cfg.theta)
    save_supra(supra, args.output)
    counts = supra.inter_edge_counts()
    print(f"replicas={net.num_replicas} inter_edges={len(supra.inter_edges)}")
    for (la, lb), count in sorted(counts.items()):
        print(f"layers {la}-{lb}: {count} couplings")
    return 0


def _cmd_embed(args) -> int:
    cfg = _config_from(args)
    net = load_multilayer(args.edges)
    supra, table = _embed(net, cfg, args.save_walks, args.save_supra)
    save_embeddings(table, net, args.output)
    print(f"embedded {net.num_replicas} replicas at dim={cfg.dim} -> {args.output}")
    return 0


def _cmd_refine(args) -> int:
    cfg = _config_from(args)
    net = load_multilayer(args.edges)
    vectors = load_embeddings(args.embeddings, net)
    supra = build_supra(net, cfg.theta)
    result = refine(vectors, net, supra, cfg.refine_config())
    save_embeddings_array(result.embeddings, net, args.output)
    if args.partition:
        save_partition(result.assignment, net, args.partition)
    print(
        f"refined in {result.outer_iters} iterations: "
        f"Q_multi {result.q_multi_initial:.6f} -> {result.q_multi_final:.6f}"
    )
    if args.truth:
        labels = load_labels(args.truth, net)
        truth = np.asarray(
            [labels.labels[int(net.replica_node[i])] for i in range(net.num_replicas)]
        )
        print(f"NMI vs truth: {evaluate.nmi(result.assignment, truth):.6f}")
    return 0


def save_embeddings_array(vectors: np.ndarray, net, path) -> None:
    """Write a raw replica-vector matrix in the embedding file format."""
    from .sgns import EmbeddingTable

    table = EmbeddingTable(
        input_vectors=np.asarray(vectors, dtype=np.float64),
        output_vectors=np.zeros_like(vectors),
    )
    save_embeddings(table, net, path)


def _cmd_eval_nc(args) -> int:
    cfg = _config_from(args)
    net = load_multilayer(args.edges)
    vectors = load_embeddings(args.embeddings, net)
    labels = load_labels(args.labels, net)
    aggregated = evaluate.aggregate_node_vectors(vectors, net)
    accs, mean = evaluate.node_classification_eval(aggregated, labels, cfg.nc_folds, cfg.seed)
    rows = [("nc_accuracy", args.edges, f"fold{f}", f"{a:.4f}") for f, a in enumerate(accs)]
    rows.append(("nc_accuracy", args.edges, "mean", f"{mean:.4f}"))
    _emit(rows, args.csv)
    return 0


def _cmd_eval_lp(args) -> int:
    cfg = _config_from(args)
    net = load_multilayer(args.edges)
    result = evaluate.link_prediction_eval(
        net, cfg.lp_folds, cfg.theta, cfg.walk_config(), cfg.sgns_config(), cfg.seed
    )
    rows = []
    for layer, scores in sorted(result.per_layer_fold.items()):
        token = net.layer_tokens[layer]
        for f, score in enumerate(scores):
            rows.append(("lp_auroc", args.edges, f"layer{token}_fold{f}", f"{score:.4f}"))
        rows.append(("lp_auroc", args.edges, f"layer{token}_mean", f"{result.per_layer_mean[layer]:.4f}"))
    rows.append(("lp_auroc", args.edges, "mean", f"{result.mean:.4f}"))
    _emit(rows, args.csv)
    return 0


def _cmd_eval_cd(args) -> int:
    cfg = _config_from(args)
    net = load_multilayer(args.edges)
    vectors = load_embeddings(args.embeddings, net)
    k_list = cfg.cd_k_list
    if args.k_list:
        k_list = tuple(int(part) for part in args.k_list.split(","))
    rows = [
        ("cd_q_multi", args.edges, f"K={k}", f"{q:.6f}")
        for k, q in evaluate.community_detection_eval(
            vectors, net, k_list, cfg.modularity_params(), cfg.seed
        )
    ]
    _emit(rows, args.csv)
    return 0


def _cmd_pipeline(args) -> int:
    cfg = _config_from(args)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    net = load_multilayer(args.edges)
    save_multilayer(net, outdir / "edges.txt")
    save_config(cfg, outdir / "run.cfg")
    supra, table = _embed(net, cfg, str(outdir / "walks.txt"), str(outdir / "supra.txt"))
    save_embeddings(table, net, outdir / "embeddings.txt")
    result = refine(table.input_vectors, net, supra, cfg.refine_config())
    save_embeddings_array(result.embeddings, net, outdir / "refined.txt")
    save_partition(result.assignment, net, outdir / "partition.txt")
    rows = [
        ("q_multi", args.edges, "initial", f"{result.q_multi_initial:.6f}"),
        ("q_multi", args.edges, "final", f"{result.q_multi_final:.6f}"),
    ]
    if args.labels:
        labels = load_labels(args.labels, net)
        aggregated = evaluate.aggregate_node_vectors(result.embeddings, net)
        accs, mean = evaluate.node_classification_eval(aggregated, labels, cfg.nc_folds, cfg.seed)
        rows += [("nc_accuracy", args.edges, f"fold{f}", f"{a:.4f}") for f, a in enumerate(accs)]
        rows.append(("nc_accuracy", args.edges, "mean", f"{mean:.4f}"))
    evaluate.write_results_csv(rows, outdir / "results.csv")
    print(evaluate.format_summary(rows))
    print(f"artifacts written to {outdir}")
    return 0


def _emit(rows, csv_path) -> None:
    print(evaluate.format_summary(rows))
    if csv_path:
        evaluate.write_results_csv(rows, csv_path)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="suprawalk",
        description="Multilayer network embeddings over a coupled supra graph",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-supra", help="construct inter-layer couplings")
    p.add_argument("edges")
    p.add_argument("-o", "--output", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_build_supra)

    p = sub.add_parser("embed", help="random walks + skip-gram embeddings")
    p.add_argument("edges")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--save-walks")
    p.add_argument("--save-supra")
    _add_common(p)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("refine", help="cluster-aware embedding refinement")
    p.add_argument("edges")
    p.add_argument("embeddings")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--partition", help="write the final community assignment here")
    p.add_argument("--truth", help="label file; prints NMI of the final partition")
    _add_common(p)
    p.set_defaults(func=_cmd_refine)

    ev = sub.add_parser("eval", help="evaluation protocols")
    evsub = ev.add_subparsers(dest="protocol", required=True)

    p = evsub.add_parser("nc", help="node classification accuracy")
    p.add_argument("edges")
    p.add_argument("embeddings")
    p.add_argument("labels")
    p.add_argument("--csv")
    _add_common(p)
    p.set_defaults(func=_cmd_eval_nc)

    p = evsub.add_parser("lp", help="link prediction AUROC")
    p.add_argument("edges")
    p.add_argument("--csv")
    _add_common(p)
    p.set_defaults(func=_cmd_eval_lp)

    p = evsub.add_parser("cd", help="community detection modularity sweep")
    p.add_argument("edges")
    p.add_argument("embeddings")
    p.add_argument("--k-list", help="comma separated community counts")
    p.add_argument("--csv")
    _add_common(p)
    p.set_defaults(func=_cmd_eval_cd)

    p = sub.add_parser("pipeline", help="embed + refine + report in one run")
    p.add_argument("edges")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--labels")
    _add_common(p)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("SUPRAWALK_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    stage = args.command if args.command != "eval" else f"eval {args.protocol}"
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error [{stage}]: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error [{stage}]: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
