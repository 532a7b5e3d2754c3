"""Command-line entry point.

Subcommands cover the pipeline stages: `generate` builds and dumps a network,
`run` executes the comparative experiment, `sweep` scales it over sizes,
`train-index` turns a saved query log into an ARFF dataset and a rendered
tree, and `render-tree` prints the tree induced from an ARFF file.

Configuration comes from an optional key-value file plus command-line
overrides (overrides win). The SONSIM_OUTDIR environment variable overrides
the output directory only.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from .baseline import read_query_log, write_query_log
from .config import Config, ConfigError, read_config, write_config
from .dtree import arff_export, arff_import, build_tree, render_tree, training_accuracy
from .engine import (
    BASELINE,
    KSP,
    run_pipeline,
    sweep,
    write_metrics_csv,
    write_summary_csv,
    write_sweep_csv,
)
from .ksp import instances_from_records, record_accuracy
from .netgen import build_son, serialize_network

OUTDIR_ENV = "SONSIM_OUTDIR"


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="key-value configuration file")
    for f in dataclasses.fields(Config):
        flag = "--" + f.name.replace("_", "-")
        kind = {"int": int, "float": float}.get(f.type, str)
        parser.add_argument(flag, type=kind, default=None, dest=f.name,
                            help=f"override {f.name} (default {f.default})")


def _build_config(args: argparse.Namespace) -> Config:
    config = read_config(args.config) if args.config else Config()
    overrides = {
        f.name: getattr(args, f.name)
        for f in dataclasses.fields(Config)
        if getattr(args, f.name, None) is not None
    }
    config = config.replace(**overrides)
    config.validate()
    return config


def _outdir(args: argparse.Namespace) -> Path:
    outdir = os.environ.get(OUTDIR_ENV) or args.outdir
    path = Path(outdir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def cmd_generate(args: argparse.Namespace) -> int:
    config = _build_config(args)
    net = build_son(config)
    outdir = _outdir(args)
    _write(outdir / "network.txt", serialize_network(net))
    print(f"network: {config.np} peers, {config.nsp} super-peers -> {outdir / 'network.txt'}")
    for spid in sorted(net.super_peers):
        sp = net.super_peers[spid]
        print(f"  sp {spid} domain={sp.domain} members={len(sp.members)} "
              f"friends={len(sp.friends)} expertise={len(sp.expertise)}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = _build_config(args)
    include_kb = args.strategy in (KSP, "both")

    train_log = None
    if args.train_log:
        log_path = Path(args.train_log)
        if not log_path.exists():
            raise ValueError(f"train log not found: {log_path}")
        train_log = read_query_log(log_path)
        if args.strategy in (KSP, "both") and config.workload_mode == "replay" and len(train_log) == 0:
            raise ValueError("ksp strategy in replay mode needs a non-empty prior log")

    artifacts = run_pipeline(config, include_kb=include_kb, train_log=train_log)
    outdir = _outdir(args)

    write_config(config, outdir / "config.txt")
    _write(outdir / "network.txt", serialize_network(artifacts.net))
    write_query_log(artifacts.train_log, outdir / "train_log.tsv")

    report = artifacts.report
    if args.strategy != "both":
        keep = args.strategy
        report = dataclasses.replace(
            report,
            per_query={keep: report.per_query[keep]},
            summaries={keep: report.summaries[keep]},
        )
    write_metrics_csv(report, outdir / "metrics.csv")
    write_summary_csv(report, outdir / "summary.csv")

    if include_kb:
        write_query_log(artifacts.kb_log, outdir / "ksp_log.tsv")
        for gid in sorted(artifacts.overlay.groups):
            group = artifacts.overlay.groups[gid]
            instances = instances_from_records(group.log_slice)
            _write(outdir / f"group{gid}.arff",
                   arff_export(instances, f"group{gid}", config.n_components))
            _write(outdir / f"group{gid}.tree.txt", render_tree(group.index) + "\n")

    for strategy in sorted(report.summaries):
        s = report.summaries[strategy]
        print(f"{strategy}: {s.n_queries} queries, mean response time "
              f"{s.mean_response_time:.3f}, precision {s.mean_precision:.4f}, "
              f"recall {s.mean_recall:.4f}, sp-precision {s.mean_sp_precision:.4f}")
    print(f"artifacts in {outdir}")
    return 0


def _parse_sizes(text: str) -> list[tuple[int, int]]:
    sizes = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 2:
            raise ValueError(f"size {chunk!r} is not of form NP:NSP")
        sizes.append((int(parts[0]), int(parts[1])))
    if not sizes:
        raise ValueError("no sizes given")
    if len(set(sizes)) != len(sizes):
        raise ValueError("duplicate sizes in sweep")
    return sizes


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _build_config(args)
    sizes = _parse_sizes(args.sizes)
    reports = sweep(config, sizes, per_query=False)
    outdir = _outdir(args)
    write_sweep_csv(reports, outdir / "sweep_summary.csv")
    print(f"{len(reports)} runs -> {outdir / 'sweep_summary.csv'}")
    return 0


def cmd_train_index(args: argparse.Namespace) -> int:
    log_path = Path(args.log)
    if not log_path.exists():
        raise ValueError(f"log not found: {log_path}")
    log = read_query_log(log_path)
    instances = instances_from_records(log)
    if not instances:
        raise ValueError("log contains no answered queries to learn from")
    tree = build_tree(instances, min_leaf=args.min_leaf)
    outdir = _outdir(args)
    _write(outdir / "dataset.arff", arff_export(instances, args.relation))
    _write(outdir / "index.tree.txt", render_tree(tree) + "\n")
    print(f"{len(instances)} instances from {len(log)} records -> {outdir / 'dataset.arff'}")
    print(f"training accuracy (records): {record_accuracy(tree, log):.4f}")
    print(f"training accuracy (instances): {training_accuracy(tree, instances):.4f}")
    if 0.0 < args.holdout < 1.0:
        records = log.records
        split = int(len(records) * (1.0 - args.holdout))
        if 0 < split < len(records):
            held_tree = build_tree(instances_from_records(records[:split]),
                                   min_leaf=args.min_leaf)
            held_acc = record_accuracy(held_tree, records[split:])
            print(f"held-out accuracy ({args.holdout:.0%} tail, records): {held_acc:.4f}")
    return 0


def cmd_render_tree(args: argparse.Namespace) -> int:
    arff_path = Path(args.arff)
    if not arff_path.exists():
        raise ValueError(f"ARFF file not found: {arff_path}")
    instances = arff_import(arff_path.read_text(encoding="utf-8"))
    if not instances:
        raise ValueError("ARFF file contains no data rows")
    tree = build_tree(instances, min_leaf=args.min_leaf)
    print(render_tree(tree))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sonsim",
        description="Super-peer semantic overlay network simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_generate = sub.add_parser("generate", help="build and serialize a network")
    _add_config_flags(p_generate)
    p_generate.add_argument("--outdir", default="out", help="output directory")
    p_generate.set_defaults(func=cmd_generate)

    p_run = sub.add_parser("run", help="run the comparative experiment")
    _add_config_flags(p_run)
    p_run.add_argument("--strategy", choices=(BASELINE, KSP, "both"), default="both")
    p_run.add_argument("--train-log", metavar="FILE",
                       help="reuse a previously written query log for training")
    p_run.add_argument("--outdir", default="out", help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the experiment over several sizes")
    _add_config_flags(p_sweep)
    p_sweep.add_argument("--sizes", required=True,
                         help="comma list of NP:NSP pairs, e.g. 300:10,600:12")
    p_sweep.add_argument("--outdir", default="out", help="output directory")
    p_sweep.set_defaults(func=cmd_sweep)

    p_train = sub.add_parser("train-index", help="induce a tree from a query log")
    p_train.add_argument("--log", required=True, help="query log (TSV) to learn from")
    p_train.add_argument("--min-leaf", type=int, default=2)
    p_train.add_argument("--holdout", type=float, default=0.2,
                         help="fraction of trailing records held out for accuracy reporting")
    p_train.add_argument("--relation", default="querylog", help="ARFF relation name")
    p_train.add_argument("--outdir", default="out", help="output directory")
    p_train.set_defaults(func=cmd_train_index)

    p_render = sub.add_parser("render-tree", help="print the tree induced from an ARFF file")
    p_render.add_argument("--arff", required=True)
    p_render.add_argument("--min-leaf", type=int, default=2)
    p_render.set_defaults(func=cmd_render_tree)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"sonsim: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"sonsim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
