"""Experiment driver: cost model, per-query metrics, paired strategy runs and
scalability sweeps.

Response time is costed along the critical path of a result's forwarding
tree: sequential segments add up, parallel branches contribute their maximum.
Precision and recall are computed against the exhaustive relevance oracle;
the engine evaluates the oracle through a per-network inverted element index,
which the test suite pins as equal to the plain exhaustive scan.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .baseline import (
    QueryLog,
    RoutingResult,
    generate_queries,
    run_baseline_epoch,
)
from .config import Config, derive_seed, substream
from .ksp import KspOverlay, form_groups, run_kb_epoch, train_indices
from .model import PeerId, Query
from .netgen import Network, build_son

BASELINE = "baseline"
KSP = "ksp"

# Canonical scalability ladder: peer counts from 300 to 5000 with the
# super-peer count growing from 10 to 54.
DEFAULT_SWEEP_SIZES = [
    (300, 10), (600, 12), (900, 14), (1200, 16), (1500, 20), (2000, 24),
    (2500, 28), (3000, 32), (3500, 36), (4000, 40), (4500, 46), (5000, 54),
]

METRICS_COLUMNS = ("strategy", "query_id", "response_time", "precision", "recall",
                   "sp_precision", "mapping_ops", "hops", "tree_visits")
SUMMARY_COLUMNS = ("strategy", "n_queries", "mean_response_time", "mean_precision",
                   "mean_recall", "mean_sp_precision", "total_mapping_ops",
                   "total_hops", "total_tree_visits")


@dataclass(frozen=True)
class CostModel:
    """Time units per overlay message, per capacity evaluation, and per tree
    node visited."""

    c_hop: float = 10.0
    c_map: float = 1.0
    c_tree: float = 0.1

    def __post_init__(self) -> None:
        for name in ("c_hop", "c_map", "c_tree"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @classmethod
    def from_config(cls, config: Config) -> "CostModel":
        return cls(c_hop=config.c_hop, c_map=config.c_map, c_tree=config.c_tree)


@dataclass(frozen=True, slots=True)
class QueryMetrics:
    query_id: str
    response_time: float
    precision: float
    recall: float
    sp_precision: float
    mapping_ops: int
    hops: int
    tree_visits: int
    precision_defined: bool = True
    recall_defined: bool = True


@dataclass(frozen=True)
class StrategySummary:
    strategy: str
    n_queries: int
    mean_response_time: float
    mean_precision: float
    mean_recall: float
    mean_sp_precision: float
    total_mapping_ops: int
    total_hops: int
    total_tree_visits: int


@dataclass
class ExperimentReport:
    config: Config
    per_query: dict[str, list[QueryMetrics]]
    summaries: dict[str, StrategySummary]


def response_time(result: RoutingResult, model: CostModel) -> float:
    """Critical-path cost of a routing result under the given cost model."""
    return _segment_cost(result.cost_tree, model)


def _segment_cost(segment, model: CostModel) -> float:
    own = (segment.hops * model.c_hop + segment.maps * model.c_map
           + segment.tree_visits * model.c_tree)
    return own + max((_segment_cost(b, model) for b in segment.branches), default=0.0)


def score(result: RoutingResult, oracle_set: set[PeerId]) -> tuple[float, float]:
    """(precision, recall) of the retrieved peers against the oracle set.

    Degenerate denominators score 1.0; callers that need to distinguish the
    degenerate cases check the sizes themselves (see QueryMetrics flags).
    """
    retrieved = result.answering_peers
    hits = len(retrieved & oracle_set)
    precision = hits / len(retrieved) if retrieved else 1.0
    recall = hits / len(oracle_set) if oracle_set else 1.0
    return precision, recall


def relevant_peers_indexed(net: Network, query: Query, eps_acc: float) -> set[PeerId]:
    """Oracle-equivalent relevance via the network's inverted element index.

    Per-peer hit counts are compared exactly as capacity() compares, so the
    result matches oracle_relevant_peers on every input.
    """
    comps = query.components
    if not comps:
        raise ValueError("empty query")
    if eps_acc <= 0.0:
        return set(net.peers)
    counts: dict[int, int] = {}
    for comp in comps:
        for pid in net.element_index.get(comp, ()):
            counts[pid] = counts.get(pid, 0) + 1
    n = len(comps)
    return {pid for pid, hits in counts.items() if hits / n >= eps_acc}


def query_metrics(query: Query, result: RoutingResult, oracle_set: set[PeerId],
                  model: CostModel) -> QueryMetrics:
    precision, recall = score(result, oracle_set)
    return QueryMetrics(
        query_id=query.id,
        response_time=response_time(result, model),
        precision=precision,
        recall=recall,
        sp_precision=len(result.answering_sps) / len(result.searched_sps),
        mapping_ops=result.mapping_ops,
        hops=result.hops,
        tree_visits=result.tree_visits,
        precision_defined=bool(result.answering_peers),
        recall_defined=bool(oracle_set),
    )


def summarize(strategy: str, rows: list[QueryMetrics]) -> StrategySummary:
    n = len(rows)
    return StrategySummary(
        strategy=strategy,
        n_queries=n,
        mean_response_time=sum(r.response_time for r in rows) / n,
        mean_precision=sum(r.precision for r in rows) / n,
        mean_recall=sum(r.recall for r in rows) / n,
        mean_sp_precision=sum(r.sp_precision for r in rows) / n,
        total_mapping_ops=sum(r.mapping_ops for r in rows),
        total_hops=sum(r.hops for r in rows),
        total_tree_visits=sum(r.tree_visits for r in rows),
    )


def make_workload(net: Network, config: Config, stream_name: str,
                  id_prefix: str) -> list[Query]:
    """One batch of queries per peer, in peer-id order, from a named stream."""
    rng = substream(config.seed, stream_name)
    workload: list[Query] = []
    for pid in sorted(net.peers):
        workload.extend(generate_queries(
            net.peers[pid], config.queries_per_peer, config.n_components, rng,
            id_prefix=f"{id_prefix}{pid}-",
        ))
    return workload


def _reprefix(queries: list[Query], id_prefix: str) -> list[Query]:
    return [dataclasses.replace(q, id=f"{id_prefix}{i}") for i, q in enumerate(queries)]


def hops_limit(config: Config) -> int | None:
    return None if config.max_hops < 0 else config.max_hops


@dataclass
class PipelineArtifacts:
    """Everything one experiment produced, for reporting and file dumps."""

    config: Config
    net: Network
    train_log: QueryLog
    overlay: KspOverlay | None
    eval_workload: list[Query]
    baseline_results: list[RoutingResult]
    kb_results: list[RoutingResult] | None
    kb_log: QueryLog | None
    report: ExperimentReport


def run_pipeline(config: Config, include_kb: bool = True,
                 train_log: QueryLog | None = None,
                 per_query: bool = True) -> PipelineArtifacts:
    """Build the network, produce the training log, train the knowledge layer,
    then route one evaluation workload through both strategies.

    The evaluation workload is drawn fresh by default; in replay mode it
    repeats the training queries (under new query ids). When an external
    train_log is supplied the training epoch is skipped and replay mode
    reconstructs the evaluation queries from the log records.
    """
    config.validate()
    net = build_son(config)
    model = CostModel.from_config(config)

    train_workload: list[Query] | None = None
    if train_log is None:
        train_workload = make_workload(net, config, "workload-baseline", "t")
        train_log, _ = run_baseline_epoch(net, train_workload, config.eps_acc,
                                          hops_limit(config))

    if config.workload_mode == "replay":
        if train_workload is not None:
            eval_workload = _reprefix(train_workload, "e")
        else:
            if len(train_log) == 0:
                raise ValueError("replay mode needs a non-empty training log")
            eval_workload = _reprefix(
                [Query(id=r.query_id, origin_peer=r.origin_peer, components=r.components)
                 for r in train_log],
                "e",
            )
    else:
        eval_workload = make_workload(net, config, "workload-kb", "e")

    _, baseline_results = run_baseline_epoch(net, eval_workload, config.eps_acc,
                                             hops_limit(config))

    overlay = None
    kb_results = None
    kb_log = None
    if include_kb:
        overlay = form_groups(net, config.tau_trust)
        overlay = train_indices(overlay, train_log, config.min_leaf)
        kb_log, kb_results, overlay = run_kb_epoch(
            net, overlay, eval_workload, train_log, config.eps_acc,
            refresh_every=config.refresh_every, min_leaf=config.min_leaf,
        )

    oracles = {q.id: relevant_peers_indexed(net, q, config.eps_acc)
               for q in eval_workload}
    rows: dict[str, list[QueryMetrics]] = {}
    rows[BASELINE] = [query_metrics(q, r, oracles[q.id], model)
                      for q, r in zip(eval_workload, baseline_results)]
    if kb_results is not None:
        rows[KSP] = [query_metrics(q, r, oracles[q.id], model)
                     for q, r in zip(eval_workload, kb_results)]
    summaries = {name: summarize(name, rs) for name, rs in rows.items()}
    if not per_query:
        rows = {name: [] for name in rows}
    report = ExperimentReport(config=config.replace(), per_query=rows,
                              summaries=summaries)
    return PipelineArtifacts(
        config=config, net=net, train_log=train_log, overlay=overlay,
        eval_workload=eval_workload, baseline_results=baseline_results,
        kb_results=kb_results, kb_log=kb_log, report=report,
    )


def run_experiment(config: Config) -> ExperimentReport:
    """Full comparative run of both strategies; deterministic under the seed."""
    return run_pipeline(config).report


def sweep(base_config: Config, sizes: list[tuple[int, int]],
          per_query: bool = True) -> list[ExperimentReport]:
    """One run_experiment per (np, nsp) size with a derived per-point seed."""
    if not sizes:
        raise ValueError("sizes list is empty")
    reports = []
    for index, (n_peers, n_sps) in enumerate(sizes):
        point = base_config.replace(np=n_peers, nsp=n_sps,
                                    seed=derive_seed(base_config.seed, index))
        reports.append(run_pipeline(point, per_query=per_query).report)
    return reports


def format_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def metrics_rows(report: ExperimentReport) -> list[tuple]:
    rows = []
    for strategy in sorted(report.per_query):
        for m in report.per_query[strategy]:
            rows.append((strategy, m.query_id, m.response_time, m.precision,
                         m.recall, m.sp_precision, m.mapping_ops, m.hops,
                         m.tree_visits))
    return rows


def write_metrics_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(METRICS_COLUMNS) + "\n")
        for row in metrics_rows(report):
            fh.write(",".join(format_value(v) for v in row) + "\n")


def summary_row(summary: StrategySummary) -> tuple:
    return (summary.strategy, summary.n_queries, summary.mean_response_time,
            summary.mean_precision, summary.mean_recall, summary.mean_sp_precision,
            summary.total_mapping_ops, summary.total_hops, summary.total_tree_visits)


def write_summary_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for strategy in sorted(report.summaries):
            row = summary_row(report.summaries[strategy])
            fh.write(",".join(format_value(v) for v in row) + "\n")


def write_sweep_csv(reports: list[ExperimentReport], path) -> None:
    columns = ("np", "nsp", "seed") + SUMMARY_COLUMNS
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for report in reports:
            for strategy in sorted(report.summaries):
                row = (report.config.np, report.config.nsp, report.config.seed)
                row += summary_row(report.summaries[strategy])
                fh.write(",".join(format_value(v) for v in row) + "\n")
