"""Knowledge layer: trust-based domain groups, per-group decision-tree
indices trained from the query log, and index-driven routing.

Groups are the connected components of the super-peer graph thresholded by
trust, so a super-peer joins a group as soon as one member shares enough
expertise with it. Indices are trained with class labels spanning the whole
network, which is what lets a group name relevant super-peers outside itself.
Index-driven routing replaces all super-peer-level capacity evaluations with
one tree walk; only peer-level evaluations remain metered as mapping work.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .baseline import LogRecord, PathSegment, QueryLog, RoutingResult
from .dtree import (
    DecisionTree,
    Instance,
    Leaf,
    build_tree,
    class_counts,
    classify_traced,
    predict,
)
from .model import PeerId, Query, SuperPeerId, capacity
from .netgen import Network

KspId = int


@dataclass(frozen=True)
class KspGroup:
    id: KspId
    members: frozenset[SuperPeerId]
    index: DecisionTree | None = None
    log_slice: tuple[LogRecord, ...] = ()
    trained_at: int = 0


@dataclass(frozen=True)
class KspOverlay:
    """Partition of the super-peer set into domain groups."""

    groups: dict[KspId, KspGroup]
    sp_to_group: dict[SuperPeerId, KspId]


def form_groups(net: Network, tau_trust: int) -> KspOverlay:
    """Connected components of the trust graph at threshold tau_trust.

    Super-peers with no qualifying edge form singleton groups. Group ids are
    assigned in ascending order of each component's smallest member id.
    """
    if tau_trust < 1:
        raise ValueError("tau_trust must be >= 1")
    sp_ids = sorted(net.super_peers)
    adjacency: dict[int, list[int]] = {spid: [] for spid in sp_ids}
    for a, i in enumerate(sp_ids):
        for j in sp_ids[a + 1:]:
            if net.cormat.entry(i, j) >= tau_trust:
                adjacency[i].append(j)
                adjacency[j].append(i)

    components: list[frozenset[int]] = []
    unvisited = set(sp_ids)
    for start in sp_ids:
        if start not in unvisited:
            continue
        stack = [start]
        unvisited.discard(start)
        component = {start}
        while stack:
            current = stack.pop()
            for neighbor in adjacency[current]:
                if neighbor in unvisited:
                    unvisited.discard(neighbor)
                    component.add(neighbor)
                    stack.append(neighbor)
        components.append(frozenset(component))

    components.sort(key=min)
    groups = {gid: KspGroup(id=gid, members=members)
              for gid, members in enumerate(components)}
    sp_to_group = {spid: gid for gid, group in groups.items() for spid in sorted(group.members)}
    return KspOverlay(groups=groups, sp_to_group=sp_to_group)


def instances_from_records(records) -> list[Instance]:
    """Training rows from log records: one instance per (query, answering
    super-peer) pair, class labels in ascending order for determinism."""
    instances = []
    for record in records:
        attributes = tuple(c.render() for c in record.components)
        for spid in sorted(record.answering_sps):
            instances.append(Instance(attributes=attributes, class_label=spid))
    return instances


def record_accuracy(tree: DecisionTree, records) -> float:
    """Fraction of log records whose single-label prediction names one of the
    super-peers that actually answered.

    This is the accuracy the index needs in routing; it is not capped by the
    one-instance-per-answerer expansion the way instance-level accuracy is.
    """
    records = list(records)
    if not records:
        raise ValueError("no records")
    hits = 0
    for record in records:
        attributes = tuple(c.render() for c in record.components)
        if predict(tree, attributes) in record.answering_sps:
            hits += 1
    return hits / len(records)


def train_indices(overlay: KspOverlay, log: QueryLog, min_leaf: int = 2) -> KspOverlay:
    """Train every group's index on its slice of the log (records whose origin
    super-peer is a member). A group whose members never submitted queries
    keeps a degenerate leaf over the global class distribution."""
    if len(log) == 0:
        raise ValueError("query log is empty")
    global_counts = class_counts(instances_from_records(log))
    groups = {}
    for gid in sorted(overlay.groups):
        group = overlay.groups[gid]
        log_slice = tuple(r for r in log if r.origin_sp in group.members)
        instances = instances_from_records(log_slice)
        index = build_tree(instances, min_leaf=min_leaf) if instances else Leaf(dict(global_counts))
        groups[gid] = dataclasses.replace(
            group, index=index, log_slice=log_slice, trained_at=group.trained_at + 1
        )
    return KspOverlay(groups=groups, sp_to_group=dict(overlay.sp_to_group))


def route_kb(net: Network, overlay: KspOverlay, query: Query, sp: SuperPeerId,
             eps_acc: float) -> RoutingResult:
    """Index-driven routing.

    The origin community is searched locally while the query travels one hop
    to the group's knowledge node, whose tree names the candidate super-peers
    without any super-peer-level mapping. Same-group candidates are one hop
    away; foreign ones are relayed through their own group's knowledge node
    (two hops). Every candidate community is then searched locally.
    """
    if sp not in net.super_peers:
        raise ValueError(f"unknown super-peer {sp}")
    group = overlay.groups[overlay.sp_to_group[sp]]
    if group.index is None:
        raise ValueError("index not trained")

    def local_search(spid: int) -> tuple[list[PeerId], int]:
        table = net.members_index[spid]
        hits = [pid for pid, expertise in table if capacity(expertise, query) >= eps_acc]
        return hits, len(table)

    answering_peers: set[PeerId] = set()
    answering_sps: set[SuperPeerId] = set()

    origin_hits, origin_maps = local_search(sp)
    if origin_hits:
        answering_peers.update(origin_hits)
        answering_sps.add(sp)

    attributes = tuple(c.render() for c in query.components)
    distribution, tree_visits = classify_traced(group.index, attributes)
    candidates = {label for label, p in distribution.probabilities.items() if p > 0}
    targets = sorted(s for s in candidates if s != sp and s in net.super_peers)

    mapping_ops = origin_maps
    hops = 1  # origin super-peer -> its knowledge node
    target_segments = []
    for target in targets:
        arrival_hops = 1 if overlay.sp_to_group[target] == group.id else 2
        hits, maps = local_search(target)
        if hits:
            answering_peers.update(hits)
            answering_sps.add(target)
        mapping_ops += maps
        hops += arrival_hops
        target_segments.append(PathSegment(hops=arrival_hops, maps=maps))

    cost_tree = PathSegment(branches=(
        PathSegment(maps=origin_maps),
        PathSegment(hops=1, tree_visits=tree_visits, branches=tuple(target_segments)),
    ))
    return RoutingResult(
        query_id=query.id,
        answering_peers=frozenset(answering_peers),
        answering_sps=frozenset(answering_sps),
        searched_sps=frozenset({sp, *targets}),
        mapping_ops=mapping_ops,
        hops=hops,
        tree_visits=tree_visits,
        cost_tree=cost_tree,
    )


def refresh_knowledge(overlay: KspOverlay, log: QueryLog, every_r: int,
                      queries_routed: int, min_leaf: int = 2) -> KspOverlay:
    """Retrain all indices on the cumulative log after every `every_r` routed
    queries; otherwise return the overlay unchanged."""
    if every_r < 1:
        raise ValueError("refresh period must be >= 1")
    if queries_routed % every_r != 0:
        return overlay
    return train_indices(overlay, log, min_leaf)


def run_kb_epoch(net: Network, overlay: KspOverlay, workload: list[Query],
                 base_log: QueryLog, eps_acc: float, refresh_every: int = 0,
                 min_leaf: int = 2) -> tuple[QueryLog, list[RoutingResult], KspOverlay]:
    """Route a workload with the knowledge strategy, appending to the
    cumulative log and periodically refreshing the indices from it.

    refresh_every = 0 keeps the knowledge static for the whole epoch.
    """
    if not workload:
        raise ValueError("workload is empty")
    cumulative = QueryLog(base_log.records)
    results = []
    for routed, query in enumerate(workload, start=1):
        origin_sp = net.peers[query.origin_peer].super_peer
        result = route_kb(net, overlay, query, origin_sp, eps_acc)
        results.append(result)
        cumulative.append(LogRecord(
            query_id=query.id,
            origin_peer=query.origin_peer,
            origin_sp=origin_sp,
            components=query.components,
            answering_sps=result.answering_sps,
        ))
        if refresh_every > 0:
            overlay = refresh_knowledge(overlay, cumulative, refresh_every, routed, min_leaf)
    kb_era = QueryLog(cumulative.records[len(base_log):])
    return kb_era, results, overlay
