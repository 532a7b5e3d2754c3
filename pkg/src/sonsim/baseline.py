"""Two-level semantic query routing and the global query log it produces.

Local search is always exhaustive over the origin community. Global search
evaluates each friend super-peer's expertise against the query and forwards
to the qualifying ones, breadth-first, each super-peer processing a given
query at most once. Every capacity evaluation is metered, and the forwarding
tree is kept so response time can later be costed along its critical path.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from random import Random

from .model import ExpertiseElement, PeerId, Query, SuperPeerId, capacity, parse_element
from .netgen import Network, Peer


@dataclass(frozen=True)
class PathSegment:
    """Sequential cost segment of a forwarding tree; branches run in parallel
    after it."""

    hops: int = 0
    maps: int = 0
    tree_visits: int = 0
    branches: tuple["PathSegment", ...] = ()


@dataclass(frozen=True)
class RoutingResult:
    query_id: str
    answering_peers: frozenset[PeerId]
    answering_sps: frozenset[SuperPeerId]
    searched_sps: frozenset[SuperPeerId]
    mapping_ops: int
    hops: int
    tree_visits: int
    cost_tree: PathSegment


@dataclass(frozen=True)
class LogRecord:
    """One routed query: who asked, from which community, what was asked, and
    which super-peers responded favorably."""

    query_id: str
    origin_peer: PeerId
    origin_sp: SuperPeerId
    components: tuple[ExpertiseElement, ...]
    answering_sps: frozenset[SuperPeerId]


class QueryLog:
    """Append-only, duplicate-rejecting trace of routed queries."""

    def __init__(self, records=()):
        self._records: list[LogRecord] = []
        self._ids: set[str] = set()
        for record in records:
            self.append(record)

    def append(self, record: LogRecord) -> None:
        if record.query_id in self._ids:
            raise ValueError(f"duplicate query id in log: {record.query_id}")
        self._ids.add(record.query_id)
        self._records.append(record)

    @property
    def records(self) -> tuple[LogRecord, ...]:
        return tuple(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        return iter(self._records)


def generate_queries(peer: Peer, count: int, n_components: int, rng: Random,
                     id_prefix: str = "q") -> list[Query]:
    """Generate `count` queries whose components are drawn uniformly, with
    replacement, from the peer's own expertise."""
    if count < 0:
        raise ValueError("query count must be >= 0")
    if n_components < 1:
        raise ValueError("queries need at least one component")
    if not peer.expertise:
        raise ValueError(f"peer {peer.id} has empty expertise")
    pool = sorted(peer.expertise)
    queries = []
    for k in range(count):
        components = tuple(rng.choice(pool) for _ in range(n_components))
        queries.append(Query(id=f"{id_prefix}{peer.id}-{k}", origin_peer=peer.id,
                             components=components))
    return queries


class _Segment:
    """Mutable builder for PathSegment while the forwarding wave runs."""

    __slots__ = ("hops", "maps", "children")

    def __init__(self, hops: int = 0, maps: int = 0):
        self.hops = hops
        self.maps = maps
        self.children: list[_Segment] = []

    def freeze(self) -> PathSegment:
        return PathSegment(hops=self.hops, maps=self.maps, tree_visits=0,
                           branches=tuple(child.freeze() for child in self.children))


def route_baseline(net: Network, query: Query, sp: SuperPeerId, eps_acc: float,
                   max_hops: int | None = 1) -> RoutingResult:
    """Route one query from super-peer `sp` (the origin peer's community head).

    max_hops bounds the forwarding depth: 0 is local-only, 1 reaches direct
    friends, None floods until no unvisited qualifying super-peer remains.
    """
    if sp not in net.super_peers:
        raise ValueError(f"unknown super-peer {sp}")
    if not 0.0 <= eps_acc <= 1.0:
        raise ValueError(f"eps_acc must lie in [0, 1], got {eps_acc}")
    if max_hops is not None and max_hops < 0:
        raise ValueError("max_hops must be >= 0 or None for unbounded")

    answering_peers: set[PeerId] = set()
    answering_sps: set[SuperPeerId] = set()
    mapping_ops = 0
    hops = 0

    processed: set[SuperPeerId] = {sp}
    segments: dict[SuperPeerId, _Segment] = {sp: _Segment(hops=0)}
    queue: deque[tuple[SuperPeerId, int]] = deque([(sp, 0)])

    while queue:
        spid, depth = queue.popleft()
        segment = segments[spid]

        local_hits = [
            pid for pid, expertise in net.members_index[spid]
            if capacity(expertise, query) >= eps_acc
        ]
        segment.maps += len(net.members_index[spid])
        mapping_ops += len(net.members_index[spid])
        if local_hits:
            answering_peers.update(local_hits)
            answering_sps.add(spid)

        if max_hops is not None and depth >= max_hops:
            continue
        friends = sorted(net.super_peers[spid].friends)
        segment.maps += len(friends)
        mapping_ops += len(friends)
        for friend in friends:
            qualifies = capacity(net.super_peers[friend].expertise, query) >= eps_acc
            if qualifies and friend not in processed:
                processed.add(friend)
                hops += 1
                child = _Segment(hops=1)
                segments[friend] = child
                segment.children.append(child)
                queue.append((friend, depth + 1))

    return RoutingResult(
        query_id=query.id,
        answering_peers=frozenset(answering_peers),
        answering_sps=frozenset(answering_sps),
        searched_sps=frozenset(processed),
        mapping_ops=mapping_ops,
        hops=hops,
        tree_visits=0,
        cost_tree=segments[sp].freeze(),
    )


def run_baseline_epoch(net: Network, workload: list[Query], eps_acc: float,
                       max_hops: int | None = 1) -> tuple[QueryLog, list[RoutingResult]]:
    """Route every query in order; one log record per query."""
    if not workload:
        raise ValueError("workload is empty")
    log = QueryLog()
    results = []
    for query in workload:
        origin_sp = net.peers[query.origin_peer].super_peer
        result = route_baseline(net, query, origin_sp, eps_acc, max_hops)
        results.append(result)
        log.append(LogRecord(
            query_id=query.id,
            origin_peer=query.origin_peer,
            origin_sp=origin_sp,
            components=query.components,
            answering_sps=result.answering_sps,
        ))
    return log, results


def write_query_log(log: QueryLog, path) -> None:
    """Tab-separated trace: id, origin peer, origin super-peer, the components,
    then the answering super-peers as a comma list ("-" when none)."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in log:
            answering = ",".join(str(s) for s in sorted(record.answering_sps)) or "-"
            fields = [record.query_id, str(record.origin_peer), str(record.origin_sp)]
            fields.extend(c.render() for c in record.components)
            fields.append(answering)
            fh.write("\t".join(fields) + "\n")


def read_query_log(path) -> QueryLog:
    log = QueryLog()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) < 5:
                raise ValueError(f"{path}: line {lineno}: expected at least 5 fields")
            answering_field = fields[-1]
            answering = frozenset(
                int(s) for s in answering_field.split(",")
            ) if answering_field != "-" else frozenset()
            log.append(LogRecord(
                query_id=fields[0],
                origin_peer=int(fields[1]),
                origin_sp=int(fields[2]),
                components=tuple(parse_element(c) for c in fields[3:-1]),
                answering_sps=answering,
            ))
    return log
