"""Baseline routing: query generation, two-level search, epoch and log I/O."""

import pytest

from sonsim.config import Config, substream
from sonsim.baseline import (
    LogRecord,
    PathSegment,
    QueryLog,
    generate_queries,
    read_query_log,
    route_baseline,
    run_baseline_epoch,
    write_query_log,
)
from sonsim.model import Query, capacity, is_relevant, oracle_relevant_peers
from sonsim.netgen import build_son


def small_net(np=40, nsp=4, seed=21, **kw):
    return build_son(Config(np=np, nsp=nsp, seed=seed, **kw))


def queries_for(net, pid, count=3, n=4, seed=5, prefix="q"):
    return generate_queries(net.peers[pid], count, n, substream(seed, "wl"),
                            id_prefix=prefix)


class TestGenerateQueries:
    def test_zero_count_gives_empty_list(self):
        net = small_net()
        assert queries_for(net, 0, count=0) == []

    def test_origin_peer_is_always_relevant(self):
        net = small_net()
        for q in queries_for(net, 7, count=10):
            peer = net.peers[7]
            assert q.origin_peer == 7
            assert capacity(peer.expertise, q) == 1.0
            for eps in (0.0, 0.5, 1.0):
                assert is_relevant(peer.expertise, q, eps)

    def test_deterministic_under_seed(self):
        net = small_net()
        assert queries_for(net, 3, seed=9) == queries_for(net, 3, seed=9)

    def test_components_have_requested_length(self):
        net = small_net()
        for q in queries_for(net, 2, n=6):
            assert len(q.components) == 6

    def test_empty_expertise_rejected(self):
        net = small_net()
        import dataclasses
        bare = dataclasses.replace(net.peers[0], expertise=frozenset())
        with pytest.raises(ValueError, match="empty expertise"):
            generate_queries(bare, 1, 4, substream(1, "x"))


def _reference_route_one_hop(net, query, eps_acc):
    """Line-by-line naive router: local scan, then one global round over the
    origin's friends, each qualifying friend scanning its own members."""
    origin_sp = net.peers[query.origin_peer].super_peer
    n = len(query.components)

    def sp_fraction(spid):
        expertise = net.super_peers[spid].expertise
        return sum(1 for c in query.components if c in expertise) / n

    def members_answering(spid):
        found = set()
        for pid in net.super_peers[spid].members:
            frac = sum(1 for c in query.components if c in net.peers[pid].expertise) / n
            if frac >= eps_acc:
                found.add(pid)
        return found

    answering = members_answering(origin_sp)
    answering_sps = {origin_sp} if answering else set()
    for friend in net.super_peers[origin_sp].friends:
        if sp_fraction(friend) >= eps_acc:
            hits = members_answering(friend)
            if hits:
                answering |= hits
                answering_sps.add(friend)
    return answering, answering_sps


class TestRouteBaseline:
    def test_single_community_answers_its_own_query(self):
        net = small_net(np=5, nsp=1, friends_per_sp=0)
        q = queries_for(net, 2, count=1)[0]
        result = route_baseline(net, q, 0, 0.5, max_hops=1)
        assert 2 in result.answering_peers
        assert result.hops == 0
        assert result.searched_sps == frozenset({0})

    def test_flood_matches_oracle_at_zero_threshold(self):
        net = small_net(np=30, nsp=3, friends_per_sp=2)
        q = queries_for(net, 4, count=1)[0]
        result = route_baseline(net, q, net.peers[4].super_peer, 0.0, max_hops=None)
        assert result.answering_peers == oracle_relevant_peers(net, q, 0.0)

    def test_matches_reference_router_on_ten_sp_network(self):
        net = small_net(np=100, nsp=10, seed=33)
        rng = substream(17, "probe")
        for _ in range(30):
            pid = rng.randrange(100)
            q = generate_queries(net.peers[pid], 1, 4, rng, id_prefix=f"r{pid}-")[0]
            result = route_baseline(net, q, net.peers[pid].super_peer, 0.5, max_hops=1)
            ref_peers, ref_sps = _reference_route_one_hop(net, q, 0.5)
            assert result.answering_peers == ref_peers
            assert result.answering_sps == ref_sps

    def test_every_answering_peer_is_relevant(self):
        net = small_net(np=60, nsp=6)
        q = queries_for(net, 11, count=1)[0]
        result = route_baseline(net, q, net.peers[11].super_peer, 0.5)
        for pid in result.answering_peers:
            assert is_relevant(net.peers[pid].expertise, q, 0.5)

    def test_mapping_ops_cover_origin_community(self):
        net = small_net(np=40, nsp=4)
        q = queries_for(net, 1, count=1)[0]
        origin_sp = net.peers[1].super_peer
        result = route_baseline(net, q, origin_sp, 0.5)
        assert result.mapping_ops >= len(net.super_peers[origin_sp].members)

    def test_local_only_when_max_hops_zero(self):
        net = small_net(np=40, nsp=4)
        q = queries_for(net, 1, count=1)[0]
        result = route_baseline(net, q, net.peers[1].super_peer, 0.0, max_hops=0)
        assert result.hops == 0
        assert result.searched_sps == frozenset({net.peers[1].super_peer})

    def test_unknown_sp_rejected(self):
        net = small_net()
        q = queries_for(net, 0, count=1)[0]
        with pytest.raises(ValueError, match="unknown super-peer"):
            route_baseline(net, q, 99, 0.5)

    def test_each_sp_processed_once_under_flood(self):
        net = small_net(np=30, nsp=6, friends_per_sp=3)
        q = queries_for(net, 0, count=1)[0]
        result = route_baseline(net, q, 0, 0.0, max_hops=None)
        # Forward count equals newly visited super-peers: no duplicates.
        assert result.hops == len(result.searched_sps) - 1


class TestCostTree:
    def test_local_only_tree_has_no_branches(self):
        net = small_net(np=10, nsp=1, friends_per_sp=0)
        q = queries_for(net, 0, count=1)[0]
        result = route_baseline(net, q, 0, 0.5)
        assert result.cost_tree.branches == ()
        assert result.cost_tree.maps == result.mapping_ops
        assert result.cost_tree.hops == 0

    def test_totals_match_tree_sums(self):
        net = small_net(np=60, nsp=6)
        q = queries_for(net, 13, count=1)[0]
        result = route_baseline(net, q, net.peers[13].super_peer, 0.0, max_hops=2)

        def sums(seg: PathSegment):
            hops, maps = seg.hops, seg.maps
            for b in seg.branches:
                bh, bm = sums(b)
                hops += bh
                maps += bm
            return hops, maps

        hops, maps = sums(result.cost_tree)
        assert hops == result.hops
        assert maps == result.mapping_ops


class TestEpochAndLog:
    def test_one_record_per_query(self):
        net = small_net(np=12, nsp=3, friends_per_sp=2)
        workload = [q for pid in range(12) for q in queries_for(net, pid, count=1,
                                                                prefix=f"w{pid}-")]
        log, results = run_baseline_epoch(net, workload, 0.5)
        assert len(log) == len(workload) == len(results)

    def test_count_conservation(self):
        net = small_net(np=20, nsp=4)
        workload = [q for pid in range(20)
                    for q in queries_for(net, pid, count=5, prefix=f"w{pid}-")]
        log, _ = run_baseline_epoch(net, workload, 0.5)
        assert len(log) == 100

    def test_empty_workload_rejected(self):
        net = small_net()
        with pytest.raises(ValueError):
            run_baseline_epoch(net, [], 0.5)

    def test_duplicate_query_ids_rejected(self):
        record = LogRecord("q1", 0, 0, (), frozenset())
        log = QueryLog([record])
        with pytest.raises(ValueError, match="duplicate"):
            log.append(record)

    def test_log_round_trips_through_file(self, tmp_path):
        net = small_net(np=12, nsp=3, friends_per_sp=2)
        workload = [q for pid in range(12)
                    for q in queries_for(net, pid, count=2, prefix=f"w{pid}-")]
        log, _ = run_baseline_epoch(net, workload, 0.5)
        path = tmp_path / "log.tsv"
        write_query_log(log, path)
        loaded = read_query_log(path)
        assert loaded.records == log.records

    def test_unanswered_record_round_trips(self, tmp_path):
        from sonsim.model import ExpertiseElement
        record = LogRecord("q0", 1, 0,
                           (ExpertiseElement("a", "b"), ExpertiseElement("c", "d")),
                           frozenset())
        path = tmp_path / "log.tsv"
        write_query_log(QueryLog([record]), path)
        assert read_query_log(path).records == (record,)
