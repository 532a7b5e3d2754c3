"""Cost model, scoring, paired experiment runs and sweeps."""

import pytest

from sonsim.config import Config, substream
from sonsim.baseline import PathSegment, RoutingResult
from sonsim.engine import (
    BASELINE,
    KSP,
    CostModel,
    metrics_rows,
    relevant_peers_indexed,
    response_time,
    run_experiment,
    run_pipeline,
    score,
    sweep,
)
from sonsim.baseline import generate_queries
from sonsim.model import oracle_relevant_peers
from sonsim.netgen import build_son


def result_with(tree, **kw):
    defaults = dict(query_id="q", answering_peers=frozenset(), answering_sps=frozenset(),
                    searched_sps=frozenset({0}), mapping_ops=0, hops=0, tree_visits=0,
                    cost_tree=tree)
    defaults.update(kw)
    return RoutingResult(**defaults)


class TestResponseTime:
    def test_local_only_maps_cost(self):
        result = result_with(PathSegment(maps=30))
        assert response_time(result, CostModel(c_hop=10, c_map=1, c_tree=0)) == 30

    def test_all_costs_zero(self):
        tree = PathSegment(hops=2, maps=5, branches=(PathSegment(hops=1, maps=3),))
        assert response_time(result_with(tree), CostModel(0, 0, 0)) == 0.0

    def test_max_over_parallel_branches(self):
        tree = PathSegment(maps=3, branches=(
            PathSegment(maps=10),
            PathSegment(maps=7),
        ))
        assert response_time(result_with(tree), CostModel(c_hop=0, c_map=1, c_tree=0)) == 13

    def test_additive_in_each_coefficient_on_a_chain(self):
        tree = PathSegment(hops=2, maps=5, tree_visits=3,
                           branches=(PathSegment(hops=1, maps=4, tree_visits=2),))
        base = CostModel(c_hop=10, c_map=1, c_tree=0.1)
        t0 = response_time(result_with(tree), base)
        t_map2 = response_time(result_with(tree), CostModel(10, 2, 0.1))
        assert t_map2 - t0 == pytest.approx(9 * 1)  # doubled c_map adds maps*c_map
        t_hop2 = response_time(result_with(tree), CostModel(20, 1, 0.1))
        assert t_hop2 - t0 == pytest.approx(3 * 10)

    def test_homogeneous_under_scaling(self):
        tree = PathSegment(hops=1, maps=2, branches=(
            PathSegment(hops=3, maps=1), PathSegment(maps=9),
        ))
        base = CostModel(7, 2, 0.5)
        doubled = CostModel(14, 4, 1.0)
        assert response_time(result_with(tree), doubled) == \
            pytest.approx(2 * response_time(result_with(tree), base))

    def test_negative_costs_rejected(self):
        with pytest.raises(ValueError):
            CostModel(c_hop=-1)


class TestScore:
    def _r(self, peers):
        return result_with(PathSegment(), answering_peers=frozenset(peers))

    def test_exact_match(self):
        assert score(self._r({1, 2}), {1, 2}) == (1.0, 1.0)

    def test_disjoint_sets(self):
        assert score(self._r({1, 2}), {3, 4}) == (0.0, 0.0)

    def test_half_recall(self):
        assert score(self._r({1}), {1, 2}) == (1.0, 0.5)

    def test_degenerate_denominators(self):
        assert score(self._r(set()), {1}) == (1.0, 0.0)
        assert score(self._r({1}), set()) == (0.0, 1.0)


class TestIndexedRelevance:
    def test_matches_exhaustive_oracle(self):
        net = build_son(Config(np=50, nsp=5, seed=23))
        rng = substream(3, "probe")
        for k in range(25):
            pid = rng.randrange(50)
            q = generate_queries(net.peers[pid], 1, 4, rng, id_prefix=f"p{k}-")[0]
            for eps in (0.0, 0.25, 0.5, 1.0):
                assert relevant_peers_indexed(net, q, eps) == \
                    oracle_relevant_peers(net, q, eps)


class TestRunExperiment:
    def _config(self, **kw):
        base = dict(np=40, nsp=4, seed=51, queries_per_peer=2)
        base.update(kw)
        return Config(**base)

    def test_report_has_both_strategies(self):
        report = run_experiment(self._config())
        assert set(report.summaries) == {BASELINE, KSP}
        assert len(report.per_query[BASELINE]) == 80
        assert len(report.per_query[KSP]) == 80

    def test_deterministic_reports(self):
        a = run_experiment(self._config())
        b = run_experiment(self._config())
        assert a.per_query == b.per_query
        assert a.summaries == b.summaries

    def test_single_node_network_degenerates(self):
        config = self._config(np=1, nsp=1, friends_per_sp=0, min_peer_expertise=1,
                              queries_per_peer=3)
        report = run_experiment(config)
        bl, kb = report.summaries[BASELINE], report.summaries[KSP]
        assert bl.mean_precision == kb.mean_precision == 1.0
        assert bl.mean_recall == kb.mean_recall
        assert bl.total_mapping_ops == kb.total_mapping_ops
        for row_bl, row_kb in zip(report.per_query[BASELINE], report.per_query[KSP]):
            assert row_bl.precision == row_kb.precision
            assert row_bl.recall == row_kb.recall
            assert row_bl.mapping_ops == row_kb.mapping_ops

    def test_replay_mode_reuses_training_queries(self):
        report_replay = run_experiment(self._config(workload_mode="replay"))
        artifacts = run_pipeline(self._config(workload_mode="replay"))
        train_components = [r.components for r in artifacts.train_log]
        eval_components = [q.components for q in artifacts.eval_workload]
        assert train_components == eval_components
        assert set(report_replay.summaries) == {BASELINE, KSP}

    def test_aggregates_recomputable_from_rows(self):
        report = run_experiment(self._config())
        for strategy, rows in report.per_query.items():
            summary = report.summaries[strategy]
            assert summary.mean_recall == pytest.approx(
                sum(r.recall for r in rows) / len(rows))
            assert summary.total_mapping_ops == sum(r.mapping_ops for r in rows)

    def test_peer_level_precision_is_always_one(self):
        report = run_experiment(self._config(np=60, nsp=6, seed=4))
        for rows in report.per_query.values():
            assert all(r.precision == 1.0 for r in rows)

    def test_baseline_rows_have_no_tree_visits(self):
        report = run_experiment(self._config())
        assert all(r.tree_visits == 0 for r in report.per_query[BASELINE])
        assert all(r.tree_visits >= 1 for r in report.per_query[KSP])

    def test_metrics_rows_are_column_ordered(self):
        report = run_experiment(self._config(np=8, nsp=2, queries_per_peer=1,
                                             friends_per_sp=1))
        rows = metrics_rows(report)
        assert rows[0][0] == BASELINE
        assert len(rows[0]) == 9


class TestSweep:
    def _config(self):
        return Config(np=20, nsp=2, seed=9, queries_per_peer=1, friends_per_sp=1)

    def test_single_size(self):
        reports = sweep(self._config(), [(20, 2)])
        assert len(reports) == 1
        assert reports[0].config.np == 20

    def test_empty_sizes_rejected(self):
        with pytest.raises(ValueError):
            sweep(self._config(), [])

    def test_mapping_ops_grow_with_network_size(self):
        reports = sweep(self._config(), [(20, 2), (60, 4), (120, 6)])
        totals = [r.summaries[BASELINE].total_mapping_ops for r in reports]
        assert totals == sorted(totals)
        assert totals[0] < totals[-1]

    def test_derived_seeds_differ_per_point(self):
        reports = sweep(self._config(), [(20, 2), (24, 2)])
        assert reports[0].config.seed != reports[1].config.seed

    def test_per_query_flag_drops_rows_but_keeps_summaries(self):
        reports = sweep(self._config(), [(20, 2)], per_query=False)
        assert reports[0].per_query[BASELINE] == []
        assert reports[0].summaries[BASELINE].n_queries == 20
