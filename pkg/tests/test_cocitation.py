"""Co-citation networks: slicing, pair counting oracle, pruning, LCC, round-trips."""

from __future__ import annotations

import random
import warnings
import xml.etree.ElementTree as ET
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from citecascade.cocitation import (
    CoCitationNetwork,
    EdgeInfo,
    NetworkConfig,
    NodeInfo,
    build_network,
    canonical_pair,
    cocite_pairs,
    connected_components_traversal,
    connected_components_union_find,
    largest_connected_component,
    network_stats,
    prune_links,
    slice_citers,
)
from citecascade.errors import EmptyDatasetError, ValidationError
from citecascade.records import Dataset

from conftest import make_record, make_snapshot


def loose_config(**overrides) -> NetworkConfig:
    """A config that keeps everything: no pruning bite, no selection bite."""
    params = dict(lrf=10**9, lby=None, min_citations=0, top_n=10**6, slice_years=1)
    params.update(overrides)
    return NetworkConfig(**params)


def cocite_corpus(rng: random.Random, n_citers: int, n_refs: int):
    """Citers (1990-2020) each citing a random set of dated references."""
    records = [
        make_record(f"ref{j:03d}", year=rng.randint(1950, 2015)) for j in range(n_refs)
    ]
    citer_ids = []
    for i in range(n_citers):
        refs = sorted(rng.sample(range(n_refs), rng.randint(0, min(8, n_refs))))
        records.append(
            make_record(
                f"cit{i:03d}",
                year=rng.randint(1990, 2020),
                refs=[f"ref{j:03d}" for j in refs],
                count=rng.randint(0, 30),
            )
        )
        citer_ids.append(f"cit{i:03d}")
    snapshot = make_snapshot(records)
    return snapshot, Dataset("corpus", set(citer_ids))


def brute_force_pairs(snapshot, citer_ids, lby):
    """Independent pair-count: scan every reference pair of every citer."""
    weight: dict[tuple[str, str], int] = {}
    first: dict[tuple[str, str], int] = {}
    for citer_id in citer_ids:
        citer = snapshot.record(citer_id)
        eligible = []
        for ref in citer.reference_ids:
            if ref not in snapshot:
                continue
            ref_year = snapshot.record(ref).year
            if ref_year is None or ref_year > citer.year:
                continue
            if lby is not None and citer.year - ref_year > lby:
                continue
            eligible.append(ref)
        for a, b in combinations(sorted(set(eligible)), 2):
            pair = canonical_pair(a, b)
            weight[pair] = weight.get(pair, 0) + 1
            if pair not in first or citer.year < first[pair]:
                first[pair] = citer.year
    return weight, first


def network_from_edges(edge_spec: dict[tuple[str, str], tuple[int, int]]) -> CoCitationNetwork:
    nodes = {}
    edges = {}
    for (a, b), (weight, year) in edge_spec.items():
        pair = canonical_pair(a, b)
        edges[pair] = EdgeInfo(weight, year)
        for node in pair:
            nodes.setdefault(node, NodeInfo(1, 2000))
    return CoCitationNetwork(nodes, edges, loose_config())


class TestSliceCiters:
    def test_hand_ranked_top3_with_tie_rule(self):
        counts = {"a": 9, "b": 7, "c": 7, "d": 2, "e": 0}
        snapshot = make_snapshot(
            [make_record(p, year=2005, count=n) for p, n in counts.items()]
        )
        dataset = Dataset("d", set(counts))
        config = loose_config(top_n=3, min_citations=1)
        slices = slice_citers(dataset, snapshot, config)
        assert len(slices) == 1
        interval, selected = slices[0]
        assert interval == (2005, 2005)
        assert selected == ["a", "b", "c"]  # 9 first, tie 7/7 by id

    def test_topn_above_slice_size_keeps_all_qualifying(self):
        snapshot = make_snapshot([make_record(f"p{i}", year=2000, count=5) for i in range(4)])
        dataset = Dataset("d", {f"p{i}" for i in range(4)})
        slices = slice_citers(dataset, snapshot, loose_config(top_n=100, min_citations=1))
        assert len(slices[0][1]) == 4

    def test_min_citations_excludes_zero_count(self):
        snapshot = make_snapshot(
            [make_record("cited", year=2000, count=1), make_record("uncited", year=2000, count=0)]
        )
        dataset = Dataset("d", {"cited", "uncited"})
        slices = slice_citers(dataset, snapshot, loose_config(min_citations=1))
        assert slices[0][1] == ["cited"]

    def test_slices_cover_range_consecutively(self):
        snapshot = make_snapshot(
            [make_record(f"p{y}", year=y, count=1) for y in (2000, 2001, 2004)]
        )
        dataset = Dataset("d", {"p2000", "p2001", "p2004"})
        slices = slice_citers(dataset, snapshot, loose_config(slice_years=2))
        assert [s[0] for s in slices] == [(2000, 2001), (2004, 2005)]

    def test_unknown_year_members_skipped_with_warning(self):
        snapshot = make_snapshot(
            [make_record("dated", year=2000, count=1), make_record("undated", year=None, count=1)]
        )
        dataset = Dataset("d", {"dated", "undated"})
        with pytest.warns(UserWarning, match="without a usable year"):
            slices = slice_citers(dataset, snapshot, loose_config())
        assert slices[0][1] == ["dated"]

    def test_empty_dataset_errors(self):
        with pytest.raises(EmptyDatasetError):
            slice_citers(Dataset("d", set()), make_snapshot([]), loose_config())


class TestCocitePairs:
    def _snapshot(self, citer_year, ref_years, lby):
        records = [
            make_record(f"r{i}", year=y) for i, y in enumerate(ref_years)
        ]
        records.append(
            make_record("c", year=citer_year, refs=[f"r{i}" for i in range(len(ref_years))])
        )
        return make_snapshot(records), NetworkConfig(
            lrf=4, lby=lby, min_citations=0, top_n=10, slice_years=1
        )

    def test_both_in_window_pair(self):
        snapshot, config = self._snapshot(2010, [2005, 2008], 10)
        assert cocite_pairs("c", snapshot, config) == {("r0", "r1")}

    def test_too_old_reference_filtered(self):
        # 2010 - 1995 = 15 > 10, so the pair collapses.
        snapshot, config = self._snapshot(2010, [1995, 2008], 10)
        assert cocite_pairs("c", snapshot, config) == set()

    def test_future_reference_filtered(self):
        snapshot, config = self._snapshot(2010, [2012, 2008], 10)
        assert cocite_pairs("c", snapshot, config) == set()

    def test_four_eligible_refs_give_six_pairs(self):
        snapshot, config = self._snapshot(2010, [2004, 2006, 2008, 2009], 10)
        assert len(cocite_pairs("c", snapshot, config)) == 6

    def test_unbounded_lby_keeps_old_references(self):
        snapshot, config = self._snapshot(2010, [1950, 2008], None)
        assert cocite_pairs("c", snapshot, config) == {("r0", "r1")}


class TestBuildNetwork:
    def test_two_citers_one_edge_weight_two(self):
        records = [
            make_record("a", year=1998),
            make_record("b", year=1999),
            make_record("c1", year=2001, refs=["a", "b"], count=1),
            make_record("c2", year=2003, refs=["a", "b"], count=1),
        ]
        snapshot = make_snapshot(records)
        network = build_network(Dataset("d", {"c1", "c2"}), snapshot, loose_config())
        assert set(network.edges) == {("a", "b")}
        assert network.edges[("a", "b")] == EdgeInfo(weight=2, first_cocited_year=2001)

    def test_single_citer_triangle_weights_one(self):
        records = [make_record(r, year=2000) for r in ("a", "b", "c")]
        records.append(make_record("citer", year=2005, refs=["a", "b", "c"], count=1))
        snapshot = make_snapshot(records)
        network = build_network(Dataset("d", {"citer"}), snapshot, loose_config())
        assert set(network.edges) == {("a", "b"), ("a", "c"), ("b", "c")}
        assert all(e.weight == 1 for e in network.edges.values())

    def test_node_attributes_count_whole_dataset(self):
        # c3 cites only "a" and is not co-citing, but still counts toward a's total.
        records = [
            make_record("a", year=1990),
            make_record("b", year=1991),
            make_record("c1", year=2000, refs=["a", "b"], count=1),
            make_record("c2", year=2001, refs=["a", "b"], count=1),
            make_record("c3", year=1995, refs=["a"], count=1),
        ]
        snapshot = make_snapshot(records)
        network = build_network(Dataset("d", {"c1", "c2", "c3"}), snapshot, loose_config())
        assert network.nodes["a"] == NodeInfo(count=3, year=1995)
        assert network.nodes["b"] == NodeInfo(count=2, year=2000)

    def test_zero_pairs_empty_network_with_warning(self):
        snapshot = make_snapshot([make_record("solo", year=2000, refs=[], count=1)])
        with pytest.warns(UserWarning, match="no co-citation pairs"):
            network = build_network(Dataset("d", {"solo"}), snapshot, loose_config())
        assert len(network.nodes) == 0

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10**6), lby=st.sampled_from([2, 5, 10, None]))
    def test_bruteforce_pair_oracle(self, seed, lby):
        rng = random.Random(seed)
        snapshot, dataset = cocite_corpus(rng, n_citers=40, n_refs=25)
        config = loose_config(lby=lby)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # a tight lby may leave zero pairs
            network = build_network(dataset, snapshot, config)
        weight, first = brute_force_pairs(snapshot, sorted(dataset.member_ids), lby)
        assert {p: e.weight for p, e in network.edges.items()} == weight
        assert {p: e.first_cocited_year for p, e in network.edges.items()} == first

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_lby_monotonicity(self, seed):
        rng = random.Random(seed)
        snapshot, dataset = cocite_corpus(rng, n_citers=30, n_refs=20)
        previous_edges: set = set()
        previous_nodes: set = set()
        for lby in (2, 5, 10, None):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                network = build_network(dataset, snapshot, loose_config(lby=lby))
            assert previous_edges <= set(network.edges)
            assert previous_nodes <= set(network.nodes)
            previous_edges = set(network.edges)
            previous_nodes = set(network.nodes)


class TestPruneLinks:
    def test_small_network_untouched(self):
        network = network_from_edges(
            {("a", "b"): (1, 2000), ("b", "c"): (1, 2000), ("a", "c"): (1, 2000)}
        )
        pruned = prune_links(network, 4)
        assert pruned == network  # 3 edges <= 4*3

    def test_hand_sorted_keep_ten_of_twelve(self):
        # 12 edges over 6 nodes; bound floor(est 10/6 * 6) = 10. The two weakest by
        # (weight desc, year asc, pair) are exactly ee-ff and dd-ff.
        edge_spec = {}
        strong = [("a", "b"), ("a", "c"), ("a", "d"), ("b", "c")]
        for pair in strong:
            edge_spec[pair] = (9, 2001)
        middle = [("b", "d"), ("c", "d"), ("a", "e"), ("b", "e")]
        for pair in middle:
            edge_spec[pair] = (5, 2003)
        tie_breakers = [("c", "e"), ("d", "e")]
        for pair in tie_breakers:
            edge_spec[pair] = (2, 1999)  # weight 2, earlier year wins over later 2s
        losers = [("e", "f"), ("d", "f")]
        for pair in losers:
            edge_spec[pair] = (2, 2005)
        network = network_from_edges(edge_spec)
        assert len(network.nodes) == 6 and len(network.edges) == 12
        pruned = prune_links(network, 10 / 6)
        assert len(pruned.edges) == 10
        assert set(pruned.edges) == set(strong + middle + tie_breakers)
        assert set(pruned.nodes) == set(network.nodes)  # f kept though isolated

    def test_lexicographic_last_resort(self):
        edge_spec = {
            ("a", "b"): (1, 2000),
            ("a", "c"): (1, 2000),
            ("b", "c"): (1, 2000),
        }
        network = network_from_edges(edge_spec)
        pruned = prune_links(network, 2 / 3)  # bound = floor(2) = 2
        assert set(pruned.edges) == {("a", "b"), ("a", "c")}

    def test_idempotent_byte_identical(self):
        edge_spec = {
            (f"n{i}", f"n{j}"): ((i * j) % 5 + 1, 2000 + (i + j) % 7)
            for i in range(8)
            for j in range(i + 1, 8)
        }
        network = network_from_edges(edge_spec)
        once = prune_links(network, 1.5)
        twice = prune_links(once, 1.5)
        assert once.to_graphml() == twice.to_graphml()
        assert once.to_json() == twice.to_json()

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10**6), lrf=st.sampled_from([0.5, 1.0, 2.0, 4.0]))
    def test_bound_property(self, seed, lrf):
        rng = random.Random(seed)
        snapshot, dataset = cocite_corpus(rng, 30, 20)
        network = build_network(dataset, snapshot, loose_config())
        pruned = prune_links(network, lrf)
        assert len(pruned.edges) <= int(lrf * len(pruned.nodes))
        assert pruned.nodes == network.nodes


class TestComponents:
    def test_triangle_is_one_component(self):
        network = network_from_edges(
            {("a", "b"): (1, 2000), ("b", "c"): (1, 2000), ("a", "c"): (1, 2000)}
        )
        lcc, pct = largest_connected_component(network)
        assert lcc == {"a", "b", "c"}
        assert pct == 100

    def test_two_components_sizes_4_and_2(self):
        network = network_from_edges(
            {
                ("a", "b"): (1, 2000),
                ("b", "c"): (1, 2000),
                ("c", "d"): (1, 2000),
                ("x", "y"): (1, 2000),
            }
        )
        lcc, pct = largest_connected_component(network)
        assert lcc == {"a", "b", "c", "d"}
        assert pct == 67  # 4/6 rounds up from 66.67

    def test_rounding_vs_truncation_divergence_reported(self):
        network = network_from_edges({("a", "b"): (1, 2000)})
        network.nodes["z"] = NodeInfo(1, 2000)  # 2/3 share: round 67, floor 66
        stats = network_stats(network)
        assert stats.lcc_pct == 67
        assert stats.lcc_pct_floor == 66

    def test_isolated_nodes_are_singleton_components(self):
        network = CoCitationNetwork(
            {"a": NodeInfo(1, 2000), "b": NodeInfo(1, 2000)}, {}, loose_config()
        )
        components = connected_components_traversal(network)
        assert sorted(map(sorted, components)) == [["a"], ["b"]]

    def test_empty_network_errors(self):
        network = CoCitationNetwork({}, {}, loose_config())
        with pytest.raises(ValidationError):
            largest_connected_component(network)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10**6), n=st.integers(2, 40), p=st.floats(0.01, 0.3))
    def test_traversal_equals_union_find(self, seed, n, p):
        rng = random.Random(seed)
        nodes = {f"v{i}": NodeInfo(1, 2000) for i in range(n)}
        edges = {}
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < p:
                    edges[(f"v{i}", f"v{j}")] = EdgeInfo(1, 2000)
        network = CoCitationNetwork(nodes, edges, loose_config())
        by_traversal = sorted(sorted(c) for c in connected_components_traversal(network))
        by_dsu = sorted(sorted(c) for c in connected_components_union_find(network))
        assert by_traversal == by_dsu
        lcc_t, pct_t = largest_connected_component(network, "traversal")
        lcc_u, pct_u = largest_connected_component(network, "union-find")
        assert lcc_t == lcc_u and pct_t == pct_u


class TestStats:
    def test_triangle_stats(self):
        network = network_from_edges(
            {("a", "b"): (1, 2000), ("b", "c"): (1, 2000), ("a", "c"): (1, 2000)}
        )
        stats = network_stats(network)
        assert (stats.nodes, stats.edges, stats.lcc_size, stats.lcc_pct) == (3, 3, 3, 100)
        assert stats.density == pytest.approx(1.0)

    def test_empty_network_zeros(self):
        stats = network_stats(CoCitationNetwork({}, {}, loose_config()))
        assert (stats.nodes, stats.edges, stats.lcc_size, stats.density) == (0, 0, 0, 0.0)

    def test_recount_on_synthetic_network(self, rng):
        snapshot, dataset = cocite_corpus(rng, 25, 15)
        network = build_network(dataset, snapshot, loose_config())
        stats = network_stats(network)
        assert stats.nodes == len(network.nodes)
        assert stats.edges == len(network.edges)


class TestRoundTrips:
    def _sample_network(self) -> CoCitationNetwork:
        nodes = {
            "a": NodeInfo(3, 1998),
            "b": NodeInfo(2, 1999),
            "c": NodeInfo(5, 2000),
        }
        edges = {
            ("a", "b"): EdgeInfo(2, 2001),
            ("b", "c"): EdgeInfo(1, 2003),
        }
        return CoCitationNetwork(
            nodes, edges, NetworkConfig(lrf=4, lby=10, min_citations=1, top_n=100)
        )

    def test_graphml_roundtrip_equal(self):
        network = self._sample_network()
        again = CoCitationNetwork.from_graphml(network.to_graphml())
        assert again == network
        assert again.config.lrf == 4

    def test_json_roundtrip_equal(self):
        network = self._sample_network()
        again = CoCitationNetwork.from_json(network.to_json())
        assert again == network
        assert again.config.lby == 10

    def test_graphml_is_wellformed_xml(self):
        text = self._sample_network().to_graphml()
        root = ET.fromstring(text)
        assert root.tag.endswith("graphml")

    def test_exports_deterministic(self):
        network = self._sample_network()
        assert network.to_graphml() == self._sample_network().to_graphml()
        assert network.to_json() == self._sample_network().to_json()
