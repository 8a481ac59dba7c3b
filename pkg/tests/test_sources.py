"""Citation snapshot: lookups, counts, search, cache layout, adapter contract."""

from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from citecascade.errors import UnknownPublicationError, ValidationError
from citecascade.sources import (
    CachedSource,
    DiskCache,
    RemoteCitationSource,
    RemoteSourceConfig,
    SourceQuery,
    backoff_delays,
)

from conftest import make_record, make_snapshot, random_citation_dag


class TestReferences:
    def test_record_with_25_references(self):
        # A classic seed article whose 25 references all resolve.
        refs = [f"r{i:02d}" for i in range(25)]
        records = [make_record("seed", year=1986, refs=refs, count=421)]
        records += [make_record(r, year=1980) for r in refs]
        snapshot = make_snapshot(records)
        assert len(snapshot.get_references("seed")) == 25

    def test_zero_references_is_found_not_missing(self):
        snapshot = make_snapshot([make_record("p1")])
        assert snapshot.get_references("p1") == []

    def test_unknown_id_raises_not_found(self):
        snapshot = make_snapshot([make_record("p1")])
        with pytest.raises(UnknownPublicationError):
            snapshot.get_references("ghost")

    def test_unresolvable_refs_reported_separately(self):
        snapshot = make_snapshot(
            [make_record("p1", refs=["known", "missing"]), make_record("known")]
        )
        assert snapshot.get_references("p1") == ["known"]
        assert snapshot.unresolved_references("p1") == ["missing"]


class TestCiters:
    def test_two_known_citers(self):
        snapshot = make_snapshot(
            [
                make_record("r"),
                make_record("p", refs=["r"]),
                make_record("q", refs=["r"]),
            ]
        )
        assert snapshot.get_citers("r") == ["p", "q"]

    def test_excludes_queried_id_and_no_duplicates(self, rng):
        snapshot = random_citation_dag(rng, 60)
        for pub_id in snapshot.ids():
            citers = snapshot.get_citers(pub_id)
            assert pub_id not in citers
            assert len(citers) == len(set(citers))

    def test_matches_bruteforce_inverse_scan(self, rng):
        # 50-record snapshot: citer sets must equal a full scan of reference lists.
        snapshot = random_citation_dag(rng, 50)
        for pub_id in snapshot.ids():
            brute = sorted(
                other
                for other in snapshot.ids()
                if pub_id in snapshot.record(other).reference_ids
            )
            assert snapshot.get_citers(pub_id) == brute

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_inverse_relation_property(self, seed):
        snapshot = random_citation_dag(random.Random(seed), 30)
        for a in snapshot.ids():
            for b in snapshot.ids():
                assert (a in snapshot.get_references(b)) == (b in snapshot.get_citers(a))


class TestCitationCount:
    def test_reported_count_preferred(self):
        snapshot = make_snapshot([make_record("p", count=157)])
        info = snapshot.citation_count_info("p")
        assert info.value == 157
        assert not info.snapshot_local

    def test_snapshot_local_fallback_flagged(self):
        snapshot = make_snapshot(
            [make_record("r")] + [make_record(f"c{i}", refs=["r"]) for i in range(3)]
        )
        info = snapshot.citation_count_info("r")
        assert info.value == 3
        assert info.snapshot_local

    def test_isolated_record_counts_zero(self):
        snapshot = make_snapshot([make_record("p")])
        assert snapshot.citation_count("p") == 0

    def test_unknown_id_raises(self):
        snapshot = make_snapshot([make_record("p")])
        with pytest.raises(UnknownPublicationError):
            snapshot.citation_count("ghost")


class TestSearch:
    def test_exact_title_match_singleton(self):
        snapshot = make_snapshot(
            [
                make_record("p1", title="deep kernel methods"),
                make_record("p2", title="shallow parsing"),
            ]
        )
        result = snapshot.search(
            SourceQuery("phrase-in-title-abstract", ["deep kernel methods"]), name="hit"
        )
        assert result.member_ids == {"p1"}
        assert result.provenance["kind"] == "query"

    def test_or_combination_unions_per_phrase_results(self):
        snapshot = make_snapshot(
            [
                make_record("p1", title="alpha methods"),
                make_record("p2", title="beta methods"),
                make_record("p3", title="gamma methods"),
            ]
        )
        one = snapshot.search(SourceQuery("phrase-in-title-abstract", ["alpha"]), "a")
        other = snapshot.search(SourceQuery("phrase-in-title-abstract", ["beta"]), "b")
        both = snapshot.search(SourceQuery("phrase-in-title-abstract", ["alpha", "beta"]), "ab")
        assert both.member_ids == one.member_ids | other.member_ids

    def test_matches_abstract_too_case_insensitive(self):
        snapshot = make_snapshot(
            [make_record("p1", title="untitled", abstract="Uses Latent Topic Models.")]
        )
        hits = snapshot.search(
            SourceQuery("phrase-in-fulltext-proxy", ["latent topic"]), "q"
        )
        assert hits.member_ids == {"p1"}

    def test_equals_bruteforce_substring_scan(self, rng):
        snapshot = random_citation_dag(rng, 100)
        phrase = "article n00"
        hits = snapshot.search(SourceQuery("phrase-in-title-abstract", [phrase]), "q")
        brute = set()
        for pub_id in snapshot.ids():
            record = snapshot.record(pub_id)
            text = record.title.lower() + " " + (record.abstract or "").lower()
            if phrase in text:
                brute.add(pub_id)
        assert hits.member_ids == brute

    def test_id_lookup_kind(self):
        snapshot = make_snapshot([make_record("p1"), make_record("p2")])
        hits = snapshot.search(SourceQuery("id-lookup", ["p2", "ghost"]), "q")
        assert hits.member_ids == {"p2"}

    def test_empty_phrase_list_rejected(self):
        with pytest.raises(ValidationError):
            SourceQuery("phrase-in-title-abstract", [])

    @settings(max_examples=20, deadline=None)
    @given(st.lists(st.sampled_from(["alpha", "beta", "gamma", "zzz"]), min_size=1, max_size=3))
    def test_search_monotone_in_phrases(self, phrases):
        snapshot = make_snapshot(
            [
                make_record("p1", title="alpha study"),
                make_record("p2", title="beta study"),
                make_record("p3", title="gamma beta study"),
            ]
        )
        base = snapshot.search(SourceQuery("phrase-in-title-abstract", phrases), "q")
        wider = snapshot.search(
            SourceQuery("phrase-in-title-abstract", phrases + ["study"]), "q2"
        )
        assert base.member_ids <= wider.member_ids


class TestDiskCache:
    def test_layout_and_roundtrip(self, tmp_path):
        cache = DiskCache(tmp_path / "cache")
        cache.put("get_references", "pub.42", ["a", "b"])
        expected = tmp_path / "cache" / "get_references" / "pub.42.json"
        assert expected.exists()
        assert cache.get("get_references", "pub.42") == ["a", "b"]
        assert json.loads(expected.read_text()) == ["a", "b"]

    def test_ids_with_separators_stay_inside_op_dir(self, tmp_path):
        cache = DiskCache(tmp_path / "cache")
        cache.put("get_citers", "doi:10.1000/xyz", [1])
        paths = list((tmp_path / "cache" / "get_citers").iterdir())
        assert len(paths) == 1
        assert cache.get("get_citers", "doi:10.1000/xyz") == [1]

    def test_write_through_wrapper_hits_backend_once(self, tmp_path):
        calls = []

        def fetch(op, pub_id):
            calls.append((op, pub_id))
            return {"refs": [pub_id]}

        source = CachedSource(DiskCache(tmp_path / "cache"), fetch)
        first = source.lookup("get_references", "x")
        second = source.lookup("get_references", "x")
        assert first == second == {"refs": ["x"]}
        assert calls == [("get_references", "x")]


class TestRemoteContract:
    def test_backoff_schedule_exponential_and_capped(self):
        config = RemoteSourceConfig(
            base_url="https://example.test", backoff_base_seconds=1.0,
            backoff_cap_seconds=5.0, max_retries=5,
        )
        assert backoff_delays(config) == [1.0, 2.0, 4.0, 5.0, 5.0]

    def test_token_read_from_env(self, monkeypatch):
        config = RemoteSourceConfig(base_url="https://example.test")
        monkeypatch.setenv("CITESRC_TOKEN", "sekrit")
        assert config.token() == "sekrit"
        monkeypatch.delenv("CITESRC_TOKEN")
        assert config.token() is None

    def test_contract_is_abstract_but_implementable(self):
        with pytest.raises(TypeError):
            RemoteCitationSource()  # type: ignore[abstract]

        class FakeRemote(RemoteCitationSource):
            def get_references(self, pub_id):
                return ["a"]

            def get_citers(self, pub_id):
                return ["b"]

            def citation_count(self, pub_id):
                return 1

            def search_page(self, query, cursor):
                return (["x"], None)

        remote = FakeRemote()
        assert remote.get_references("p") == ["a"]
        ids, next_cursor = remote.search_page(
            SourceQuery("phrase-in-title-abstract", ["q"]), None
        )
        assert ids == ["x"] and next_cursor is None
