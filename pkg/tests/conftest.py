"""Shared builders for snapshots, synthetic citation graphs, and networks."""

from __future__ import annotations

import random
from pathlib import Path

import pytest

from citecascade.records import ArticleRecord, RecordStore
from citecascade.sources import CitationSnapshot

DATA_DIR = Path(__file__).parent / "data"
SYNTHETIC_CORPUS = DATA_DIR / "synthetic_500.jsonl"


def make_record(
    pub_id: str,
    year: int | None = 2000,
    refs: list[str] | None = None,
    count: int | None = None,
    title: str | None = None,
    abstract: str | None = None,
) -> ArticleRecord:
    return ArticleRecord(
        id=pub_id,
        title=title if title is not None else f"article {pub_id}",
        year=year,
        reference_ids=refs or [],
        global_citation_count=count,
        abstract=abstract,
    )


def make_snapshot(records: list[ArticleRecord]) -> CitationSnapshot:
    store = RecordStore()
    for record in records:
        store.insert(record)
    return CitationSnapshot.from_store(store)


def chain_snapshot(n: int, start_year: int = 2000) -> CitationSnapshot:
    """a <- b <- c <- ...: record i cites record i-1."""
    ids = [chr(ord("a") + i) for i in range(n)]
    records = []
    for i, pub_id in enumerate(ids):
        refs = [ids[i - 1]] if i > 0 else []
        records.append(make_record(pub_id, year=start_year + i, refs=refs))
    return make_snapshot(records)


def random_citation_dag(
    rng: random.Random,
    n_nodes: int,
    max_refs: int = 6,
    count_range: tuple[int, int] = (0, 8),
    with_counts: float = 0.7,
) -> CitationSnapshot:
    """Random DAG: node i may only cite nodes j < i, years ascend with index."""
    records = []
    for i in range(n_nodes):
        refs = []
        if i > 0:
            k = rng.randint(0, min(max_refs, i))
            refs = [f"n{j:04d}" for j in sorted(rng.sample(range(i), k))]
        count = rng.randint(*count_range) if rng.random() < with_counts else None
        records.append(
            make_record(f"n{i:04d}", year=1950 + (i % 70), refs=refs, count=count)
        )
    return make_snapshot(records)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(1234)
