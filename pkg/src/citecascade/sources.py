"""Uniform access to citation links over an offline snapshot.

A :class:`CitationSnapshot` is an immutable view of a record store with the
reference relation inverted: ``citer_index[a]`` holds every id whose reference
list contains ``a``. Forward lookups (who cites X) and backward lookups (what
X cites) both run off this structure.

A remote API backend is specified here as a contract only
(:class:`RemoteCitationSource` + :class:`RemoteSourceConfig`), with a
write-through :class:`DiskCache` any backend can share. The snapshot backend
is the one this package ships; live credentialed services are out of scope.
"""

from __future__ import annotations

import json
import os
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple
from urllib.parse import quote

from .errors import UnknownPublicationError, ValidationError
from .records import ArticleRecord, Dataset, RecordStore

QUERY_KINDS = ("phrase-in-fulltext-proxy", "phrase-in-title-abstract", "id-lookup")


@dataclass
class SourceQuery:
    """A search request: phrases OR-combined, or a direct id lookup.

    The fulltext-proxy kind matches against title+abstract exactly like
    phrase-in-title-abstract does — snapshots carry no full text, so it is an
    explicit approximation, kept as a distinct kind for provenance.
    """

    kind: str
    phrases: list[str]

    def __post_init__(self) -> None:
        if self.kind not in QUERY_KINDS:
            raise ValidationError(f"unknown query kind: {self.kind}")
        if not self.phrases:
            raise ValidationError("query needs at least one phrase")


class CitationCount(NamedTuple):
    value: int
    snapshot_local: bool


class CitationSnapshot:
    """Immutable citation view: records plus the inverse reference index."""

    def __init__(self, records: dict[str, ArticleRecord]):
        self._records = dict(records)
        self._citer_index: dict[str, set[str]] = {pub_id: set() for pub_id in self._records}
        for record in self._records.values():
            for ref in record.reference_ids:
                if ref in self._records:
                    self._citer_index[ref].add(record.id)

    @classmethod
    def from_store(cls, store: RecordStore) -> "CitationSnapshot":
        return cls({record.id: record for record in store.records()})

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, pub_id: str) -> bool:
        return pub_id in self._records

    def ids(self) -> list[str]:
        return sorted(self._records)

    def record(self, pub_id: str) -> ArticleRecord:
        record = self._records.get(pub_id)
        if record is None:
            raise UnknownPublicationError(pub_id)
        return record

    def get_references(self, pub_id: str) -> list[str]:
        """Ids the record cites, restricted to ids resolvable in the snapshot."""
        record = self.record(pub_id)
        return [ref for ref in record.reference_ids if ref in self._records]

    def unresolved_references(self, pub_id: str) -> list[str]:
        """Cited ids that no snapshot record carries (kept out of analyses)."""
        record = self.record(pub_id)
        return [ref for ref in record.reference_ids if ref not in self._records]

    def get_citers(self, pub_id: str) -> list[str]:
        """Ids of snapshot records whose reference list contains ``pub_id``."""
        if pub_id not in self._records:
            raise UnknownPublicationError(pub_id)
        return sorted(self._citer_index[pub_id])

    def citation_count_info(self, pub_id: str) -> CitationCount:
        """Universe-wide citation count when the source reported one, else the
        snapshot-local citer count, flagged as such."""
        record = self.record(pub_id)
        if record.global_citation_count is not None:
            return CitationCount(record.global_citation_count, False)
        return CitationCount(len(self._citer_index[pub_id]), True)

    def citation_count(self, pub_id: str) -> int:
        return self.citation_count_info(pub_id).value

    def search(self, query: SourceQuery, name: str) -> Dataset:
        """Run a query against the snapshot, wrapping hits as a named dataset."""
        if query.kind == "id-lookup":
            members = {p for p in query.phrases if p in self._records}
        else:
            needles = [p.lower() for p in query.phrases]
            members = set()
            for pub_id in self._records:
                record = self._records[pub_id]
                haystack = record.title.lower()
                if record.abstract:
                    haystack += " " + record.abstract.lower()
                if any(needle in haystack for needle in needles):
                    members.add(pub_id)
        return Dataset(
            name=name,
            member_ids=members,
            provenance={"kind": "query", "query_kind": query.kind, "phrases": list(query.phrases)},
        )


# -- remote adapter contract ---------------------------------------------------


@dataclass
class RemoteSourceConfig:
    """Connection settings for a remote citation API backend."""

    base_url: str
    token_env: str = "CITESRC_TOKEN"
    rate_limit_per_second: float = 2.0
    max_in_flight: int = 4
    max_retries: int = 5
    backoff_base_seconds: float = 0.5
    backoff_cap_seconds: float = 30.0

    def token(self) -> str | None:
        return os.environ.get(self.token_env)


def backoff_delays(config: RemoteSourceConfig) -> list[float]:
    """Exponential backoff schedule for throttle responses, capped."""
    return [
        min(config.backoff_base_seconds * (2**attempt), config.backoff_cap_seconds)
        for attempt in range(config.max_retries)
    ]


class RemoteCitationSource(ABC):
    """Contract for a remote backend: the snapshot operations plus paged search.

    Implementations must bound concurrent requests by
    ``config.max_in_flight``, back off exponentially on throttle responses
    (see :func:`backoff_delays`), and merge responses in ascending id order so
    results stay deterministic.
    """

    @abstractmethod
    def get_references(self, pub_id: str) -> list[str]: ...

    @abstractmethod
    def get_citers(self, pub_id: str) -> list[str]: ...

    @abstractmethod
    def citation_count(self, pub_id: str) -> int: ...

    @abstractmethod
    def search_page(self, query: SourceQuery, cursor: str | None) -> tuple[list[str], str | None]:
        """One page of search hits plus the cursor for the next page (None = done)."""


@dataclass
class DiskCache:
    """Write-through response cache laid out as ``cache/<op>/<id>.json``."""

    root: Path

    def __post_init__(self) -> None:
        self.root = Path(self.root)

    def path_for(self, op: str, pub_id: str) -> Path:
        return self.root / op / f"{quote(pub_id, safe='')}.json"

    def get(self, op: str, pub_id: str):
        path = self.path_for(op, pub_id)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    def put(self, op: str, pub_id: str, payload) -> None:
        path = self.path_for(op, pub_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True)


class CachedSource:
    """Wrap any per-id lookup with the disk cache (write-through)."""

    def __init__(self, cache: DiskCache, fetch: Callable[[str, str], object]):
        self._cache = cache
        self._fetch = fetch

    def lookup(self, op: str, pub_id: str):
        hit = self._cache.get(op, pub_id)
        if hit is not None:
            return hit
        value = self._fetch(op, pub_id)
        self._cache.put(op, pub_id, value)
        return value


class ThrottledCall:
    """Simple rate limiter: at most ``per_second`` calls per second."""

    def __init__(self, per_second: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self._interval = 1.0 / per_second if per_second > 0 else 0.0
        self._clock = clock
        self._sleep = sleep
        self._last = float("-inf")

    def wait(self) -> None:
        now = self._clock()
        gap = now - self._last
        if gap < self._interval:
            self._sleep(self._interval - gap)
            now = self._clock()
        self._last = now
