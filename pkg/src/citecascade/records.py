"""Bibliographic record store: ingestion, dedup, datasets, year statistics.

Records come from JSONL exports or header-driven Dimensions-style CSV files,
get normalized into :class:`ArticleRecord`, and live in a :class:`RecordStore`
(in-memory index plus an append-only JSONL log). Named article-id sets are
:class:`Dataset` objects; per-dataset year statistics are
:class:`YearDistribution` objects.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .errors import EmptyDatasetError, FormatError, ValidationError

MIN_YEAR = 1500

_WS_RE = re.compile(r"\s+")


def max_plausible_year() -> int:
    """Latest year a record may carry (next calendar year)."""
    return date.today().year + 1


def normalize_title(title: str) -> str:
    """Normalize a title for matching: NFC, lowercase, no punctuation, single spaces."""
    text = unicodedata.normalize("NFC", title).lower()
    text = "".join(" " if unicodedata.category(ch).startswith("P") else ch for ch in text)
    return _WS_RE.sub(" ", text).strip()


def canonical_id(title: str, year: int | None) -> str:
    """Derive a stable id for records whose source provides none."""
    key = f"{normalize_title(title)}:{year if year is not None else ''}"
    return hashlib.sha1(key.encode("utf-8")).hexdigest()


@dataclass
class ArticleRecord:
    """One publication: identity, text fields, outgoing references, citation count.

    ``year`` may be None (unknown); such records land in the UNKNOWN bucket of
    year distributions. ``global_citation_count`` is the citation count reported
    by the source for the whole publication universe, not just this store.
    """

    id: str
    title: str
    year: int | None
    reference_ids: list[str] = field(default_factory=list)
    venue: str | None = None
    authors: list[str] | None = None
    abstract: str | None = None
    global_citation_count: int | None = None
    source_tag: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("record id must be nonempty")
        if self.year is not None and not (MIN_YEAR <= self.year <= max_plausible_year()):
            raise ValidationError(f"year {self.year} outside [{MIN_YEAR}, {max_plausible_year()}]")
        if self.global_citation_count is not None and self.global_citation_count < 0:
            raise ValidationError("global_citation_count must be >= 0")
        # Reference lists keep their order but never contain dups or the record itself.
        seen: set[str] = set()
        refs: list[str] = []
        for ref in self.reference_ids:
            if ref and ref != self.id and ref not in seen:
                seen.add(ref)
                refs.append(ref)
        self.reference_ids = refs

    def to_json_dict(self) -> dict:
        out: dict = {
            "id": self.id,
            "title": self.title,
            "year": self.year,
            "reference_ids": list(self.reference_ids),
        }
        if self.venue is not None:
            out["venue"] = self.venue
        if self.authors is not None:
            out["authors"] = list(self.authors)
        if self.abstract is not None:
            out["abstract"] = self.abstract
        if self.global_citation_count is not None:
            out["global_citation_count"] = self.global_citation_count
        if self.source_tag is not None:
            out["source_tag"] = self.source_tag
        return out


@dataclass
class LoadReport:
    """Outcome of one ingest: how many records landed, which rows were rejected."""

    loaded: int = 0
    merged: int = 0
    rejected: list[tuple[int, str]] = field(default_factory=list)
    loaded_ids: list[str] = field(default_factory=list)
    changed_ids: list[str] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["line_number,reason"]
        for line_no, reason in self.rejected:
            lines.append(f"{line_no},{_csv_quote(reason)}")
        return "\n".join(lines) + "\n"


@dataclass
class EnrichmentReport:
    enriched: int = 0
    unmatched: list[str] = field(default_factory=list)
    skipped_rows: list[tuple[int, str]] = field(default_factory=list)
    enriched_ids: list[str] = field(default_factory=list)


def _csv_quote(value: str) -> str:
    if any(ch in value for ch in ",\"\n"):
        return '"' + value.replace('"', '""') + '"'
    return value


def _merge_records(first: ArticleRecord, second: ArticleRecord) -> ArticleRecord:
    """Merge two records with the same id.

    The record with the longer reference list wins (richer citation data);
    ties keep the first seen. The winner's empty optional fields are filled
    from the loser so no information is dropped.
    """
    if len(second.reference_ids) > len(first.reference_ids):
        winner, loser = second, first
    else:
        winner, loser = first, second
    return ArticleRecord(
        id=winner.id,
        title=winner.title or loser.title,
        year=winner.year if winner.year is not None else loser.year,
        reference_ids=list(winner.reference_ids),
        venue=winner.venue if winner.venue is not None else loser.venue,
        authors=winner.authors if winner.authors is not None else loser.authors,
        abstract=winner.abstract if winner.abstract is not None else loser.abstract,
        global_citation_count=(
            winner.global_citation_count
            if winner.global_citation_count is not None
            else loser.global_citation_count
        ),
        source_tag=winner.source_tag if winner.source_tag is not None else loser.source_tag,
    )


class RecordStore:
    """In-memory id -> record index with JSONL persistence.

    The persistent form is an append-only JSONL log; replaying the log applies
    each line as the current state of its id (later lines supersede earlier
    ones). Ingest-time duplicate merging happens before logging, so replays
    reproduce the merged store exactly.
    """

    def __init__(self) -> None:
        self._records: dict[str, ArticleRecord] = {}

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, pub_id: str) -> bool:
        return pub_id in self._records

    def get(self, pub_id: str) -> ArticleRecord | None:
        return self._records.get(pub_id)

    def ids(self) -> list[str]:
        return sorted(self._records)

    def records(self) -> list[ArticleRecord]:
        return [self._records[i] for i in self.ids()]

    def insert(self, record: ArticleRecord) -> bool:
        """Insert or merge a record. Returns True if the stored state changed."""
        existing = self._records.get(record.id)
        if existing is None:
            self._records[record.id] = record
            return True
        merged = _merge_records(existing, record)
        if merged.to_json_dict() == existing.to_json_dict():
            return False
        self._records[record.id] = merged
        return True

    def replace(self, record: ArticleRecord) -> None:
        """Overwrite the stored state of ``record.id`` (log replay, enrichment)."""
        self._records[record.id] = record

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for record in self.records():
                fh.write(json.dumps(record.to_json_dict(), sort_keys=True) + "\n")

    def append_records(self, path: str | Path, records: list[ArticleRecord]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record.to_json_dict(), sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "RecordStore":
        store = cls()
        path = Path(path)
        if not path.exists():
            return store
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record, _reason = _record_from_json_dict(json.loads(line))
                if record is not None:
                    store.replace(record)
        return store

    # -- ingestion -----------------------------------------------------------

    def ingest(self, source_path: str | Path, format: str) -> LoadReport:
        """Load records from a file in one of the supported formats.

        Rows missing essentials are rejected (reported, not fatal); duplicate
        ids are merged, longer reference list winning.
        """
        source_path = Path(source_path)
        if not source_path.exists():
            raise FormatError(f"unreadable file: {source_path}")
        if format == "jsonl":
            rows = _parse_jsonl(source_path)
        elif format == "dimensions-csv":
            rows = _parse_dimensions_csv(source_path)
        else:
            raise FormatError(f"unknown format: {format}")

        report = LoadReport()
        changed_seen: set[str] = set()
        for line_no, record, reason in rows:
            if record is None:
                report.rejected.append((line_no, reason or "invalid row"))
                continue
            known = record.id in self._records
            if self.insert(record) and record.id not in changed_seen:
                changed_seen.add(record.id)
                report.changed_ids.append(record.id)
            if known:
                report.merged += 1
            report.loaded += 1
            report.loaded_ids.append(record.id)
        return report

    def enrich_abstracts(self, enrichment_path: str | Path) -> EnrichmentReport:
        """Attach abstracts from an enrichment file (JSONL).

        Each row carries ``abstract`` plus either ``id`` or ``title``+``year``;
        title matching uses the same normalization as id derivation. Existing
        abstracts are never overwritten.
        """
        enrichment_path = Path(enrichment_path)
        if not enrichment_path.exists():
            raise FormatError(f"unreadable file: {enrichment_path}")

        by_title_year: dict[tuple[str, int | None], str] = {}
        for record in self._records.values():
            by_title_year.setdefault((normalize_title(record.title), record.year), record.id)

        report = EnrichmentReport()
        with open(enrichment_path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError:
                    report.skipped_rows.append((line_no, "not valid JSON"))
                    continue
                abstract = row.get("abstract")
                if not isinstance(abstract, str) or not abstract:
                    report.skipped_rows.append((line_no, "missing abstract"))
                    continue
                target: str | None = None
                if row.get("id"):
                    target = str(row["id"])
                elif row.get("title") and "year" in row:
                    year = row["year"] if isinstance(row["year"], int) else None
                    target = by_title_year.get((normalize_title(str(row["title"])), year))
                else:
                    report.skipped_rows.append((line_no, "needs id or title+year"))
                    continue
                record = self._records.get(target) if target else None
                if record is None:
                    report.unmatched.append(target if target else f"line {line_no}")
                    continue
                if not record.abstract:
                    record.abstract = abstract
                    report.enriched += 1
                    report.enriched_ids.append(record.id)
        return report


def _record_from_json_dict(row: dict) -> tuple[ArticleRecord | None, str | None]:
    """Build a record from a parsed JSONL row; (None, reason) when rejected."""
    if not isinstance(row, dict):
        return None, "row is not an object"
    raw_id = row.get("id")
    title = row.get("title")
    if "year" not in row:
        return None, "missing year"
    year = row.get("year")
    if year is not None and not isinstance(year, int):
        return None, "year is not an integer"
    if not raw_id:
        # No source id: derive one from title+year when possible.
        if not title:
            return None, "missing id"
        raw_id = canonical_id(str(title), year)
    if title is None:
        return None, "missing title"
    if "reference_ids" not in row or not isinstance(row["reference_ids"], list):
        return None, "missing reference_ids"
    gcc = row.get("global_citation_count")
    if gcc is not None and (not isinstance(gcc, int) or gcc < 0):
        return None, "global_citation_count must be a non-negative integer"
    try:
        record = ArticleRecord(
            id=str(raw_id),
            title=str(title),
            year=year,
            reference_ids=[str(r) for r in row["reference_ids"]],
            venue=row.get("venue"),
            authors=list(row["authors"]) if row.get("authors") is not None else None,
            abstract=row.get("abstract"),
            global_citation_count=gcc,
            source_tag=row.get("source_tag"),
        )
    except ValidationError as exc:
        return None, str(exc)
    return record, None


def _parse_jsonl(path: Path) -> list[tuple[int, ArticleRecord | None, str | None]]:
    rows: list[tuple[int, ArticleRecord | None, str | None]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                parsed = json.loads(line)
            except json.JSONDecodeError:
                rows.append((line_no, None, "not valid JSON"))
                continue
            record, reason = _record_from_json_dict(parsed)
            rows.append((line_no, record, reason))
    return rows


# Dimensions-style CSV: header-driven, these column names are the contract.
_CSV_ID = "Publication ID"
_CSV_TITLE = "Title"
_CSV_YEAR = "PubYear"
_CSV_REFS = "Cited references"
_CSV_TIMES_CITED = "Times cited"


def _parse_dimensions_csv(path: Path) -> list[tuple[int, ArticleRecord | None, str | None]]:
    rows: list[tuple[int, ArticleRecord | None, str | None]] = []
    with open(path, encoding="utf-8-sig", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for required in (_CSV_ID, _CSV_TITLE, _CSV_YEAR):
            if required not in header:
                raise FormatError(f"dimensions-csv missing required column: {required}")
        for line_no, row in enumerate(reader, start=2):
            raw: dict = {}
            raw_id = (row.get(_CSV_ID) or "").strip()
            title = (row.get(_CSV_TITLE) or "").strip()
            year_text = (row.get(_CSV_YEAR) or "").strip()
            if year_text:
                try:
                    raw["year"] = int(year_text)
                except ValueError:
                    rows.append((line_no, None, f"unparseable PubYear: {year_text!r}"))
                    continue
            else:
                raw["year"] = None
            if raw_id:
                raw["id"] = raw_id
            if title:
                raw["title"] = title
            refs_text = (row.get(_CSV_REFS) or "").strip()
            raw["reference_ids"] = [r.strip() for r in refs_text.split(";") if r.strip()]
            cited_text = (row.get(_CSV_TIMES_CITED) or "").strip()
            if cited_text:
                try:
                    raw["global_citation_count"] = int(cited_text)
                except ValueError:
                    rows.append((line_no, None, f"unparseable Times cited: {cited_text!r}"))
                    continue
            raw["source_tag"] = "dimensions-csv"
            record, reason = _record_from_json_dict(raw)
            rows.append((line_no, record, reason))
    return rows


# -- datasets ----------------------------------------------------------------


@dataclass
class Dataset:
    """A named set of article ids plus how it came to be."""

    name: str
    member_ids: set[str]
    provenance: dict = field(default_factory=dict)
    created_at: str | None = None

    def __len__(self) -> int:
        return len(self.member_ids)

    def to_json_dict(self) -> dict:
        out = {
            "name": self.name,
            "provenance": self.provenance,
            "member_ids": sorted(self.member_ids),
        }
        # created_at is optional metadata; leaving it unset keeps artifacts
        # byte-identical across re-runs.
        if self.created_at is not None:
            out["created_at"] = self.created_at
        return out

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "Dataset":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(
            name=data["name"],
            member_ids=set(data["member_ids"]),
            provenance=data.get("provenance", {}),
            created_at=data.get("created_at"),
        )


def dataset_union(datasets: list[Dataset], name: str) -> Dataset:
    """Union of one or more datasets; provenance records the input names."""
    if not datasets:
        raise ValidationError("dataset_union needs at least one input dataset")
    members: set[str] = set()
    for ds in datasets:
        members |= ds.member_ids
    return Dataset(
        name=name,
        member_ids=members,
        provenance={"kind": "union", "inputs": [ds.name for ds in datasets]},
    )


@dataclass
class YearDistribution:
    """Article counts per publication year, with an UNKNOWN bucket.

    ``range`` spans the min/max year with count > 0; unknown-year records sit
    in ``unknown`` and never affect the range. ``log_counts`` holds ln(1+count).
    """

    dataset_name: str
    counts: dict[int, int]
    unknown: int
    range: tuple[int, int] | None
    log_counts: dict[int, float]

    def total(self) -> int:
        return sum(self.counts.values()) + self.unknown


def year_distribution(dataset: Dataset, store: RecordStore) -> YearDistribution:
    if not dataset.member_ids:
        raise EmptyDatasetError(f"dataset {dataset.name!r} is empty; nothing to summarize")
    counts: dict[int, int] = {}
    unknown = 0
    for pub_id in dataset.member_ids:
        record = store.get(pub_id)
        if record is None or record.year is None:
            unknown += 1
            continue
        counts[record.year] = counts.get(record.year, 0) + 1
    year_range = (min(counts), max(counts)) if counts else None
    log_counts = {year: math.log1p(n) for year, n in counts.items()}
    return YearDistribution(
        dataset_name=dataset.name,
        counts=counts,
        unknown=unknown,
        range=year_range,
        log_counts=log_counts,
    )
