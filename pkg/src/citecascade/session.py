"""Session directory layout and configuration for the command-line pipeline.

A session holds everything one analysis produces::

    <session>/
      session.json   # configuration (round-trips losslessly)
      store.jsonl    # append-only record log
      datasets/ networks/ reports/ renders/ traces/

One command runs at a time per session, enforced with a lock file.
"""

from __future__ import annotations

import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from .clustering import ClusterPartition
from .cocitation import CoCitationNetwork, NetworkConfig
from .errors import CiteCascadeError, ValidationError
from .records import ArticleRecord, Dataset, RecordStore
from .render import RenderSpec

SUBDIRS = ("datasets", "networks", "reports", "renders", "traces")


@dataclass
class SessionConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    theta_citer: int = 10
    theta_ref: int = 10
    render: RenderSpec = field(default_factory=RenderSpec)

    def to_json_dict(self) -> dict:
        return {
            "network": self.network.to_json_dict(),
            "theta_citer": self.theta_citer,
            "theta_ref": self.theta_ref,
            "render": self.render.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SessionConfig":
        return cls(
            network=NetworkConfig.from_json_dict(data.get("network", {})),
            theta_citer=int(data.get("theta_citer", 10)),
            theta_ref=int(data.get("theta_ref", 10)),
            render=RenderSpec.from_json_dict(data.get("render", {})),
        )


class Session:
    """Filesystem wrapper for one analysis directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        for sub in SUBDIRS:
            (self.root / sub).mkdir(exist_ok=True)
        self.config = self._load_or_create_config()

    # -- config ---------------------------------------------------------------

    @property
    def config_path(self) -> Path:
        return self.root / "session.json"

    def _load_or_create_config(self) -> SessionConfig:
        if self.config_path.exists():
            with open(self.config_path, encoding="utf-8") as fh:
                return SessionConfig.from_json_dict(json.load(fh))
        config = SessionConfig()
        self.save_config(config)
        return config

    def save_config(self, config: SessionConfig) -> None:
        with open(self.config_path, "w", encoding="utf-8") as fh:
            json.dump(config.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    # -- locking ----------------------------------------------------------------

    @property
    def lock_path(self) -> Path:
        return self.root / ".lock"

    @contextmanager
    def lock(self):
        try:
            fd = os.open(self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ValidationError(
                f"session {self.root} is locked by another command (remove {self.lock_path} if stale)"
            ) from None
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            yield self
        finally:
            self.lock_path.unlink(missing_ok=True)

    # -- store --------------------------------------------------------------------

    @property
    def store_path(self) -> Path:
        return self.root / "store.jsonl"

    def load_store(self) -> RecordStore:
        return RecordStore.load(self.store_path)

    def append_store_delta(self, store: RecordStore, changed_ids: list[str]) -> None:
        records: list[ArticleRecord] = []
        seen: set[str] = set()
        for pub_id in changed_ids:
            if pub_id in seen:
                continue
            seen.add(pub_id)
            record = store.get(pub_id)
            if record is not None:
                records.append(record)
        if records:
            store.append_records(self.store_path, records)

    # -- datasets -------------------------------------------------------------------

    def dataset_path(self, name: str) -> Path:
        return self.root / "datasets" / f"{name}.json"

    def save_dataset(self, dataset: Dataset, overwrite: bool = True) -> Path:
        path = self.dataset_path(dataset.name)
        if path.exists() and not overwrite:
            raise ValidationError(f"dataset name already in session: {dataset.name}")
        dataset.save(path)
        return path

    def load_dataset(self, name: str) -> Dataset:
        path = self.dataset_path(name)
        if not path.exists():
            raise CiteCascadeError(f"no dataset named {name!r} in session")
        return Dataset.load(path)

    def dataset_names(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "datasets").glob("*.json"))

    # -- networks & partitions ---------------------------------------------------------

    def network_paths(self, name: str) -> tuple[Path, Path]:
        base = self.root / "networks"
        return base / f"{name}.graphml", base / f"{name}.json"

    def save_network(self, name: str, network: CoCitationNetwork) -> None:
        graphml_path, json_path = self.network_paths(name)
        graphml_path.write_text(network.to_graphml(), encoding="utf-8")
        json_path.write_text(network.to_json(), encoding="utf-8")

    def load_network(self, name: str) -> CoCitationNetwork:
        _graphml_path, json_path = self.network_paths(name)
        if not json_path.exists():
            raise CiteCascadeError(f"no network named {name!r} in session")
        return CoCitationNetwork.from_json(json_path.read_text(encoding="utf-8"))

    def network_names(self) -> list[str]:
        return sorted(
            p.stem
            for p in (self.root / "networks").glob("*.json")
            if not p.name.endswith(".clusters.json")
        )

    def clusters_path(self, name: str) -> Path:
        return self.root / "networks" / f"{name}.clusters.json"

    def save_clusters(self, name: str, payload: dict) -> None:
        with open(self.clusters_path(name), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def load_partition(self, name: str) -> ClusterPartition:
        path = self.clusters_path(name)
        if not path.exists():
            raise CiteCascadeError(
                f"no clustering for network {name!r}; run the cluster command first"
            )
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        return ClusterPartition.from_json_dict(payload["level1"])

    # -- simple path helpers ----------------------------------------------------------

    def report_path(self, filename: str) -> Path:
        return self.root / "reports" / filename

    def render_path(self, filename: str) -> Path:
        return self.root / "renders" / filename

    def trace_path(self, filename: str) -> Path:
        return self.root / "traces" / filename
