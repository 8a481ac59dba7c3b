"""Time-sliced document co-citation networks.

Dataset members act as citers; the references they cite become network nodes.
Per year slice, the top-N most cited citers are selected; each selected citer
contributes the unordered pairs of its references that pass the look-back
filter. Edge weight counts distinct co-citing citers; each edge remembers the
earliest year it was co-cited. A link-to-node-ratio bound prunes the weakest
edges of the merged network.
"""

from __future__ import annotations

import json
import math
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

from .errors import EmptyDatasetError, ValidationError
from .records import Dataset
from .sources import CitationSnapshot


@dataclass
class NetworkConfig:
    """Knobs for network construction.

    ``lby`` (look-back years) bounds how much older than its citer a reference
    may be to participate; None disables the bound. ``e_param`` is recorded
    for configuration fidelity but plays no role in construction.
    """

    lrf: float = 4.0
    lby: int | None = 10
    min_citations: int = 1
    top_n: int = 100
    slice_years: int = 1
    e_param: float | None = None

    def __post_init__(self) -> None:
        if self.lrf <= 0:
            raise ValidationError("lrf must be positive")
        if self.lby is not None and self.lby < 1:
            raise ValidationError("lby must be >= 1 when set")
        if self.top_n < 1 or self.slice_years < 1:
            raise ValidationError("top_n and slice_years must be >= 1")

    def to_json_dict(self) -> dict:
        return {
            "lrf": self.lrf,
            "lby": self.lby,
            "min_citations": self.min_citations,
            "top_n": self.top_n,
            "slice_years": self.slice_years,
            "e_param": self.e_param,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "NetworkConfig":
        return cls(
            lrf=float(data.get("lrf", 4.0)),
            lby=data.get("lby", 10),
            min_citations=int(data.get("min_citations", 1)),
            top_n=int(data.get("top_n", 100)),
            slice_years=int(data.get("slice_years", 1)),
            e_param=data.get("e_param"),
        )


class NodeInfo(NamedTuple):
    count: int  # citations within the dataset
    year: int  # first year cited within the dataset


class EdgeInfo(NamedTuple):
    weight: int
    first_cocited_year: int


@dataclass
class SliceInfo:
    start: int
    end: int
    citer_ids: list[str]


def canonical_pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


class CoCitationNetwork:
    """Weighted undirected network over cited references.

    Equality compares the node and edge maps (the structural content);
    config and slice metadata ride along for provenance.
    """

    def __init__(
        self,
        nodes: dict[str, NodeInfo],
        edges: dict[tuple[str, str], EdgeInfo],
        config: NetworkConfig,
        slices: list[SliceInfo] | None = None,
    ):
        self.nodes = nodes
        self.edges = edges
        self.config = config
        self.slices = slices or []

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoCitationNetwork):
            return NotImplemented
        return self.nodes == other.nodes and self.edges == other.edges

    def __len__(self) -> int:
        return len(self.nodes)

    def neighbors(self, node: str) -> list[str]:
        out = []
        for (a, b) in self.edges:
            if a == node:
                out.append(b)
            elif b == node:
                out.append(a)
        return sorted(out)

    def adjacency(self) -> dict[str, dict[str, float]]:
        adj: dict[str, dict[str, float]] = {n: {} for n in self.nodes}
        for (a, b), info in self.edges.items():
            adj[a][b] = float(info.weight)
            adj[b][a] = float(info.weight)
        return adj

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "config": self.config.to_json_dict(),
            "nodes": [
                {"id": n, "count": info.count, "year": info.year}
                for n, info in sorted(self.nodes.items())
            ],
            "edges": [
                {
                    "source": a,
                    "target": b,
                    "weight": info.weight,
                    "first_cocited_year": info.first_cocited_year,
                }
                for (a, b), info in sorted(self.edges.items())
            ],
            "slices": [
                {"start": s.start, "end": s.end, "citers": list(s.citer_ids)} for s in self.slices
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json_dict(cls, data: dict) -> "CoCitationNetwork":
        nodes = {n["id"]: NodeInfo(int(n["count"]), int(n["year"])) for n in data["nodes"]}
        edges = {
            canonical_pair(e["source"], e["target"]): EdgeInfo(
                int(e["weight"]), int(e["first_cocited_year"])
            )
            for e in data["edges"]
        }
        slices = [
            SliceInfo(int(s["start"]), int(s["end"]), list(s["citers"]))
            for s in data.get("slices", [])
        ]
        return cls(nodes, edges, NetworkConfig.from_json_dict(data.get("config", {})), slices)

    @classmethod
    def from_json(cls, text: str) -> "CoCitationNetwork":
        return cls.from_json_dict(json.loads(text))

    def to_graphml(self) -> str:
        root = ET.Element("graphml", {"xmlns": "http://graphml.graphdrawing.org/xmlns"})
        for key_id, target, name, attr_type in (
            ("d0", "node", "count", "int"),
            ("d1", "node", "year", "int"),
            ("d2", "edge", "weight", "double"),
            ("d3", "edge", "first_cocited_year", "int"),
            ("d4", "graph", "config", "string"),
        ):
            ET.SubElement(
                root,
                "key",
                {"id": key_id, "for": target, "attr.name": name, "attr.type": attr_type},
            )
        graph = ET.SubElement(root, "graph", {"id": "cocitation", "edgedefault": "undirected"})
        config_data = ET.SubElement(graph, "data", {"key": "d4"})
        config_data.text = json.dumps(self.config.to_json_dict(), sort_keys=True)
        for node_id, info in sorted(self.nodes.items()):
            node_el = ET.SubElement(graph, "node", {"id": node_id})
            ET.SubElement(node_el, "data", {"key": "d0"}).text = str(info.count)
            ET.SubElement(node_el, "data", {"key": "d1"}).text = str(info.year)
        for (a, b), info in sorted(self.edges.items()):
            edge_el = ET.SubElement(graph, "edge", {"source": a, "target": b})
            ET.SubElement(edge_el, "data", {"key": "d2"}).text = str(info.weight)
            ET.SubElement(edge_el, "data", {"key": "d3"}).text = str(info.first_cocited_year)
        ET.indent(root)
        return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"

    @classmethod
    def from_graphml(cls, text: str) -> "CoCitationNetwork":
        def local(tag: str) -> str:
            return tag.rsplit("}", 1)[-1]

        root = ET.fromstring(text)
        key_names: dict[str, str] = {}
        graph_el = None
        for child in root:
            if local(child.tag) == "key":
                key_names[child.attrib["id"]] = child.attrib.get("attr.name", child.attrib["id"])
            elif local(child.tag) == "graph":
                graph_el = child
        if graph_el is None:
            raise ValidationError("graphml has no <graph> element")

        def data_of(el) -> dict[str, str]:
            return {
                key_names.get(d.attrib["key"], d.attrib["key"]): (d.text or "")
                for d in el
                if local(d.tag) == "data"
            }

        config = NetworkConfig()
        nodes: dict[str, NodeInfo] = {}
        edges: dict[tuple[str, str], EdgeInfo] = {}
        graph_data = data_of(graph_el)
        if graph_data.get("config"):
            config = NetworkConfig.from_json_dict(json.loads(graph_data["config"]))
        for el in graph_el:
            tag = local(el.tag)
            if tag == "node":
                values = data_of(el)
                nodes[el.attrib["id"]] = NodeInfo(int(values["count"]), int(values["year"]))
            elif tag == "edge":
                values = data_of(el)
                pair = canonical_pair(el.attrib["source"], el.attrib["target"])
                edges[pair] = EdgeInfo(int(values["weight"]), int(values["first_cocited_year"]))
        return cls(nodes, edges, config)


# -- construction --------------------------------------------------------------


def slice_citers(
    dataset: Dataset, snapshot: CitationSnapshot, config: NetworkConfig
) -> list[tuple[tuple[int, int], list[str]]]:
    """Partition the dataset into year slices and pick each slice's top citers.

    Members without a year cannot be placed in a slice and are skipped with a
    warning. Within a slice, citers at or above ``min_citations`` are ranked
    by citation count descending (ties: id ascending); the top_n survive.
    """
    if not dataset.member_ids:
        raise EmptyDatasetError(f"dataset {dataset.name!r} is empty")
    years: dict[str, int] = {}
    skipped = 0
    for pub_id in dataset.member_ids:
        record = snapshot.record(pub_id) if pub_id in snapshot else None
        if record is None or record.year is None:
            skipped += 1
            continue
        years[pub_id] = record.year
    if skipped:
        warnings.warn(f"{skipped} dataset member(s) without a usable year skipped", stacklevel=2)
    if not years:
        return []

    lo, hi = min(years.values()), max(years.values())
    slices: list[tuple[tuple[int, int], list[str]]] = []
    start = lo
    while start <= hi:
        end = start + config.slice_years - 1
        members = [p for p, y in years.items() if start <= y <= end]
        qualified = [p for p in members if snapshot.citation_count(p) >= config.min_citations]
        ranked = sorted(qualified, key=lambda p: (-snapshot.citation_count(p), p))
        selected = ranked[: config.top_n]
        if members:
            slices.append(((start, end), selected))
        start = end + 1
    return slices


def cocite_pairs(
    citer_id: str, snapshot: CitationSnapshot, config: NetworkConfig
) -> set[tuple[str, str]]:
    """Unordered reference pairs a citer contributes, after the look-back filter.

    A reference participates only when its year is known, not after the
    citer's, and within ``lby`` years before it.
    """
    citer = snapshot.record(citer_id)
    if citer.year is None:
        return set()
    eligible = []
    for ref in snapshot.get_references(citer_id):
        ref_year = snapshot.record(ref).year
        if ref_year is None or ref_year > citer.year:
            continue
        if config.lby is not None and citer.year - ref_year > config.lby:
            continue
        eligible.append(ref)
    return {canonical_pair(a, b) for a, b in combinations(sorted(eligible), 2)}


def _count_pairs(citers: list[str], snapshot: CitationSnapshot, config: NetworkConfig):
    pair_weight: dict[tuple[str, str], int] = {}
    pair_year: dict[tuple[str, str], int] = {}
    for citer_id in citers:
        citer_year = snapshot.record(citer_id).year
        for pair in cocite_pairs(citer_id, snapshot, config):
            pair_weight[pair] = pair_weight.get(pair, 0) + 1
            if pair not in pair_year or citer_year < pair_year[pair]:
                pair_year[pair] = citer_year
    return pair_weight, pair_year


def build_network(
    dataset: Dataset,
    snapshot: CitationSnapshot,
    config: NetworkConfig,
    per_slice_prune: bool = False,
) -> CoCitationNetwork:
    """Aggregate co-citation pairs over all selected citers, then prune.

    Edge weight = number of distinct citers co-citing the pair;
    first_cocited_year = earliest such citer's year. Node attributes count
    citations from all dataset members (not just selected citers).

    Pruning is global by default (one link-to-node ratio for the merged
    network). ``per_slice_prune`` instead bounds each slice's pair set by
    lrf x (that slice's node count) before merging, for per-slice parity
    experiments; no global prune follows.
    """
    if not dataset.member_ids:
        raise EmptyDatasetError(f"dataset {dataset.name!r} is empty")
    slices = slice_citers(dataset, snapshot, config)

    pair_weight: dict[tuple[str, str], int] = {}
    pair_year: dict[tuple[str, str], int] = {}
    if per_slice_prune:
        for (_interval, citers) in slices:
            slice_weight, slice_year = _count_pairs(citers, snapshot, config)
            slice_nodes = {n for pair in slice_weight for n in pair}
            bound = math.floor(config.lrf * len(slice_nodes))
            ranked = sorted(
                slice_weight.items(),
                key=lambda item: (-item[1], slice_year[item[0]], item[0]),
            )
            for pair, weight in ranked[:bound]:
                pair_weight[pair] = pair_weight.get(pair, 0) + weight
                if pair not in pair_year or slice_year[pair] < pair_year[pair]:
                    pair_year[pair] = slice_year[pair]
    else:
        for (_interval, citers) in slices:
            slice_weight, slice_year = _count_pairs(citers, snapshot, config)
            for pair, weight in slice_weight.items():
                pair_weight[pair] = pair_weight.get(pair, 0) + weight
                if pair not in pair_year or slice_year[pair] < pair_year[pair]:
                    pair_year[pair] = slice_year[pair]

    if not pair_weight:
        warnings.warn(f"dataset {dataset.name!r} produced no co-citation pairs", stacklevel=2)
        return CoCitationNetwork({}, {}, config, [SliceInfo(s[0][0], s[0][1], s[1]) for s in slices])

    node_ids = {n for pair in pair_weight for n in pair}
    node_count: dict[str, int] = {n: 0 for n in node_ids}
    node_first: dict[str, int | None] = {n: None for n in node_ids}
    for member_id in sorted(dataset.member_ids):
        if member_id not in snapshot:
            continue
        member = snapshot.record(member_id)
        for ref in member.reference_ids:
            if ref in node_ids:
                node_count[ref] += 1
                if member.year is not None and (
                    node_first[ref] is None or member.year < node_first[ref]
                ):
                    node_first[ref] = member.year

    nodes = {
        n: NodeInfo(node_count[n], node_first[n] if node_first[n] is not None else 0)
        for n in node_ids
    }
    edges = {pair: EdgeInfo(pair_weight[pair], pair_year[pair]) for pair in pair_weight}
    network = CoCitationNetwork(
        nodes, edges, config, [SliceInfo(s[0][0], s[0][1], s[1]) for s in slices]
    )
    if per_slice_prune:
        return network
    return prune_links(network, config.lrf)


def normalize_weights(network: CoCitationNetwork, method: str = "cosine") -> CoCitationNetwork:
    """Optional post-pass: replace raw co-citation counts with a normalized strength.

    cosine: w / sqrt(count_a * count_b); dice: 2w / (count_a + count_b), with
    counts taken from the nodes' within-dataset citation counts. Raw counts
    stay the default everywhere; this exists for similarity-style analyses.
    """
    if method not in ("cosine", "dice"):
        raise ValidationError(f"unknown normalization: {method}")
    edges: dict[tuple[str, str], EdgeInfo] = {}
    for (a, b), info in network.edges.items():
        count_a = network.nodes[a].count
        count_b = network.nodes[b].count
        if method == "cosine":
            denominator = math.sqrt(count_a * count_b)
        else:
            denominator = (count_a + count_b) / 2.0
        weight = info.weight / denominator if denominator > 0 else 0.0
        edges[(a, b)] = EdgeInfo(weight, info.first_cocited_year)
    return CoCitationNetwork(dict(network.nodes), edges, network.config, list(network.slices))


def prune_links(network: CoCitationNetwork, lrf: float | None = None) -> CoCitationNetwork:
    """Keep at most floor(lrf × |nodes|) strongest edges.

    Strength order: weight descending, then earlier first co-citation year,
    then lexicographic pair. Nodes isolated by pruning stay in the network.
    """
    ratio = network.config.lrf if lrf is None else lrf
    bound = math.floor(ratio * len(network.nodes))
    if len(network.edges) <= bound:
        return CoCitationNetwork(
            dict(network.nodes), dict(network.edges), network.config, list(network.slices)
        )
    ranked = sorted(
        network.edges.items(),
        key=lambda item: (-item[1].weight, item[1].first_cocited_year, item[0]),
    )
    kept = dict(ranked[:bound])
    return CoCitationNetwork(dict(network.nodes), kept, network.config, list(network.slices))


# -- component analysis ---------------------------------------------------------


def connected_components_traversal(network: CoCitationNetwork) -> list[set[str]]:
    """Components by breadth-first traversal; isolated nodes are singletons."""
    adj = network.adjacency()
    seen: set[str] = set()
    components: list[set[str]] = []
    for start in sorted(network.nodes):
        if start in seen:
            continue
        component = {start}
        queue = [start]
        seen.add(start)
        while queue:
            current = queue.pop()
            for neighbor in adj[current]:
                if neighbor not in seen:
                    seen.add(neighbor)
                    component.add(neighbor)
                    queue.append(neighbor)
        components.append(component)
    return components


class _DisjointSet:
    def __init__(self, items: list[str]):
        self.parent = {x: x for x in items}
        self.rank = {x: 0 for x in items}

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1


def connected_components_union_find(network: CoCitationNetwork) -> list[set[str]]:
    """Components by disjoint-set union; independent check on the traversal."""
    dsu = _DisjointSet(sorted(network.nodes))
    for (a, b) in network.edges:
        dsu.union(a, b)
    groups: dict[str, set[str]] = {}
    for node in network.nodes:
        groups.setdefault(dsu.find(node), set()).add(node)
    return list(groups.values())


def round_half_up(value: float) -> int:
    return math.floor(value + 0.5)


def largest_connected_component(
    network: CoCitationNetwork, method: str = "traversal"
) -> tuple[set[str], int]:
    """The LCC node set and its share of the network, rounded to integer percent."""
    if not network.nodes:
        raise ValidationError("network is empty")
    if method == "traversal":
        components = connected_components_traversal(network)
    elif method == "union-find":
        components = connected_components_union_find(network)
    else:
        raise ValidationError(f"unknown LCC method: {method}")
    # Deterministic pick: size first, then smallest member id.
    best = sorted(components, key=lambda c: (-len(c), min(c)))[0]
    percentage = round_half_up(100.0 * len(best) / len(network.nodes))
    return best, percentage


@dataclass
class NetworkStats:
    nodes: int
    edges: int
    lcc_size: int
    lcc_pct: int  # round-half-up, as printed in reports
    lcc_pct_floor: int  # truncated variant, reported alongside
    density: float


def network_stats(network: CoCitationNetwork) -> NetworkStats:
    n, m = len(network.nodes), len(network.edges)
    if n == 0:
        return NetworkStats(0, 0, 0, 0, 0, 0.0)
    lcc, pct = largest_connected_component(network)
    exact = 100.0 * len(lcc) / n
    density = (2.0 * m / (n * (n - 1))) if n > 1 else 0.0
    return NetworkStats(n, m, len(lcc), pct, math.floor(exact), density)
