"""Static SVG visuals: network maps, overlay panels, year-distribution charts.

Everything here is a pure function of its inputs: layouts run a fixed
iteration budget from seed-derived starting positions, coordinates are
emitted with fixed precision, and element order is canonical, so identical
inputs produce byte-identical documents.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np

from .clustering import ClusterPartition
from .cocitation import CoCitationNetwork, connected_components_traversal
from .errors import ValidationError
from .overlay import OverlayProjection
from .records import YearDistribution

YEAR_PALETTE = ["#2c7bb6", "#00a6ca", "#90eb9d", "#ffff8c", "#f9d057", "#d7191c"]
DATASET_PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
]


@dataclass
class RenderSpec:
    seed: int = 42
    year_palette: list[str] = field(default_factory=lambda: list(YEAR_PALETTE))
    dataset_palette: list[str] = field(default_factory=lambda: list(DATASET_PALETTE))
    node_radius: tuple[float, float] = (2.5, 12.0)
    label_top_k: int = 5
    overlay_mode: str = "auto"  # auto | blend | small-multiple

    def __post_init__(self) -> None:
        if len(self.year_palette) < 2 or len(self.dataset_palette) < 2:
            raise ValidationError("palettes need at least 2 colors")
        if self.overlay_mode not in ("auto", "blend", "small-multiple"):
            raise ValidationError(f"unknown overlay mode: {self.overlay_mode}")

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "year_palette": list(self.year_palette),
            "dataset_palette": list(self.dataset_palette),
            "node_radius": list(self.node_radius),
            "label_top_k": self.label_top_k,
            "overlay_mode": self.overlay_mode,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "RenderSpec":
        return cls(
            seed=int(data.get("seed", 42)),
            year_palette=list(data.get("year_palette", YEAR_PALETTE)),
            dataset_palette=list(data.get("dataset_palette", DATASET_PALETTE)),
            node_radius=tuple(data.get("node_radius", (2.5, 12.0))),
            label_top_k=int(data.get("label_top_k", 5)),
            overlay_mode=data.get("overlay_mode", "auto"),
        )


def scale_year_color(year: int, lo: int, hi: int, palette: list[str]) -> str:
    """Map a year onto an ordered palette anchored at the range ends."""
    if hi <= lo:
        return palette[0]
    fraction = (year - lo) / (hi - lo)
    return palette[round(fraction * (len(palette) - 1))]


def blend_colors(colors: list[str]) -> str:
    if not colors:
        return "#c8c8c8"
    channels = [(int(c[1:3], 16), int(c[3:5], 16), int(c[5:7], 16)) for c in colors]
    mixed = [round(sum(ch) / len(ch)) for ch in zip(*channels)]
    return "#{:02x}{:02x}{:02x}".format(*mixed)


# -- layout ----------------------------------------------------------------------

LAYOUT_ITERATIONS = 50


def layout(network: CoCitationNetwork, seed: int) -> dict[str, tuple[float, float]]:
    """Seeded force-directed positions with disconnected components separated.

    Fixed iteration budget; identical network+seed gives identical positions.
    """
    node_ids = sorted(network.nodes)
    if not node_ids:
        raise ValidationError("cannot lay out an empty network")
    if len(node_ids) == 1:
        return {node_ids[0]: (0.0, 0.0)}

    index = {n: i for i, n in enumerate(node_ids)}
    n = len(node_ids)
    rng = np.random.default_rng(seed)
    positions = rng.uniform(0.0, 1.0, size=(n, 2))

    adjacency = np.zeros((n, n))
    for (a, b), info in network.edges.items():
        adjacency[index[a], index[b]] = info.weight
        adjacency[index[b], index[a]] = info.weight
    if adjacency.max() > 0:
        adjacency = adjacency / adjacency.max()

    k = float(np.sqrt(1.0 / n))
    temperature = 0.1
    cooling = temperature / (LAYOUT_ITERATIONS + 1)
    for _ in range(LAYOUT_ITERATIONS):
        delta = positions[:, None, :] - positions[None, :, :]
        distance = np.linalg.norm(delta, axis=-1)
        np.clip(distance, 0.01, None, out=distance)
        force = k * k / distance**2 - adjacency * distance / k
        displacement = np.einsum("ijk,ij->ik", delta, force)
        length = np.linalg.norm(displacement, axis=-1)
        np.clip(length, 0.01, None, out=length)
        positions += displacement / length[:, None] * np.minimum(length, temperature)[:, None]
        temperature -= cooling

    # Separation pass: shift whole components so bounding boxes cannot overlap.
    components = sorted(
        connected_components_traversal(network), key=lambda c: (-len(c), min(c))
    )
    if len(components) > 1:
        cursor = 0.0
        for component in components:
            idxs = np.array(sorted(index[m] for m in component), dtype=int)
            block = positions[idxs]
            lo = block.min(axis=0)
            span = block.max(axis=0) - lo
            margin = 0.2 * max(float(span[0]), float(span[1]), k)
            positions[idxs, 0] = block[:, 0] - lo[0] + cursor
            positions[idxs, 1] = block[:, 1] - lo[1]
            cursor += float(span[0]) + margin

    return {node: (float(positions[index[node], 0]), float(positions[index[node], 1])) for node in node_ids}


# -- SVG helpers -----------------------------------------------------------------

_SVG_NS = "http://www.w3.org/2000/svg"


def _svg_root(width: float, height: float) -> ET.Element:
    return ET.Element(
        "svg",
        {
            "xmlns": _SVG_NS,
            "width": f"{width:.0f}",
            "height": f"{height:.0f}",
            "viewBox": f"0 0 {width:.0f} {height:.0f}",
        },
    )


def _to_document(root: ET.Element) -> str:
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"


def wrap_html(svg_document: str, title: str = "network map") -> str:
    """Self-contained HTML: the SVG inline, tooltips via its <title> elements."""
    body = svg_document.split("?>", 1)[-1].strip()
    return (
        "<!DOCTYPE html>\n<html>\n<head>\n"
        f"<meta charset=\"utf-8\"/>\n<title>{title}</title>\n"
        "</head>\n<body>\n" + body + "\n</body>\n</html>\n"
    )


def _fit_positions(
    positions: dict[str, tuple[float, float]], width: float, height: float, pad: float
) -> dict[str, tuple[float, float]]:
    xs = [p[0] for p in positions.values()]
    ys = [p[1] for p in positions.values()]
    lo_x, hi_x = min(xs), max(xs)
    lo_y, hi_y = min(ys), max(ys)
    span_x = (hi_x - lo_x) or 1.0
    span_y = (hi_y - lo_y) or 1.0
    return {
        node: (
            pad + (x - lo_x) / span_x * (width - 2 * pad),
            pad + (y - lo_y) / span_y * (height - 2 * pad),
        )
        for node, (x, y) in positions.items()
    }


def _node_radii(network: CoCitationNetwork, spec: RenderSpec) -> dict[str, float]:
    counts = {n: info.count for n, info in network.nodes.items()}
    hi = max(counts.values()) if counts else 1
    lo_r, hi_r = spec.node_radius
    radii = {}
    for node, count in counts.items():
        fraction = (count / hi) ** 0.5 if hi > 0 else 0.0
        radii[node] = lo_r + fraction * (hi_r - lo_r)
    return radii


def _draw_panel(
    parent: ET.Element,
    network: CoCitationNetwork,
    fitted: dict[str, tuple[float, float]],
    radii: dict[str, float],
    node_fill,
    spec: RenderSpec,
    partition: ClusterPartition | None,
    offset_x: float = 0.0,
) -> None:
    year_lo = min((e.first_cocited_year for e in network.edges.values()), default=0)
    year_hi = max((e.first_cocited_year for e in network.edges.values()), default=0)
    edges_group = ET.SubElement(parent, "g", {"class": "edges", "stroke-opacity": "0.5"})
    for (a, b), info in sorted(network.edges.items()):
        xa, ya = fitted[a]
        xb, yb = fitted[b]
        color = scale_year_color(info.first_cocited_year, year_lo, year_hi, spec.year_palette)
        ET.SubElement(
            edges_group,
            "line",
            {
                "x1": f"{xa + offset_x:.2f}",
                "y1": f"{ya:.2f}",
                "x2": f"{xb + offset_x:.2f}",
                "y2": f"{yb:.2f}",
                "stroke": color,
                "stroke-width": f"{0.5 + 0.5 * info.weight ** 0.5:.2f}",
            },
        )
    nodes_group = ET.SubElement(parent, "g", {"class": "nodes"})
    for node in sorted(network.nodes):
        x, y = fitted[node]
        circle = ET.SubElement(
            nodes_group,
            "circle",
            {
                "cx": f"{x + offset_x:.2f}",
                "cy": f"{y:.2f}",
                "r": f"{radii[node]:.2f}",
                "fill": node_fill(node),
            },
        )
        info = network.nodes[node]
        ET.SubElement(circle, "title").text = f"{node} (cited {info.count}x, first {info.year})"
    if partition is not None:
        labels_group = ET.SubElement(parent, "g", {"class": "labels", "font-size": "12"})
        clusters = partition.clusters()
        order = sorted(range(len(clusters)), key=lambda i: -len(clusters[i]))
        for cluster_index in order[: spec.label_top_k]:
            members = clusters[cluster_index]
            placed = [fitted[m] for m in members if m in fitted]
            if not placed:
                continue
            cx = sum(p[0] for p in placed) / len(placed)
            cy = sum(p[1] for p in placed) / len(placed)
            label = partition.labels.get(cluster_index, "")
            text = ET.SubElement(
                labels_group,
                "text",
                {"x": f"{cx + offset_x:.2f}", "y": f"{cy:.2f}", "text-anchor": "middle"},
            )
            text.text = f"#{cluster_index} {label}".rstrip()


def render_map(
    network: CoCitationNetwork,
    partition: ClusterPartition | None = None,
    projection: OverlayProjection | None = None,
    spec: RenderSpec | None = None,
    positions: dict[str, tuple[float, float]] | None = None,
) -> str:
    """Draw the network: nodes sized by citation count, edges colored by the
    first co-citation year, cluster labels at centroids.

    With a projection, nodes are colored by dataset membership; three or more
    datasets default to small multiples (one panel per dataset, shared layout).
    """
    if not network.nodes:
        raise ValidationError("cannot render an empty network")
    spec = spec or RenderSpec()
    positions = positions or layout(network, spec.seed)
    width, height, pad = 800.0, 600.0, 30.0
    fitted = _fit_positions(positions, width, height, pad)
    radii = _node_radii(network, spec)

    palette = spec.dataset_palette

    def cluster_fill(node: str) -> str:
        if partition is None:
            return "#4878a8"
        return palette[partition.assignment.get(node, 0) % len(palette)]

    if projection is None:
        root = _svg_root(width, height)
        _draw_panel(root, network, fitted, radii, cluster_fill, spec, partition)
        return _to_document(root)

    names = projection.dataset_names
    mode = spec.overlay_mode
    if mode == "auto":
        mode = "small-multiple" if len(names) >= 3 else "blend"

    if mode == "blend":
        def overlay_fill(node: str) -> str:
            bits = projection.membership.get(node, ())
            colors = [palette[i % len(palette)] for i, bit in enumerate(bits) if bit]
            return blend_colors(colors)

        root = _svg_root(width, height)
        _draw_panel(root, network, fitted, radii, overlay_fill, spec, partition)
        return _to_document(root)

    root = _svg_root(width * len(names), height)
    for panel, name in enumerate(names):
        color = palette[panel % len(palette)]

        def panel_fill(node: str, _pos: int = panel, _color: str = color) -> str:
            bits = projection.membership.get(node, ())
            return _color if len(bits) > _pos and bits[_pos] else "#d9d9d9"

        group = ET.SubElement(root, "g", {"class": f"panel-{name}"})
        caption = ET.SubElement(
            group,
            "text",
            {"x": f"{panel * width + pad:.2f}", "y": "18", "font-size": "14"},
        )
        caption.text = name
        _draw_panel(group, network, fitted, radii, panel_fill, spec, partition, offset_x=panel * width)
    return _to_document(root)


def render_distribution(
    distributions: list[YearDistribution], log: bool = False, spec: RenderSpec | None = None
) -> str:
    """Multi-series line chart of articles per year (optionally ln(1+count))."""
    if not distributions:
        raise ValidationError("need at least one distribution")
    spec = spec or RenderSpec()
    ranges = [d.range for d in distributions if d.range is not None]
    if not ranges:
        raise ValidationError("no distribution has any dated articles")
    lo = min(r[0] for r in ranges)
    hi = max(r[1] for r in ranges)

    def value(dist: YearDistribution, year: int) -> float:
        if log:
            return dist.log_counts.get(year, 0.0)
        return float(dist.counts.get(year, 0))

    peak = max(value(d, y) for d in distributions for y in range(lo, hi + 1)) or 1.0
    width, height, pad = 720.0, 360.0, 40.0
    root = _svg_root(width, height)
    axes = ET.SubElement(root, "g", {"class": "axes", "stroke": "#333333"})
    ET.SubElement(axes, "line", {
        "x1": f"{pad:.2f}", "y1": f"{height - pad:.2f}",
        "x2": f"{width - pad:.2f}", "y2": f"{height - pad:.2f}",
    })
    ET.SubElement(axes, "line", {
        "x1": f"{pad:.2f}", "y1": f"{pad:.2f}", "x2": f"{pad:.2f}", "y2": f"{height - pad:.2f}",
    })

    def x_of(year: int) -> float:
        if hi == lo:
            return width / 2.0
        return pad + (year - lo) / (hi - lo) * (width - 2 * pad)

    def y_of(v: float) -> float:
        return height - pad - (v / peak) * (height - 2 * pad)

    series_group = ET.SubElement(root, "g", {"class": "series", "fill": "none"})
    for i, dist in enumerate(distributions):
        color = spec.dataset_palette[i % len(spec.dataset_palette)]
        points = " ".join(f"{x_of(y):.2f},{y_of(value(dist, y)):.2f}" for y in range(lo, hi + 1))
        ET.SubElement(series_group, "polyline", {"points": points, "stroke": color})

    labels = ET.SubElement(root, "g", {"class": "axis-labels", "font-size": "11"})
    ET.SubElement(labels, "text", {"x": f"{pad:.2f}", "y": f"{height - pad + 16:.2f}"}).text = str(lo)
    end_label = ET.SubElement(
        labels, "text", {"x": f"{width - pad:.2f}", "y": f"{height - pad + 16:.2f}",
                         "text-anchor": "end"}
    )
    end_label.text = str(hi)
    y_caption = ET.SubElement(labels, "text", {"x": f"{pad:.2f}", "y": f"{pad - 8:.2f}"})
    y_caption.text = ("ln(1+articles)" if log else "articles") + f" (max {peak:g})"

    legend = ET.SubElement(root, "g", {"class": "legend", "font-size": "11"})
    for i, dist in enumerate(distributions):
        color = spec.dataset_palette[i % len(spec.dataset_palette)]
        y = pad + 14 * i
        ET.SubElement(legend, "rect", {
            "x": f"{width - pad - 110:.2f}", "y": f"{y - 9:.2f}",
            "width": "10", "height": "10", "fill": color,
        })
        entry = ET.SubElement(
            legend, "text", {"x": f"{width - pad - 96:.2f}", "y": f"{y:.2f}"}
        )
        entry.text = dist.dataset_name
    return _to_document(root)
