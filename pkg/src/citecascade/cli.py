"""Command-line pipeline: ingest -> search/expand -> network -> cluster -> compare -> render.

All commands operate inside a session directory (``--session``, default
``./session``) and are re-runnable: identical inputs overwrite their outputs
byte-identically. Errors print a single machine-parseable line to stderr;
exit codes: 0 ok, 2 bad command line, 3 validation failure, 4 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from . import clustering, labeling
from .cocitation import NetworkConfig, build_network, network_stats
from .errors import CiteCascadeError, EmptyDatasetError, ValidationError
from .expansion import ExpansionSpec, ExpansionStage, run_cascade, trace_report
from .overlay import OverlayProjection, coverage_report, overlap_matrix, project_overlay
from .records import Dataset, RecordStore, dataset_union, year_distribution
from .render import layout, render_distribution, render_map, wrap_html
from .session import Session
from .sources import CitationSnapshot, SourceQuery

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_DATA = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # single-line, machine-parseable
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="citecascade", description=__doc__)
    parser.add_argument("--session", default="session", help="session directory (default: ./session)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load records from a file into the session store")
    p.add_argument("path")
    p.add_argument("--format", choices=["jsonl", "dimensions-csv"], default="jsonl")
    p.add_argument("--dataset", help="also register the loaded ids as a named dataset")

    p = sub.add_parser("enrich", help="attach abstracts from an enrichment file")
    p.add_argument("path")

    p = sub.add_parser("search", help="phrase or id search over the snapshot")
    p.add_argument("--name", required=True, help="name for the result dataset")
    p.add_argument("--phrase", action="append", default=[], help="repeatable; OR-combined")
    p.add_argument(
        "--kind",
        choices=["phrase-in-fulltext-proxy", "phrase-in-title-abstract", "id-lookup"],
        default="phrase-in-title-abstract",
    )

    p = sub.add_parser("union", help="union existing datasets into a new one")
    p.add_argument("--name", required=True)
    p.add_argument("--datasets", required=True, help="comma-separated dataset names")

    p = sub.add_parser("expand", help="run a staged citation-cascade expansion")
    p.add_argument("--name", required=True, help="name for the result dataset")
    p.add_argument("--spec", help="expansion spec file (JSON)")
    p.add_argument("--seed", action="append", default=[], help="seed id (repeatable)")
    p.add_argument("--stages", help="e.g. F:3 or F:1,B:1 (applied left to right)")
    p.add_argument("--theta-citer", type=int, default=None)
    p.add_argument("--theta-ref", type=int, default=None)
    p.add_argument("--cap", type=int, default=None, help="max additions per generation")

    p = sub.add_parser("network", help="build a co-citation network from a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--name", help="network name (default: dataset name)")
    p.add_argument("--lrf", type=float, default=None)
    p.add_argument("--lby", type=int, default=None)
    p.add_argument("--no-lby", action="store_true", help="disable the look-back bound")
    p.add_argument("--min-citations", type=int, default=None)
    p.add_argument("--top-n", type=int, default=None)
    p.add_argument("--slice-years", type=int, default=None)
    p.add_argument("--e-param", type=float, default=None, help="recorded, unused")

    p = sub.add_parser("cluster", help="detect, score, and label communities")
    p.add_argument("--network", required=True)
    p.add_argument("--levels", type=int, choices=[1, 2], default=1)
    p.add_argument("--top-k", type=int, default=5, help="clusters to drill into / label on maps")

    p = sub.add_parser("compare", help="overlap matrix and base-map overlays")
    p.add_argument("--datasets", required=True, help="comma-separated dataset names")
    p.add_argument("--base", help="base network name (needs an existing clustering)")
    p.add_argument("--threshold", type=float, default=0.10)
    p.add_argument("--epsilon", type=float, default=0.05)

    p = sub.add_parser("render", help="emit SVG/HTML artifacts")
    p.add_argument("--network", help="render this network's map")
    p.add_argument("--overlay", action="store_true", help="color by the compare projection")
    p.add_argument("--distributions", help="comma-separated dataset names for a year chart")
    p.add_argument("--log", action="store_true", help="plot ln(1+count)")

    p = sub.add_parser("report", help="emit dataset/overlap/network summary tables")
    p.add_argument("--kind", choices=["datasets", "overlap", "networks"], required=True)
    p.add_argument("--datasets", help="comma-separated dataset names (overlap kind)")

    return parser


def _snapshot(session: Session) -> CitationSnapshot:
    return CitationSnapshot.from_store(session.load_store())


def _split_names(text: str) -> list[str]:
    names = [n.strip() for n in text.split(",") if n.strip()]
    if not names:
        raise ValidationError("no dataset names given")
    return names


def _parse_stages(text: str) -> list[ExpansionStage]:
    stages = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" in chunk:
            direction, _, gens = chunk.partition(":")
        else:
            direction, gens = chunk, "1"
        try:
            stages.append(ExpansionStage(direction, int(gens)))
        except ValueError:
            raise ValidationError(f"bad stage syntax: {chunk!r} (expected e.g. F:3)") from None
    if not stages:
        raise ValidationError("no stages given")
    return stages


def _dataset_year_range(dataset: Dataset, store: RecordStore) -> str:
    years = [
        store.get(m).year
        for m in dataset.member_ids
        if store.get(m) is not None and store.get(m).year is not None
    ]
    if not years:
        return ""
    return f"{min(years)}-{max(years)}"


# -- command handlers -----------------------------------------------------------


def _cmd_ingest(args, session: Session) -> int:
    store = session.load_store()
    report = store.ingest(args.path, args.format)
    session.append_store_delta(store, report.changed_ids)
    report_path = session.report_path(f"{Path(args.path).stem}.load-report.csv")
    report_path.write_text(report.to_csv(), encoding="utf-8")
    if args.dataset:
        dataset = Dataset(
            name=args.dataset,
            member_ids=set(report.loaded_ids),
            provenance={"kind": "ingest", "source": Path(args.path).name, "format": args.format},
        )
        session.save_dataset(dataset)
    print(
        f"loaded {report.loaded} records ({report.merged} merged), "
        f"{len(report.rejected)} rejected; report: {report_path}"
    )
    return EXIT_OK


def _cmd_enrich(args, session: Session) -> int:
    store = session.load_store()
    report = store.enrich_abstracts(args.path)
    session.append_store_delta(store, report.enriched_ids)
    print(
        f"enriched {report.enriched} records, {len(report.unmatched)} unmatched, "
        f"{len(report.skipped_rows)} rows skipped"
    )
    return EXIT_OK


def _cmd_search(args, session: Session) -> int:
    if not args.phrase:
        raise ValidationError("search needs at least one --phrase")
    snapshot = _snapshot(session)
    dataset = snapshot.search(SourceQuery(kind=args.kind, phrases=args.phrase), name=args.name)
    session.save_dataset(dataset)
    print(f"dataset {dataset.name}: {len(dataset)} articles")
    return EXIT_OK


def _cmd_union(args, session: Session) -> int:
    datasets = [session.load_dataset(n) for n in _split_names(args.datasets)]
    combined = dataset_union(datasets, args.name)
    session.save_dataset(combined)
    print(f"dataset {combined.name}: {len(combined)} articles")
    return EXIT_OK


def _cmd_expand(args, session: Session) -> int:
    if args.spec:
        spec = ExpansionSpec.load(args.spec)
    else:
        if not args.seed or not args.stages:
            raise ValidationError("expand needs --spec, or --seed and --stages")
        spec = ExpansionSpec(
            seed_ids=set(args.seed),
            stages=_parse_stages(args.stages),
            theta_citer=args.theta_citer if args.theta_citer is not None else session.config.theta_citer,
            theta_ref=args.theta_ref if args.theta_ref is not None else session.config.theta_ref,
            per_generation_cap=args.cap,
        )
    snapshot = _snapshot(session)
    dataset, trace = run_cascade(snapshot, spec, args.name)
    session.save_dataset(dataset)
    csv_path = session.trace_path(f"{args.name}.trace.csv")
    csv_path.write_text(trace_report(trace), encoding="utf-8")
    json_path = session.trace_path(f"{args.name}.trace.json")
    json_path.write_text(
        json.dumps(trace.to_json_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(
        f"dataset {dataset.name}: {len(dataset)} articles after "
        f"{len(trace.generations)} generation(s); terminal: {trace.terminal_reason}; "
        f"trace: {csv_path}"
    )
    return EXIT_OK


def _network_config(args, session: Session) -> NetworkConfig:
    base = session.config.network
    return NetworkConfig(
        lrf=args.lrf if args.lrf is not None else base.lrf,
        lby=None if args.no_lby else (args.lby if args.lby is not None else base.lby),
        min_citations=args.min_citations if args.min_citations is not None else base.min_citations,
        top_n=args.top_n if args.top_n is not None else base.top_n,
        slice_years=args.slice_years if args.slice_years is not None else base.slice_years,
        e_param=args.e_param if args.e_param is not None else base.e_param,
    )


def _cmd_network(args, session: Session) -> int:
    dataset = session.load_dataset(args.dataset)
    snapshot = _snapshot(session)
    config = _network_config(args, session)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        network = build_network(dataset, snapshot, config)
    name = args.name or args.dataset
    session.save_network(name, network)
    stats = network_stats(network)
    print(
        f"network {name}: {stats.nodes} nodes, {stats.edges} links, "
        f"LCC {stats.lcc_size} ({stats.lcc_pct}% rounded / {stats.lcc_pct_floor}% truncated)"
    )
    return EXIT_OK


def _cmd_cluster(args, session: Session) -> int:
    network = session.load_network(args.network)
    snapshot = _snapshot(session)
    partition = clustering.detect_communities(network)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        silhouettes = clustering.silhouette(network, partition)
    partition.cluster_silhouettes = silhouettes.cluster_scores
    partition.mean_silhouette = silhouettes.mean
    labeling.label_all_clusters(partition, network, snapshot)

    payload_level1 = partition.to_json_dict()
    for cluster in payload_level1["clusters"]:
        members = set(cluster["members"])
        cluster["top_citers"] = [
            {"id": c, "members_cited": n, "citations": g}
            for c, n, g in clustering.top_citing_articles(members, snapshot, 5)
        ]
    payload: dict = {"level1": payload_level1}

    clusters = partition.clusters()
    top_indices = sorted(range(len(clusters)), key=lambda i: -len(clusters[i]))[: args.top_k]
    if args.levels >= 2:
        level2: dict[str, dict] = {}
        for index in top_indices:
            members = clusters[index]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                sub = clustering.sub_cluster(members, network, index)
            subnetwork = clustering.induced_subnetwork(network, members)
            labeling.label_all_clusters(sub, subnetwork, snapshot, background_members=members)
            level2[str(index)] = sub.to_json_dict()
        payload["level2"] = level2

    concept_json: dict[str, dict] = {}
    concept_text_parts: list[str] = []
    for index in top_indices:
        tree = labeling.build_concept_tree(clusters[index], snapshot)
        concept_json[str(index)] = tree.to_json_dict()
        label = partition.labels.get(index, "")
        concept_text_parts.append(f"== cluster #{index} {label}\n{tree.to_text()}")
    payload["concept_trees"] = concept_json

    session.save_clusters(args.network, payload)
    csv_path = session.root / "networks" / f"{args.network}.clusters.csv"
    csv_path.write_text(clustering.partition_to_csv(partition, silhouettes), encoding="utf-8")
    concepts_path = session.root / "networks" / f"{args.network}.concepts.txt"
    concepts_path.write_text("\n".join(concept_text_parts), encoding="utf-8")
    print(
        f"network {args.network}: {partition.num_clusters()} clusters, "
        f"Q={partition.modularity_q:.4f}, mean silhouette={silhouettes.mean:.4f} "
        f"(unweighted over clusters)"
    )
    return EXIT_OK


def _overlap_csv_with_ranges(matrix, datasets: list[Dataset], store: RecordStore) -> str:
    lines = matrix.to_csv().splitlines()
    ranges = "Range," + ",".join(_dataset_year_range(ds, store) for ds in datasets)
    # Layout: comment, header, Range, Articles, matrix rows.
    return "\n".join([lines[0], lines[1], ranges, *lines[2:]]) + "\n"


def _cmd_compare(args, session: Session) -> int:
    names = _split_names(args.datasets)
    if len(names) < 2:
        raise ValidationError("need at least 2 datasets")
    datasets = [session.load_dataset(n) for n in names]
    matrix = overlap_matrix(datasets)
    store = session.load_store()
    overlap_path = session.report_path("overlap.csv")
    overlap_path.write_text(_overlap_csv_with_ranges(matrix, datasets, store), encoding="utf-8")
    outputs = [str(overlap_path)]

    if args.base:
        network = session.load_network(args.base)
        partition = session.load_partition(args.base)
        projection = project_overlay(network, datasets, partition)
        projection_path = session.report_path("projection.json")
        projection_path.write_text(projection.to_json(), encoding="utf-8")
        coverage = coverage_report(projection, partition, args.threshold, args.epsilon)
        coverage_path = session.report_path("coverage.csv")
        coverage_path.write_text(coverage.to_csv(partition.labels), encoding="utf-8")
        outputs += [str(projection_path), str(coverage_path)]
    print("wrote " + ", ".join(outputs))
    return EXIT_OK


def _cmd_render(args, session: Session) -> int:
    spec = session.config.render
    wrote: list[str] = []
    if args.network:
        network = session.load_network(args.network)
        partition = None
        if session.clusters_path(args.network).exists():
            partition = session.load_partition(args.network)
        projection = None
        kind = "map"
        if args.overlay:
            projection_path = session.report_path("projection.json")
            if not projection_path.exists():
                raise CiteCascadeError("no projection found; run compare --base first")
            projection = OverlayProjection.from_json_dict(
                json.loads(projection_path.read_text(encoding="utf-8"))
            )
            kind = "overlay"
        positions = layout(network, spec.seed)
        svg = render_map(network, partition, projection, spec, positions)
        svg_path = session.render_path(f"{args.network}.{kind}.svg")
        svg_path.write_text(svg, encoding="utf-8")
        html_path = session.render_path(f"{args.network}.{kind}.html")
        html_path.write_text(wrap_html(svg, title=f"{args.network} {kind}"), encoding="utf-8")
        wrote += [str(svg_path), str(html_path)]
    if args.distributions:
        names = _split_names(args.distributions)
        store = session.load_store()
        distributions = [
            year_distribution(session.load_dataset(name), store) for name in names
        ]
        svg = render_distribution(distributions, log=args.log, spec=spec)
        svg_path = session.render_path("-".join(names) + ".years.svg")
        svg_path.write_text(svg, encoding="utf-8")
        wrote.append(str(svg_path))
    if not wrote:
        raise ValidationError("render needs --network and/or --distributions")
    print("wrote " + ", ".join(wrote))
    return EXIT_OK


def _cmd_report(args, session: Session) -> int:
    store = session.load_store()
    if args.kind == "datasets":
        lines = ["name,kind,records,with_abstracts,range"]
        for name in session.dataset_names():
            dataset = session.load_dataset(name)
            with_abstracts = sum(
                1
                for m in dataset.member_ids
                if store.get(m) is not None and store.get(m).abstract
            )
            lines.append(
                f"{name},{dataset.provenance.get('kind', '')},{len(dataset)},"
                f"{with_abstracts},{_dataset_year_range(dataset, store)}"
            )
        text = "\n".join(lines) + "\n"
        path = session.report_path("datasets.csv")
    elif args.kind == "overlap":
        if not args.datasets:
            raise ValidationError("report --kind overlap needs --datasets")
        names = _split_names(args.datasets)
        if len(names) < 2:
            raise ValidationError("need at least 2 datasets")
        datasets = [session.load_dataset(n) for n in names]
        text = _overlap_csv_with_ranges(overlap_matrix(datasets), datasets, store)
        path = session.report_path("overlap.csv")
    else:  # networks
        lines = [
            "# lcc_pct_rounded uses round-half-up; lcc_pct_truncated floors the same ratio"
            " (both emitted on purpose); silhouette is the unweighted mean over clusters",
            "name,nodes,links,lcc,lcc_pct_rounded,lcc_pct_truncated,modularity,mean_silhouette",
        ]
        for name in session.network_names():
            network = session.load_network(name)
            stats = network_stats(network)
            modularity_text = ""
            silhouette_text = ""
            if session.clusters_path(name).exists():
                partition = session.load_partition(name)
                if partition.modularity_q is not None:
                    modularity_text = f"{partition.modularity_q:.4f}"
                if partition.mean_silhouette is not None:
                    silhouette_text = f"{partition.mean_silhouette:.4f}"
            lines.append(
                f"{name},{stats.nodes},{stats.edges},{stats.lcc_size},"
                f"{stats.lcc_pct},{stats.lcc_pct_floor},{modularity_text},{silhouette_text}"
            )
        text = "\n".join(lines) + "\n"
        path = session.report_path("networks.csv")
    path.write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


_HANDLERS = {
    "ingest": _cmd_ingest,
    "enrich": _cmd_enrich,
    "search": _cmd_search,
    "union": _cmd_union,
    "expand": _cmd_expand,
    "network": _cmd_network,
    "cluster": _cmd_cluster,
    "compare": _cmd_compare,
    "render": _cmd_render,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        session = Session(args.session)
        with session.lock():
            return _HANDLERS[args.command](args, session)
    except (ValidationError, EmptyDatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CiteCascadeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
