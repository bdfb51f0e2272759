"""Command-line front door: ingest -> evaluate -> cluster -> report -> whatif -> serve."""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from pathlib import Path

from . import cluster as cluster_module
from . import ingest as ingest_module
from . import metrics as metrics_module
from . import portfolio as portfolio_module
from . import report as report_module
from . import risk as risk_module
from .errors import ControlScopeError
from .model import build_dataset

ENV_SNAPSHOT = "CONTROLSCOPE_SNAPSHOT"


def _write_output(data: bytes, output: str | None) -> None:
    if output:
        Path(output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)


def _load_dataset(path: str):
    return ingest_module.load_interchange(Path(path).read_bytes())


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def cmd_ingest(args: argparse.Namespace) -> int:
    options = ingest_module.IngestOptions(
        rollup_subtechniques=not args.keep_subtechniques,
        include_revoked=args.include_revoked,
        include_deprecated=args.include_deprecated,
    )
    try:
        tactics, techniques, adversaries = ingest_module.parse_attack_bundle(
            Path(args.attack_bundle).read_bytes(), options
        )
        controls = ingest_module.parse_control_catalog(Path(args.controls).read_bytes())
        pairs = ingest_module.parse_mapping(
            Path(args.mapping).read_bytes(), args.mapping_format, options
        )
        # Mapping rows for techniques/controls outside the snapshot are dropped,
        # not errors: catalog revisions drift.
        technique_ids = {te.id for te in techniques}
        control_ids = {c.id for c in controls}
        kept = [(c, t) for c, t in pairs if c in control_ids and t in technique_ids]
        dataset = build_dataset(tactics, techniques, controls, adversaries, kept)
    except (ControlScopeError, OSError) as exc:
        return _fail(f"{exc} (while ingesting {args.attack_bundle}, {args.mapping}, {args.controls})")
    _write_output(ingest_module.save_interchange(dataset), args.output)
    print(
        f"controls={len(dataset.controls)} techniques={len(dataset.techniques)} "
        f"adversaries={len(dataset.adversaries)} tactics={len(dataset.tactics)} "
        f"pairs={len(dataset.mitigation_pairs)}",
        file=sys.stderr if not args.output else sys.stdout,
    )
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        dataset = _load_dataset(args.input)
        graph = risk_module.build_conjunction_graph(dataset, alpha=args.alpha)
        records = metrics_module.evaluate_all(dataset, graph, include_nonmitigating=args.all)
    except (ControlScopeError, OSError) as exc:
        return _fail(str(exc))
    table = report_module.metrics_to_table(records, sorted(dataset.tactics))
    _write_output(report_module.export(table, args.format), args.output)
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    if args.k_max < 2:
        return _fail(f"--k-max must be at least 2, got {args.k_max}")
    try:
        dataset = _load_dataset(args.input)
        graph = risk_module.build_conjunction_graph(dataset, alpha=args.alpha)
        records = metrics_module.evaluate_all(dataset, graph)
        assignment = cluster_module.cluster_controls(
            records,
            seed=args.seed,
            k_max=args.k_max,
            restarts=args.restarts,
            use_raw_features=args.raw_features,
        )
        summaries = cluster_module.rank_clusters(dataset, assignment, records)
    except (ControlScopeError, OSError) as exc:
        return _fail(str(exc))

    label_of = {}
    for s in summaries:
        for cid in s.control_ids:
            label_of[cid] = s.label
    membership = report_module.Table(
        name="cluster membership",
        columns=("control", "cluster"),
        rows=tuple((rec.control_id, label_of[rec.control_id]) for rec in records),
        footer=(
            ("k", str(assignment.k)),
            ("seed", str(assignment.seed)),
            ("inertia", repr(assignment.inertia)),
        ),
    )
    comparison = report_module.Table(
        name="cluster comparison",
        columns=("cluster", "controls", "MT", "AFTM", "FA", "AFTMA"),
        rows=tuple(
            (s.label, s.count, s.mitigated_techniques, s.aftm, s.fa, s.aftma) for s in summaries
        ),
    )
    _write_output(report_module.export_many([membership, comparison], args.format), args.output)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    try:
        dataset = _load_dataset(args.input)
        graph = risk_module.build_conjunction_graph(dataset, alpha=args.alpha)
        records = metrics_module.evaluate_all(dataset, graph)
        if args.table == "top":
            ranked = report_module.top_n(records, args.metric, args.n, args.direction)
            table = report_module.ranked_table_to_table(ranked)
        elif args.table == "tactics":
            table = report_module.tactic_summary_to_table(report_module.tactic_summary(dataset))
        elif args.table == "unmitigated":
            table = report_module.unmitigated_to_table(report_module.unmitigated_report(dataset))
        else:  # quadrants
            table = report_module.quadrants_to_table(report_module.quadrant_chart(records))
    except (ControlScopeError, OSError) as exc:
        return _fail(str(exc))
    _write_output(report_module.export(table, args.format), args.output)
    return 0


def cmd_whatif(args: argparse.Namespace) -> int:
    try:
        dataset = _load_dataset(args.input)
        graph = risk_module.build_conjunction_graph(dataset, alpha=args.alpha)
        p = portfolio_module.portfolio_from_json(Path(args.portfolio).read_bytes(), dataset)
        residual = portfolio_module.residual_coverage(dataset, graph, p)
        steps = portfolio_module.greedy_plan(dataset, graph, p, args.budget, args.objective)
    except (ControlScopeError, OSError) as exc:
        return _fail(str(exc))

    residual_table = report_module.Table(
        name="residual coverage",
        columns=("field", "value"),
        rows=(
            ("covered_techniques", ";".join(sorted(residual.covered_techniques))),
            ("residual_mitigable", ";".join(sorted(residual.residual_mitigable))),
            ("residual_unmitigable", ";".join(sorted(residual.residual_unmitigable))),
            ("fa", residual.fa),
            ("aftma", residual.aftma),
            ("residual_risk", residual.residual_risk),
            ("total_risk", residual.total_risk),
        ),
        footer=(("caveat", residual.caveat),),
    )
    adversary_table = report_module.Table(
        name="per-adversary coverage",
        columns=("adversary", "coverage"),
        rows=tuple(sorted(residual.per_adversary_coverage.items())),
    )
    plan_table = report_module.Table(
        name="greedy plan",
        columns=("step", "control", "gain", "techniques", "risk", "adversaries"),
        rows=tuple(
            (i, s.control_id, s.gain, s.techniques, s.risk, s.adversaries)
            for i, s in enumerate(steps, start=1)
        ),
    )
    _write_output(
        report_module.export_many([residual_table, adversary_table, plan_table], args.format),
        args.output,
    )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from . import service as service_module

    snapshot_path = args.snapshot or os.environ.get(ENV_SNAPSHOT)
    if not snapshot_path:
        return _fail(f"no snapshot: pass --snapshot or set {ENV_SNAPSHOT}")
    host, _, port_text = args.bind.rpartition(":")
    if not host or not port_text.isdigit():
        return _fail(f"--bind must be addr:port, got {args.bind!r}")
    try:
        raw = Path(snapshot_path).read_bytes()
        dataset = ingest_module.load_interchange(raw)
        snapshot = service_module.build_snapshot(
            dataset,
            alpha=args.alpha,
            seed=args.seed,
            k_max=args.k_max,
            source=snapshot_path,
            source_digest=hashlib.sha256(raw).hexdigest(),
        )
    except (ControlScopeError, OSError) as exc:
        return _fail(str(exc))
    app = service_module.create_app(snapshot)

    import uvicorn

    try:
        uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
    except (SystemExit, OSError) as exc:
        return _fail(f"serve failed on {args.bind}: {exc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="controlscope",
        description="Prioritize security controls against cataloged adversary techniques.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse source files into the interchange format")
    p.add_argument("--attack-bundle", required=True, help="ATT&CK enterprise STIX JSON")
    p.add_argument("--mapping", required=True, help="control-to-technique mapping file")
    p.add_argument("--mapping-format", choices=("csv", "json"), default="csv")
    p.add_argument("--controls", required=True, help="control catalog CSV")
    p.add_argument("--keep-subtechniques", action="store_true")
    p.add_argument("--include-revoked", action="store_true")
    p.add_argument("--include-deprecated", action="store_true")
    p.add_argument("--output", "-o", help="interchange JSON path (default: stdout)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("evaluate", help="evaluate every mitigating control")
    p.add_argument("--input", "-i", required=True, help="interchange JSON")
    p.add_argument("--alpha", type=float, default=risk_module.DEFAULT_ALPHA)
    p.add_argument("--all", action="store_true", help="include non-mitigating controls")
    p.add_argument("--format", choices=("csv", "json", "markdown"), default="csv")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cluster", help="cluster mitigating controls")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--alpha", type=float, default=risk_module.DEFAULT_ALPHA)
    p.add_argument("--seed", type=int, default=cluster_module.DEFAULT_SEED)
    p.add_argument("--k-max", type=int, default=cluster_module.DEFAULT_K_MAX)
    p.add_argument("--restarts", type=int, default=cluster_module.DEFAULT_RESTARTS)
    p.add_argument("--raw-features", action="store_true", help="cluster 6-D features, not the projection")
    p.add_argument("--format", choices=("csv", "json", "markdown"), default="csv")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("report", help="produce a ranking or summary table")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--table", choices=("top", "tactics", "unmitigated", "quadrants"), required=True)
    p.add_argument("--metric", choices=metrics_module.METRIC_NAMES, default="tec")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--direction", choices=("desc", "asc"), default="desc")
    p.add_argument("--alpha", type=float, default=risk_module.DEFAULT_ALPHA)
    p.add_argument("--format", choices=("csv", "json", "markdown"), default="csv")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("whatif", help="residual coverage and greedy plan for a portfolio")
    p.add_argument("--input", "-i", required=True)
    p.add_argument("--portfolio", required=True, help="portfolio JSON document")
    p.add_argument("--budget", type=int, default=5)
    p.add_argument("--objective", choices=portfolio_module.OBJECTIVES, default="technique_count")
    p.add_argument("--alpha", type=float, default=risk_module.DEFAULT_ALPHA)
    p.add_argument("--format", choices=("csv", "json", "markdown"), default="csv")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("serve", help="serve the HTTP API over a snapshot")
    p.add_argument("--snapshot", help=f"interchange JSON (default: ${ENV_SNAPSHOT})")
    p.add_argument("--bind", default="127.0.0.1:8080")
    p.add_argument("--alpha", type=float, default=risk_module.DEFAULT_ALPHA)
    p.add_argument("--seed", type=int, default=cluster_module.DEFAULT_SEED)
    p.add_argument("--k-max", type=int, default=cluster_module.DEFAULT_K_MAX)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
