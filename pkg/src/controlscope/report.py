"""Rankings, per-tactic summaries, quadrant analysis, and deterministic exports."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyInput, UnknownFormat, UnknownMetric
from .metrics import METRIC_NAMES, MetricsRecord, metric_value
from .model import Dataset, control_sort_key


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    median: float
    q1: float
    q3: float


@dataclass(frozen=True)
class RankedRow:
    rank: int
    subject_id: str
    value: float
    extras: Mapping[str, float]


@dataclass(frozen=True)
class RankedTable:
    metric: str
    direction: str  # "desc" | "asc"
    rows: tuple[RankedRow, ...]
    stats: SummaryStats  # over the whole input population, not just the top n


@dataclass(frozen=True)
class TacticSummaryRow:
    tactic_id: str
    name: str
    technique_count: int
    mitigated_count: int
    mitigated_fraction: float
    control_count: int


@dataclass(frozen=True)
class UnmitigatedRow:
    technique_id: str
    name: str
    tactic_ids: tuple[str, ...]
    usage_fraction: float  # fraction of adversaries using the technique


@dataclass(frozen=True)
class UnmitigatedReport:
    rows: tuple[UnmitigatedRow, ...]
    # distribution, over adversaries, of the unmitigated share of their techniques
    mean_unmitigated_share: float
    median_unmitigated_share: float


@dataclass(frozen=True)
class QuadrantChart:
    """TEC-vs-CR scatter split into four equal quarters of the observed ranges.

    QT1 high/high, QT2 low-TEC/high-CR, QT3 low/low, QT4 high-TEC/low-CR.
    Points on a split line count as "low" on that axis.
    """

    tec_range: tuple[float, float]
    cr_range: tuple[float, float]
    tec_split: float
    cr_split: float
    labels: Mapping[str, str]  # control id -> "QT1".."QT4"

    def counts(self) -> dict[str, int]:
        out = {"QT1": 0, "QT2": 0, "QT3": 0, "QT4": 0}
        for q in self.labels.values():
            out[q] += 1
        return out


def summary_stats(values: Sequence[float]) -> SummaryStats:
    """Mean, midpoint median, and linearly interpolated quartiles."""
    if len(values) == 0:
        raise EmptyInput("no values")
    arr = np.asarray(values, dtype=float)
    return SummaryStats(
        mean=float(arr.mean()),
        median=float(np.median(arr)),
        q1=float(np.percentile(arr, 25)),
        q3=float(np.percentile(arr, 75)),
    )


def top_n(
    records: Sequence[MetricsRecord],
    metric: str,
    n: int,
    direction: str = "desc",
) -> RankedTable:
    """Rank controls by one metric; ties break by canonical control order.

    Footer stats cover every input record's value (for cr, only controls
    where it is defined), not just the listed rows.
    """
    if metric not in METRIC_NAMES:
        raise UnknownMetric(metric)
    if direction not in ("desc", "asc"):
        raise UnknownMetric(f"direction {direction!r}")
    if n < 1:
        raise EmptyInput(f"n must be at least 1, got {n}")
    population = [r for r in records if not (metric == "cr" and r.cr is None)]
    if not population:
        raise EmptyInput("no records carry this metric")
    sign = -1.0 if direction == "desc" else 1.0
    ordered = sorted(
        population,
        key=lambda r: (sign * metric_value(r, metric), control_sort_key(r.control_id)),
    )
    rows = []
    for i, rec in enumerate(ordered[:n], start=1):
        extras = {}
        if metric in ("cr", "cmr"):
            extras["tec"] = float(rec.tec)
        rows.append(
            RankedRow(rank=i, subject_id=rec.control_id, value=metric_value(rec, metric), extras=extras)
        )
    stats = summary_stats([metric_value(r, metric) for r in population])
    return RankedTable(metric=metric, direction=direction, rows=tuple(rows), stats=stats)


def tactic_summary(dataset: Dataset) -> list[TacticSummaryRow]:
    """Per tactic: technique count, mitigated techniques, distinct mitigating controls."""
    mitigated_all = {tid for tid, cids in dataset.technique_controls.items() if cids}
    rows = []
    for tactic_id in sorted(dataset.tactics):
        members = dataset.tactic_techniques[tactic_id]
        mitigated = members & mitigated_all
        controls: set[str] = set()
        for tid in members:
            controls.update(dataset.technique_controls[tid])
        rows.append(
            TacticSummaryRow(
                tactic_id=tactic_id,
                name=dataset.tactics[tactic_id].name,
                technique_count=len(members),
                mitigated_count=len(mitigated),
                mitigated_fraction=len(mitigated) / len(members) if members else 0.0,
                control_count=len(controls),
            )
        )
    return rows


def unmitigated_report(dataset: Dataset) -> UnmitigatedReport:
    """Techniques with no mitigating control, ranked by adversary usage."""
    n_adversaries = len(dataset.adversaries)
    unmitigated = set(dataset.unmitigated_technique_ids())
    rows = [
        UnmitigatedRow(
            technique_id=tid,
            name=dataset.techniques[tid].name,
            tactic_ids=tuple(sorted(dataset.techniques[tid].tactic_ids)),
            usage_fraction=(
                len(dataset.technique_adversaries[tid]) / n_adversaries if n_adversaries else 0.0
            ),
        )
        for tid in unmitigated
    ]
    rows.sort(key=lambda r: (-r.usage_fraction, r.technique_id))

    shares = []
    for ae in dataset.adversaries.values():
        if ae.technique_ids:
            shares.append(len(ae.technique_ids & unmitigated) / len(ae.technique_ids))
        else:
            shares.append(0.0)
    mean_share = float(np.mean(shares)) if shares else 0.0
    median_share = float(np.median(shares)) if shares else 0.0
    return UnmitigatedReport(
        rows=tuple(rows),
        mean_unmitigated_share=mean_share,
        median_unmitigated_share=median_share,
    )


def quadrant_chart(records: Sequence[MetricsRecord]) -> QuadrantChart:
    """Assign each mitigating control to a TEC/CR quadrant."""
    population = [r for r in records if r.cr is not None]
    if not population:
        raise EmptyInput("no mitigating controls with cr")
    tecs = [float(r.tec) for r in population]
    crs = [float(r.cr) for r in population]
    tec_range = (min(tecs), max(tecs))
    cr_range = (min(crs), max(crs))
    tec_split = (tec_range[0] + tec_range[1]) / 2
    cr_split = (cr_range[0] + cr_range[1]) / 2
    labels: dict[str, str] = {}
    for rec in population:
        high_tec = rec.tec > tec_split
        high_cr = rec.cr > cr_split
        if high_tec and high_cr:
            q = "QT1"
        elif not high_tec and high_cr:
            q = "QT2"
        elif not high_tec and not high_cr:
            q = "QT3"
        else:
            q = "QT4"
        labels[rec.control_id] = q
    return QuadrantChart(
        tec_range=tec_range,
        cr_range=cr_range,
        tec_split=tec_split,
        cr_split=cr_split,
        labels=labels,
    )


# --- generic table export -----------------------------------------------------


@dataclass(frozen=True)
class Table:
    """Format-independent grid: a name, column headers, rows, footer notes."""

    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    footer: tuple[tuple[str, str], ...] = ()


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)  # repr round-trips floats exactly
    return str(value)


def export(table: Table, format: str) -> bytes:
    """Render one table to deterministic bytes in csv, json, or markdown."""
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_cell(v) for v in row])
        return buf.getvalue().encode("utf-8")
    if format == "json":
        doc = {
            "name": table.name,
            "columns": list(table.columns),
            "rows": [list(row) for row in table.rows],
            "footer": {k: v for k, v in table.footer},
        }
        return (json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    if format == "markdown":
        lines = [f"### {table.name}", ""]
        lines.append("| " + " | ".join(table.columns) + " |")
        lines.append("|" + "|".join(" --- " for _ in table.columns) + "|")
        for row in table.rows:
            lines.append("| " + " | ".join(_cell(v) for v in row) + " |")
        if table.footer:
            lines.append("")
            for key, value in table.footer:
                lines.append(f"- {key}: {value}")
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise UnknownFormat(format)


def export_many(tables: Sequence[Table], format: str) -> bytes:
    """Concatenate several tables into one deterministic document."""
    if format == "json":
        parts = [json.loads(export(t, "json")) for t in tables]
        return (json.dumps(parts, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    return b"\n".join(export(t, format) for t in tables)


def ranked_table_to_table(ranked: RankedTable) -> Table:
    extra_cols = sorted({k for row in ranked.rows for k in row.extras})
    columns = ("rank", "control", ranked.metric, *extra_cols)
    rows = tuple(
        (row.rank, row.subject_id, row.value, *(row.extras.get(c, "") for c in extra_cols))
        for row in ranked.rows
    )
    stats = ranked.stats
    footer = (
        ("mean", repr(stats.mean)),
        ("median", repr(stats.median)),
        ("q1", repr(stats.q1)),
        ("q3", repr(stats.q3)),
    )
    return Table(
        name=f"top {len(ranked.rows)} controls by {ranked.metric} ({ranked.direction})",
        columns=columns,
        rows=rows,
        footer=footer,
    )


def tactic_summary_to_table(rows: Sequence[TacticSummaryRow]) -> Table:
    return Table(
        name="mitigation coverage per tactic",
        columns=("tactic", "name", "techniques", "mitigated", "mitigated_pct", "controls"),
        rows=tuple(
            (
                r.tactic_id,
                r.name,
                r.technique_count,
                r.mitigated_count,
                round(100 * r.mitigated_fraction),
                r.control_count,
            )
            for r in rows
        ),
    )


def unmitigated_to_table(report: UnmitigatedReport) -> Table:
    return Table(
        name="unmitigated techniques by adversary usage",
        columns=("technique", "name", "tactics", "usage_fraction"),
        rows=tuple(
            (r.technique_id, r.name, ";".join(r.tactic_ids), r.usage_fraction)
            for r in report.rows
        ),
        footer=(
            ("mean_unmitigated_share", repr(report.mean_unmitigated_share)),
            ("median_unmitigated_share", repr(report.median_unmitigated_share)),
        ),
    )


def quadrants_to_table(chart: QuadrantChart) -> Table:
    counts = chart.counts()
    return Table(
        name="TEC/CR quadrants",
        columns=("control", "quadrant"),
        rows=tuple(sorted(chart.labels.items(), key=lambda kv: control_sort_key(kv[0]))),
        footer=(
            ("tec_split", repr(chart.tec_split)),
            ("cr_split", repr(chart.cr_split)),
            *(
                (q, str(counts[q]))
                for q in ("QT1", "QT2", "QT3", "QT4")
            ),
        ),
    )


def metrics_to_table(records: Sequence[MetricsRecord], tactic_ids: Sequence[str]) -> Table:
    """Full evaluation grid: one row per control, all seven metrics (TAC per tactic)."""
    tac_cols = tuple(f"tac:{ta}" for ta in sorted(tactic_ids))
    columns = ("control", "tec", *tac_cols, "mtac", "cr", "ac", "atc", "cmr")
    rows = tuple(
        (
            rec.control_id,
            rec.tec,
            *(rec.tac.get(ta, 0.0) for ta in sorted(tactic_ids)),
            rec.mtac,
            rec.cr if rec.cr is not None else "",
            rec.ac,
            rec.atc,
            rec.cmr,
        )
        for rec in records
    )
    return Table(name="control evaluation", columns=columns, rows=rows)
