"""Rankings, tactic summaries, unmitigated report, quadrants, stats, exports."""

from __future__ import annotations

import csv
import io
import json
import random

import pytest

from controlscope.errors import EmptyInput, UnknownMetric, UnknownFormat
from controlscope.metrics import evaluate_all
from controlscope.report import (
    Table,
    export,
    export_many,
    metrics_to_table,
    quadrant_chart,
    quadrants_to_table,
    ranked_table_to_table,
    summary_stats,
    tactic_summary,
    tactic_summary_to_table,
    top_n,
    unmitigated_report,
    unmitigated_to_table,
)
from controlscope.risk import build_conjunction_graph

from .conftest import make_dataset, random_instance
from .test_cluster import record


def test_top_n_orders_descending(risk_fixture):
    records = evaluate_all(risk_fixture, build_conjunction_graph(risk_fixture))
    table = top_n(records, "tec", 10)
    assert table.rows[0].subject_id == "CC-1"
    assert table.rows[0].value == 2
    assert [r.rank for r in table.rows] == [1, 2]


def test_top_n_tie_break_by_control_order():
    records = [record("AC-10", tec=5, cr=1.0), record("AC-2", tec=5, cr=1.0)]
    table = top_n(records, "tec", 2)
    assert [r.subject_id for r in table.rows] == ["AC-2", "AC-10"]


def test_top_n_cr_ascending_excludes_undefined():
    records = [
        record("AC-1", tec=1, cr=5.0),
        record("AC-2", tec=2, cr=1.0),
        record("AC-3", tec=0, cr=None),
    ]
    table = top_n(records, "cr", 10, direction="asc")
    assert [r.subject_id for r in table.rows] == ["AC-2", "AC-1"]
    assert table.rows[0].extras["tec"] == 2.0


def test_top_n_unknown_metric(risk_fixture):
    records = evaluate_all(risk_fixture, build_conjunction_graph(risk_fixture))
    with pytest.raises(UnknownMetric):
        top_n(records, "nope", 3)


def test_top_n_is_permutation_of_population():
    rng = random.Random(67)
    inst = random_instance(rng)
    ds = inst.build()
    records = evaluate_all(ds, build_conjunction_graph(ds))
    if not records:
        return
    table = top_n(records, "tec", len(records) + 5)
    assert sorted(r.subject_id for r in table.rows) == sorted(r.control_id for r in records)


def test_tactic_summary_counts(coverage_fixture):
    rows = tactic_summary(coverage_fixture)
    by_id = {r.tactic_id: r for r in rows}
    # TA0001 holds T0001 (mitigated by CC-1) and T0003 (mitigated by CC-2)
    assert by_id["TA0001"].technique_count == 2
    assert by_id["TA0001"].mitigated_count == 2
    assert by_id["TA0001"].control_count == 2
    assert by_id["TA0002"].technique_count == 1
    assert by_id["TA0002"].control_count == 1


def test_tactic_summary_invariants():
    rng = random.Random(71)
    for _ in range(10):
        ds = random_instance(rng).build()
        total_mitigating = len(ds.mitigating_control_ids())
        for row in tactic_summary(ds):
            assert row.mitigated_count <= row.technique_count
            assert row.control_count <= total_mitigating


def test_tactic_summary_empty_dataset(empty_dataset):
    assert tactic_summary(empty_dataset) == []


def test_unmitigated_report_ranks_by_usage(risk_fixture):
    report = unmitigated_report(risk_fixture)
    ids = [r.technique_id for r in report.rows]
    assert set(ids) == {"T1204", "T1027", "T1105"}
    fractions = [r.usage_fraction for r in report.rows]
    assert fractions == sorted(fractions, reverse=True)
    # all three unmitigated techniques are used by exactly one of two adversaries
    assert all(f == 0.5 for f in fractions)
    # per-adversary unmitigated share is 2/3 for G0018 and G0099 alike? G0018 uses
    # T1059(m), T1566(m), T1204(u) -> 1/3; G0099 uses T1059(m), T1027(u), T1105(u) -> 2/3
    assert report.mean_unmitigated_share == pytest.approx((1 / 3 + 2 / 3) / 2, abs=1e-12)


def test_unmitigated_report_fully_mapped():
    ds = make_dataset(
        tactics={"TA0001": "t"},
        techniques={"T0001": {"TA0001"}},
        controls=["CC-1"],
        adversaries={"G0001": {"T0001"}},
        pairs=[("CC-1", "T0001")],
    )
    report = unmitigated_report(ds)
    assert report.rows == ()
    assert report.mean_unmitigated_share == 0.0


def test_quadrant_single_control_is_qt3():
    chart = quadrant_chart([record("CC-1", tec=5, cr=2.0)])
    assert chart.labels == {"CC-1": "QT3"}


def test_quadrant_labels_partition_and_recompute():
    rng = random.Random(73)
    records = [
        record(f"CC-{i}", tec=rng.randint(0, 100), cr=rng.uniform(0, 30)) for i in range(1, 30)
    ]
    chart = quadrant_chart(records)
    assert set(chart.labels) == {r.control_id for r in records}
    for rec in records:
        high_tec = rec.tec > chart.tec_split
        high_cr = rec.cr > chart.cr_split
        expected = {
            (True, True): "QT1",
            (False, True): "QT2",
            (False, False): "QT3",
            (True, False): "QT4",
        }[(high_tec, high_cr)]
        assert chart.labels[rec.control_id] == expected
    assert sum(chart.counts().values()) == len(records)


def test_quadrant_empty_input():
    with pytest.raises(EmptyInput):
        quadrant_chart([record("CC-1", tec=0, cr=None)])


def test_summary_stats_examples():
    stats = summary_stats([1, 2, 3, 4])
    assert stats.median == 2.5
    assert stats.q1 == 1.75
    assert stats.q3 == 3.25
    single = summary_stats([5])
    assert (single.mean, single.median, single.q1, single.q3) == (5.0, 5.0, 5.0, 5.0)
    with pytest.raises(EmptyInput):
        summary_stats([])


SAMPLE = Table(
    name="sample",
    columns=("control", "value"),
    rows=(("AC-2", 1.5), ("SI-4", 120)),
    footer=(("mean", "60.75"),),
)


def test_export_csv_roundtrip():
    data = export(SAMPLE, "csv")
    reader = csv.reader(io.StringIO(data.decode()))
    rows = list(reader)
    assert rows[0] == ["control", "value"]
    assert rows[1] == ["AC-2", "1.5"]
    assert float(rows[1][1]) == 1.5


def test_export_json_sorted_and_complete():
    doc = json.loads(export(SAMPLE, "json"))
    assert doc["columns"] == ["control", "value"]
    assert doc["rows"] == [["AC-2", 1.5], ["SI-4", 120]]
    assert doc["footer"] == {"mean": "60.75"}


def test_export_markdown_pipe_table():
    text = export(SAMPLE, "markdown").decode()
    assert "| control | value |" in text
    assert "| AC-2 | 1.5 |" in text


def test_export_deterministic_and_empty():
    assert export(SAMPLE, "csv") == export(SAMPLE, "csv")
    assert export(SAMPLE, "json") == export(SAMPLE, "json")
    empty = Table(name="empty", columns=("a", "b"), rows=())
    lines = export(empty, "csv").decode().splitlines()
    assert lines == ["a,b"]
    with pytest.raises(UnknownFormat):
        export(SAMPLE, "xml")


def test_export_many_concatenates():
    data = export_many([SAMPLE, SAMPLE], "json")
    doc = json.loads(data)
    assert isinstance(doc, list) and len(doc) == 2


def test_table_adapters_cover_reports(risk_fixture):
    records = evaluate_all(risk_fixture, build_conjunction_graph(risk_fixture))
    ranked = ranked_table_to_table(top_n(records, "cmr", 5))
    assert ranked.rows[0][1] == "CC-1"
    tactics_table = tactic_summary_to_table(tactic_summary(risk_fixture))
    assert len(tactics_table.rows) == 4
    unmit = unmitigated_to_table(unmitigated_report(risk_fixture))
    assert len(unmit.rows) == 3
    quad = quadrants_to_table(quadrant_chart(records))
    assert len(quad.rows) == 2
    grid = metrics_to_table(records, sorted(risk_fixture.tactics))
    assert grid.columns[0] == "control"
    assert len(grid.columns) == 2 + 4 + 5  # control, tec, 4 tac columns, mtac..cmr


def test_tactic_percentage_rounding():
    ds = make_dataset(
        tactics={"TA0001": "t"},
        techniques={f"T{i:04d}": {"TA0001"} for i in range(1, 30)},
        controls=["CC-1"],
        adversaries={},
        pairs=[("CC-1", f"T{i:04d}") for i in range(1, 11)],
    )
    table = tactic_summary_to_table(tactic_summary(ds))
    # 10 of 29 -> 34%
    assert table.rows[0][4] == 34
