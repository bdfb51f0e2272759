"""Read-only HTTP JSON API over a loaded dataset snapshot.

The snapshot (dataset + conjunction graph + metrics + clustering) is built
once at startup and never mutated; request handlers only read it, so
concurrent requests need no locking. Swapping in a new snapshot is a
single attribute assignment and therefore atomic for readers.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Optional

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from . import cluster as cluster_module
from . import metrics as metrics_module
from . import portfolio as portfolio_module
from . import report as report_module
from . import risk as risk_module
from .errors import ControlScopeError, UnknownAdversary, UnknownControl
from .model import Dataset, control_sort_key

API_PREFIX = "/api/v1"


@dataclass(frozen=True)
class Snapshot:
    dataset: Dataset
    graph: risk_module.ConjunctionGraph
    records: list[metrics_module.MetricsRecord]
    assignment: cluster_module.ClusterAssignment | None
    metadata: dict


def build_snapshot(
    dataset: Dataset,
    alpha: float = risk_module.DEFAULT_ALPHA,
    seed: int = cluster_module.DEFAULT_SEED,
    k_max: int = cluster_module.DEFAULT_K_MAX,
    restarts: int = cluster_module.DEFAULT_RESTARTS,
    source: str = "",
    source_digest: str = "",
) -> Snapshot:
    """Evaluate everything the API serves from one dataset.

    Clustering needs enough mitigating controls for the elbow sweep; k_max
    is clamped to the row count and clustering is skipped entirely below
    three rows (the /clusters endpoint then reports the snapshot as
    incomplete).
    """
    graph = risk_module.build_conjunction_graph(dataset, alpha=alpha)
    records = metrics_module.evaluate_all(dataset, graph)
    assignment = None
    effective_k_max = min(k_max, len(records))
    if effective_k_max >= 3:
        assignment = cluster_module.cluster_controls(
            records, seed=seed, k_max=effective_k_max, restarts=restarts
        )
    return Snapshot(
        dataset=dataset,
        graph=graph,
        records=records,
        assignment=assignment,
        metadata={
            "source": source,
            "source_digest": source_digest,
            "alpha": alpha,
            "seed": seed,
            "k_max": k_max,
            "restarts": restarts,
            "dataset_fingerprint": dataset.fingerprint,
            "loaded_at": datetime.now(timezone.utc).isoformat(),
        },
    )


class PortfolioBody(BaseModel):
    enforced: list[str] = Field(default_factory=list)
    adversary_filter: Optional[list[str]] = None


class PlanBody(PortfolioBody):
    budget: int = 5
    objective: str = "technique_count"


def _record_payload(rec: metrics_module.MetricsRecord) -> dict:
    return {
        "control_id": rec.control_id,
        "tec": rec.tec,
        "tac": dict(sorted(rec.tac.items())),
        "mtac": rec.mtac,
        "cr": rec.cr,
        "ac": rec.ac,
        "atc": rec.atc,
        "cmr": rec.cmr,
    }


def _residual_payload(report: portfolio_module.ResidualReport) -> dict:
    return {
        "covered_techniques": sorted(report.covered_techniques),
        "residual_mitigable": sorted(report.residual_mitigable),
        "residual_unmitigable": sorted(report.residual_unmitigable),
        "per_adversary_coverage": dict(sorted(report.per_adversary_coverage.items())),
        "fa": report.fa,
        "aftma": report.aftma,
        "residual_risk": report.residual_risk,
        "total_risk": report.total_risk,
        "caveat": report.caveat,
    }


def _parse_portfolio(snapshot: Snapshot, body: PortfolioBody) -> portfolio_module.Portfolio:
    try:
        return portfolio_module.portfolio_from_json(
            {"enforced": body.enforced, "adversary_filter": body.adversary_filter},
            snapshot.dataset,
        )
    except UnknownControl as exc:
        raise HTTPException(
            status_code=400,
            detail=[{"field": "enforced", "id": exc.control_id, "error": "unknown control"}],
        ) from None
    except UnknownAdversary as exc:
        raise HTTPException(
            status_code=400,
            detail=[
                {"field": "adversary_filter", "id": exc.adversary_id, "error": "unknown adversary"}
            ],
        ) from None


def create_app(snapshot: Snapshot | None = None, cors_origins: list[str] | None = None) -> FastAPI:
    app = FastAPI(title="controlscope", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.snapshot = snapshot

    def require_snapshot(request: Request) -> Snapshot:
        snap = request.app.state.snapshot
        if snap is None:
            raise HTTPException(status_code=503, detail="no snapshot loaded")
        return snap

    @app.get(API_PREFIX + "/summary")
    def summary(request: Request):
        snap = require_snapshot(request)
        ds = snap.dataset
        return {
            "tactics": len(ds.tactics),
            "techniques": len(ds.techniques),
            "controls": len(ds.controls),
            "adversaries": len(ds.adversaries),
            "mitigating_controls": len(ds.mitigating_control_ids()),
            "unmitigated_techniques": len(ds.unmitigated_technique_ids()),
            "metadata": snap.metadata,
        }

    @app.get(API_PREFIX + "/controls")
    def controls(request: Request, sort: str = "tec", n: int = 10, direction: str = "desc"):
        snap = require_snapshot(request)
        if n < 1:
            raise HTTPException(status_code=400, detail="n must be at least 1")
        try:
            table = report_module.top_n(snap.records, sort, n, direction)
        except ControlScopeError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        by_id = {rec.control_id: rec for rec in snap.records}
        return {
            "metric": sort,
            "direction": direction,
            "records": [_record_payload(by_id[row.subject_id]) for row in table.rows],
        }

    @app.get(API_PREFIX + "/techniques/{technique_id}")
    def technique(request: Request, technique_id: str):
        snap = require_snapshot(request)
        ds = snap.dataset
        if technique_id not in ds.techniques:
            raise HTTPException(status_code=404, detail=f"unknown technique {technique_id!r}")
        te = ds.techniques[technique_id]
        profile = snap.graph.profiles[technique_id]
        return {
            "id": te.id,
            "name": te.name,
            "tactic_ids": sorted(te.tactic_ids),
            "mitigating_controls": sorted(ds.technique_controls[te.id], key=control_sort_key),
            "users": profile.users,
            "conjunction": dict(sorted(profile.conj.items())),
            "degree": profile.degree,
            "likelihood": profile.likelihood,
            "severity": profile.severity,
            "risk": profile.risk,
        }

    @app.get(API_PREFIX + "/clusters")
    def clusters(request: Request):
        snap = require_snapshot(request)
        if snap.assignment is None:
            raise HTTPException(status_code=503, detail="snapshot has no clustering")
        summaries = cluster_module.rank_clusters(snap.dataset, snap.assignment, snap.records)
        return {
            "k": snap.assignment.k,
            "seed": snap.assignment.seed,
            "explained_variance": list(snap.assignment.explained_variance),
            "clusters": [
                {
                    "label": s.label,
                    "count": s.count,
                    "control_ids": list(s.control_ids),
                    "mean_tec": s.mean_tec,
                    "mitigated_techniques": s.mitigated_techniques,
                    "aftm": s.aftm,
                    "fa": s.fa,
                    "aftma": s.aftma,
                }
                for s in summaries
            ],
        }

    @app.post(API_PREFIX + "/portfolio/evaluate")
    def evaluate_portfolio(request: Request, body: PortfolioBody):
        snap = require_snapshot(request)
        p = _parse_portfolio(snap, body)
        report = portfolio_module.residual_coverage(snap.dataset, snap.graph, p)
        return _residual_payload(report)

    @app.post(API_PREFIX + "/portfolio/plan")
    def plan_portfolio(request: Request, body: PlanBody):
        snap = require_snapshot(request)
        p = _parse_portfolio(snap, body)
        if body.objective not in portfolio_module.OBJECTIVES:
            raise HTTPException(
                status_code=400,
                detail=[{"field": "objective", "id": body.objective, "error": "unknown objective"}],
            )
        if body.budget < 1:
            raise HTTPException(
                status_code=400,
                detail=[{"field": "budget", "id": str(body.budget), "error": "must be >= 1"}],
            )
        steps = portfolio_module.greedy_plan(snap.dataset, snap.graph, p, body.budget, body.objective)
        return {
            "objective": body.objective,
            "budget": body.budget,
            "steps": [
                {
                    "control_id": s.control_id,
                    "gain": s.gain,
                    "techniques": s.techniques,
                    "risk": s.risk,
                    "adversaries": s.adversaries,
                }
                for s in steps
            ],
        }

    return app
