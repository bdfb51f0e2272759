"""The control metric suite: TEC, TAC, MTAC, CR, AC, ATC (plus CMR via risk).

Coverage metrics count mitigated techniques against three populations
(techniques, tactics, adversary entities); redundancy counts alternative
controls; risk is summed from the conjunction graph. All computations are
exact rational arithmetic over set sizes, evaluated lazily per control.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from . import risk as risk_module
from .errors import (
    DatasetMismatch,
    EmptyTactic,
    NoAdversaries,
    NotAMitigatingControl,
    UnknownMetric,
    UnknownTactic,
)
from .model import Dataset, control_sort_key, mitigated_techniques


@dataclass(frozen=True)
class MetricsRecord:
    """One control's full evaluation.

    `tac` has one entry per dataset tactic. `cr` is None exactly when the
    control mitigates nothing (redundancy is undefined there); the other
    metrics are all 0 in that case.
    """

    control_id: str
    tec: int
    tac: Mapping[str, float]
    mtac: float
    cr: float | None
    ac: float
    atc: float
    cmr: float


def tec(dataset: Dataset, control_id: str) -> int:
    """Number of techniques the control mitigates."""
    return len(mitigated_techniques(dataset, control_id))


def tac(dataset: Dataset, control_id: str, tactic_id: str) -> float:
    """Fraction of the tactic's techniques that the control mitigates."""
    mitigated = mitigated_techniques(dataset, control_id)
    if tactic_id not in dataset.tactics:
        raise UnknownTactic(tactic_id)
    tactic_members = dataset.tactic_techniques[tactic_id]
    if not tactic_members:
        raise EmptyTactic(f"tactic {tactic_id} has no techniques")
    return len(mitigated & tactic_members) / len(tactic_members)


def mtac(dataset: Dataset, control_id: str) -> float:
    """Mean of the control's tactic coverage over every dataset tactic.

    Zero-coverage tactics stay in the mean; a tactic with no techniques
    contributes 0 rather than failing the whole evaluation.
    """
    mitigated = mitigated_techniques(dataset, control_id)
    n = len(dataset.tactics)
    if n == 0:
        return 0.0
    total = 0.0
    for tactic_id in dataset.tactics:
        members = dataset.tactic_techniques[tactic_id]
        if members:
            total += len(mitigated & members) / len(members)
    return total / n


def cr(dataset: Dataset, control_id: str) -> float:
    """Mean count of alternative controls over the techniques this control mitigates.

    The control itself is never counted as its own alternative. Undefined
    (NotAMitigatingControl) when the control mitigates nothing.
    """
    mitigated = mitigated_techniques(dataset, control_id)
    if not mitigated:
        raise NotAMitigatingControl(control_id)
    total = sum(len(dataset.technique_controls[tid] - {control_id}) for tid in mitigated)
    return total / len(mitigated)


def ac(dataset: Dataset, control_id: str) -> float:
    """Fraction of adversary entities with at least one technique mitigated."""
    mitigated = mitigated_techniques(dataset, control_id)
    if not dataset.adversaries:
        raise NoAdversaries("dataset has no adversary entities")
    hit = sum(1 for ae in dataset.adversaries.values() if ae.technique_ids & mitigated)
    return hit / len(dataset.adversaries)


def atc(dataset: Dataset, control_id: str) -> float:
    """Mean fraction of each adversary entity's techniques that the control mitigates.

    Entities with no observed techniques contribute 0 to the mean. Returned
    on the [0, 1] scale.
    """
    mitigated = mitigated_techniques(dataset, control_id)
    if not dataset.adversaries:
        raise NoAdversaries("dataset has no adversary entities")
    total = 0.0
    for ae in dataset.adversaries.values():
        if ae.technique_ids:
            total += len(ae.technique_ids & mitigated) / len(ae.technique_ids)
    return total / len(dataset.adversaries)


def _record(dataset: Dataset, graph: risk_module.ConjunctionGraph, control_id: str) -> MetricsRecord:
    mitigated = dataset.mitigations[control_id]
    tac_map: dict[str, float] = {}
    for tactic_id in dataset.tactics:
        members = dataset.tactic_techniques[tactic_id]
        tac_map[tactic_id] = len(mitigated & members) / len(members) if members else 0.0
    n_tactics = len(dataset.tactics)
    has_adversaries = bool(dataset.adversaries)
    return MetricsRecord(
        control_id=control_id,
        tec=len(mitigated),
        tac=tac_map,
        mtac=sum(tac_map.values()) / n_tactics if n_tactics else 0.0,
        cr=cr(dataset, control_id) if mitigated else None,
        ac=ac(dataset, control_id) if has_adversaries else 0.0,
        atc=atc(dataset, control_id) if has_adversaries else 0.0,
        cmr=risk_module.cmr(dataset, graph, control_id),
    )


def evaluate_all(
    dataset: Dataset,
    graph: risk_module.ConjunctionGraph,
    include_nonmitigating: bool = False,
) -> list[MetricsRecord]:
    """Evaluate every control, sorted by canonical control order.

    By default only mitigating controls (TEC > 0) get a record; pass
    include_nonmitigating=True for one record per cataloged control.
    """
    if graph.dataset_fingerprint != dataset.fingerprint:
        raise DatasetMismatch("conjunction graph was built from a different dataset")
    ids = [
        cid
        for cid in sorted(dataset.controls, key=control_sort_key)
        if include_nonmitigating or dataset.mitigations[cid]
    ]
    return [_record(dataset, graph, cid) for cid in ids]


METRIC_NAMES = ("tec", "mtac", "cr", "ac", "atc", "cmr")


def metric_value(record: MetricsRecord, metric: str) -> float:
    """Numeric value of a named scalar metric; None cr reads as 0."""
    if metric not in METRIC_NAMES:
        raise UnknownMetric(metric)
    if metric == "cr":
        return record.cr if record.cr is not None else 0.0
    return float(getattr(record, metric))
