"""Technique risk model built from adversary co-usage.

For each technique we ask: given an adversary uses it, how often do they
also use techniques from other tactics in the same playbook? Each tactic
reachable that way becomes an edge of a bipartite technique-tactic graph,
weighted by the conjunction probability. Severity grows with the number
of conjoined tactics and decays with their average improbability;
risk = likelihood x severity, and a control's mitigated risk (CMR) is the
sum of risk over the techniques it mitigates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .errors import (
    DatasetMismatch,
    InvalidAlpha,
    NoAdversaries,
    UnknownControl,
    UnknownTechnique,
)
from .model import Dataset, mitigated_techniques

DEFAULT_ALPHA = 8.0


@dataclass(frozen=True)
class TechniqueRiskProfile:
    """Conjunction-graph quantities for a single technique.

    `conj` maps each conjoined tactic to its conjunction probability in
    (0, 1]; `degree` is the edge count; `h` is the mean improbability
    (0 when the technique has no edges).
    """

    technique_id: str
    users: int
    conj: Mapping[str, float]
    degree: int
    h: float
    severity: float
    likelihood: float
    risk: float


@dataclass(frozen=True)
class ConjunctionGraph:
    alpha: float
    dataset_fingerprint: str
    profiles: Mapping[str, TechniqueRiskProfile]

    def profile(self, technique_id: str) -> TechniqueRiskProfile:
        try:
            return self.profiles[technique_id]
        except KeyError:
            raise UnknownTechnique(technique_id) from None


def build_conjunction_graph(dataset: Dataset, alpha: float = DEFAULT_ALPHA) -> ConjunctionGraph:
    """Build the per-technique conjunction profiles for the whole dataset.

    An edge technique->tactic exists iff some adversary uses the technique
    together with a *different* technique belonging to that tactic; the
    technique's own tactic membership never creates an edge by itself.
    Techniques used by no adversary get degree 0 and zero likelihood.
    """
    if alpha <= 0:
        raise InvalidAlpha(f"alpha must be positive, got {alpha}")
    n_adversaries = len(dataset.adversaries)
    profiles: dict[str, TechniqueRiskProfile] = {}
    for tid in dataset.techniques:
        users = dataset.technique_adversaries[tid]
        conj_counts: dict[str, int] = {}
        for aid in users:
            reached: set[str] = set()
            for other in dataset.adversaries[aid].technique_ids:
                if other != tid:
                    reached.update(dataset.techniques[other].tactic_ids)
            for tactic_id in reached:
                conj_counts[tactic_id] = conj_counts.get(tactic_id, 0) + 1
        # Sorted tactic order so float accumulation over the edges is
        # independent of set iteration order (and thus of the process
        # hash seed): identical inputs must give bit-identical outputs.
        conj = {ta: conj_counts[ta] / len(users) for ta in sorted(conj_counts) if conj_counts[ta]}
        degree = len(conj)
        h = sum(1.0 - p for p in conj.values()) / degree if degree else 0.0
        severity = math.exp(-h / alpha) * degree
        likelihood = len(users) / n_adversaries if n_adversaries else 0.0
        profiles[tid] = TechniqueRiskProfile(
            technique_id=tid,
            users=len(users),
            conj=conj,
            degree=degree,
            h=h,
            severity=severity,
            likelihood=likelihood,
            risk=likelihood * severity,
        )
    return ConjunctionGraph(
        alpha=alpha,
        dataset_fingerprint=dataset.fingerprint,
        profiles=profiles,
    )


def likelihood(dataset: Dataset, technique_id: str) -> float:
    """Fraction of all adversary entities that use the technique."""
    if technique_id not in dataset.techniques:
        raise UnknownTechnique(technique_id)
    if not dataset.adversaries:
        raise NoAdversaries("dataset has no adversary entities")
    return len(dataset.technique_adversaries[technique_id]) / len(dataset.adversaries)


def severity(graph: ConjunctionGraph, technique_id: str) -> float:
    return graph.profile(technique_id).severity


def technique_risk(graph: ConjunctionGraph, technique_id: str) -> float:
    return graph.profile(technique_id).risk


def cmr(dataset: Dataset, graph: ConjunctionGraph, control_id: str) -> float:
    """Sum of technique risk over the control's mitigated techniques.

    Summation runs in sorted technique order so the float result does not
    depend on set insertion history.
    """
    if control_id not in dataset.controls:
        raise UnknownControl(control_id)
    if graph.dataset_fingerprint != dataset.fingerprint:
        raise DatasetMismatch("conjunction graph was built from a different dataset")
    return sum(graph.profiles[tid].risk for tid in sorted(mitigated_techniques(dataset, control_id)))


def normalized_risks(graph: ConjunctionGraph) -> dict[str, float]:
    """Min-max normalized risk per technique, for display alongside raw risk.

    Raw risk is canonical everywhere else; this rescaling exists because
    some consumers want risks reported on a [0, 1] scale.
    """
    if not graph.profiles:
        return {}
    values = [p.risk for p in graph.profiles.values()]
    lo, hi = min(values), max(values)
    if hi == lo:
        return {tid: 0.0 for tid in graph.profiles}
    return {tid: (p.risk - lo) / (hi - lo) for tid, p in graph.profiles.items()}
