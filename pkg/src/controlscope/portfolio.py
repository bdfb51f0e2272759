"""What-if portfolio engine: residual coverage, marginal gains, greedy plans.

A portfolio is the set of controls an organization has enforced, optionally
scoped to the adversary entities it actually faces. Mitigation is binary
per the mapping; because a mapped control may only partially mitigate a
technique in practice, every report carries a standing caveat instead of
invented weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

from .errors import AlreadyEnforced, MalformedDocument, UnknownAdversary, UnknownControl
from .model import Dataset, build_dataset, control_sort_key
from .risk import ConjunctionGraph, build_conjunction_graph

MITIGATION_CAVEAT = (
    "mapping treats mitigation as binary; a mapped control may mitigate a "
    "technique only partially or only in combination with other controls"
)


@dataclass(frozen=True)
class Portfolio:
    """Enforced control ids plus an optional adversary-relevance filter (None = all)."""

    enforced: frozenset[str] = field(default_factory=frozenset)
    adversary_filter: frozenset[str] | None = None

    def validate(self, dataset: Dataset) -> None:
        for cid in self.enforced:
            if cid not in dataset.controls:
                raise UnknownControl(cid)
        if self.adversary_filter is not None:
            for aid in self.adversary_filter:
                if aid not in dataset.adversaries:
                    raise UnknownAdversary(aid)


@dataclass(frozen=True)
class ResidualReport:
    covered_techniques: frozenset[str]
    residual_mitigable: frozenset[str]  # residual techniques some cataloged control could mitigate
    residual_unmitigable: frozenset[str]  # residual techniques no control mitigates
    per_adversary_coverage: Mapping[str, float]
    fa: float  # fraction of in-scope adversaries with >=1 covered technique
    aftma: float  # mean per-adversary fraction of covered techniques
    residual_risk: float
    total_risk: float
    caveat: str = MITIGATION_CAVEAT

    @property
    def residual_techniques(self) -> frozenset[str]:
        return self.residual_mitigable | self.residual_unmitigable


def _scope(dataset: Dataset, portfolio: Portfolio) -> list[str]:
    if portfolio.adversary_filter is None:
        return sorted(dataset.adversaries)
    return sorted(portfolio.adversary_filter)


def residual_coverage(
    dataset: Dataset,
    graph: ConjunctionGraph,
    portfolio: Portfolio,
    recompute_likelihood: bool = False,
) -> ResidualReport:
    """Coverage achieved by the enforced set over the in-scope adversaries' techniques.

    Residual risk sums the graph's technique risks over uncovered techniques.
    By default risks keep their catalog-global likelihoods; pass
    recompute_likelihood=True to rebuild them over the filtered adversaries
    only.
    """
    portfolio.validate(dataset)
    if recompute_likelihood and portfolio.adversary_filter is not None:
        graph = _filtered_graph(dataset, portfolio.adversary_filter, graph.alpha)

    scope = _scope(dataset, portfolio)
    used: set[str] = set()
    for aid in scope:
        used.update(dataset.adversaries[aid].technique_ids)
    enforced_union: set[str] = set()
    for cid in portfolio.enforced:
        enforced_union.update(dataset.mitigations[cid])

    covered = used & enforced_union
    residual = used - covered
    residual_mitigable = {tid for tid in residual if dataset.technique_controls[tid]}

    per_adversary: dict[str, float] = {}
    hit = 0
    frac_sum = 0.0
    for aid in scope:
        tids = dataset.adversaries[aid].technique_ids
        cov = len(tids & covered) / len(tids) if tids else 0.0
        per_adversary[aid] = cov
        if tids & covered:
            hit += 1
        frac_sum += cov
    n = len(scope)
    return ResidualReport(
        covered_techniques=frozenset(covered),
        residual_mitigable=frozenset(residual_mitigable),
        residual_unmitigable=frozenset(residual - residual_mitigable),
        per_adversary_coverage=per_adversary,
        fa=hit / n if n else 0.0,
        aftma=frac_sum / n if n else 0.0,
        # sorted order: float sums must not depend on set iteration order
        residual_risk=sum(graph.profiles[tid].risk for tid in sorted(residual)),
        total_risk=sum(graph.profiles[tid].risk for tid in sorted(used)),
    )


def _filtered_graph(dataset: Dataset, adversary_ids: frozenset[str], alpha: float) -> ConjunctionGraph:
    """Rebuild the conjunction graph as if only the filtered adversaries existed."""
    filtered = build_dataset(
        dataset.tactics.values(),
        dataset.techniques.values(),
        dataset.controls.values(),
        [dataset.adversaries[aid] for aid in sorted(adversary_ids)],
        dataset.mitigation_pairs,
    )
    return build_conjunction_graph(filtered, alpha=alpha)


@dataclass(frozen=True)
class MarginalGain:
    control_id: str
    techniques: int  # newly covered techniques
    risk: float  # residual risk removed
    adversaries: int  # adversaries newly reaching >=1 covered technique


def _gain_against(
    dataset: Dataset,
    graph: ConjunctionGraph,
    portfolio: Portfolio,
    candidate: str,
    before: ResidualReport,
) -> MarginalGain:
    extended = Portfolio(
        enforced=portfolio.enforced | {candidate},
        adversary_filter=portfolio.adversary_filter,
    )
    after = residual_coverage(dataset, graph, extended)
    scope = _scope(dataset, portfolio)
    touched_before = sum(1 for aid in scope if before.per_adversary_coverage[aid] > 0)
    touched_after = sum(1 for aid in scope if after.per_adversary_coverage[aid] > 0)
    return MarginalGain(
        control_id=candidate,
        techniques=len(after.covered_techniques) - len(before.covered_techniques),
        risk=before.residual_risk - after.residual_risk,
        adversaries=touched_after - touched_before,
    )


def marginal_gain(
    dataset: Dataset,
    graph: ConjunctionGraph,
    portfolio: Portfolio,
    candidate: str,
) -> MarginalGain:
    """Deltas from adding one candidate control to the portfolio."""
    if candidate in portfolio.enforced:
        raise AlreadyEnforced(candidate)
    if candidate not in dataset.controls:
        raise UnknownControl(candidate)
    before = residual_coverage(dataset, graph, portfolio)
    return _gain_against(dataset, graph, portfolio, candidate, before)


@dataclass(frozen=True)
class PlanStep:
    control_id: str
    gain: float  # value of the chosen objective at this step
    techniques: int
    risk: float
    adversaries: int


OBJECTIVES = ("technique_count", "risk")


def greedy_plan(
    dataset: Dataset,
    graph: ConjunctionGraph,
    portfolio: Portfolio,
    budget_n: int,
    objective: str = "technique_count",
) -> list[PlanStep]:
    """Pick up to budget_n controls, each maximizing the marginal objective gain.

    Ties break by canonical control order; planning stops early once every
    remaining control's gain is zero.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    if budget_n < 1:
        raise ValueError(f"budget_n must be at least 1, got {budget_n}")
    portfolio.validate(dataset)

    current = portfolio
    steps: list[PlanStep] = []
    candidates = [
        cid
        for cid in sorted(dataset.controls, key=control_sort_key)
        if cid not in portfolio.enforced and dataset.mitigations[cid]
    ]
    for _ in range(budget_n):
        before = residual_coverage(dataset, graph, current)
        best: tuple[float, str, MarginalGain] | None = None
        for cid in candidates:
            gain = _gain_against(dataset, graph, current, cid, before)
            value = float(gain.techniques) if objective == "technique_count" else gain.risk
            if best is None or value > best[0]:
                best = (value, cid, gain)
        if best is None or best[0] <= 0:
            break
        value, cid, gain = best
        steps.append(
            PlanStep(
                control_id=cid,
                gain=value,
                techniques=gain.techniques,
                risk=gain.risk,
                adversaries=gain.adversaries,
            )
        )
        candidates.remove(cid)
        current = Portfolio(
            enforced=current.enforced | {cid},
            adversary_filter=current.adversary_filter,
        )
    return steps


# --- portfolio JSON documents ----------------------------------------------------


def portfolio_from_json(data: bytes | str | dict, dataset: Dataset) -> Portfolio:
    """Parse and validate a portfolio document: {"enforced": [...], "adversary_filter": [...]|null}."""
    if isinstance(data, (bytes, str)):
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"invalid JSON: {exc}") from None
    else:
        doc = data
    if not isinstance(doc, dict):
        raise MalformedDocument("expected a JSON object")
    enforced = doc.get("enforced", [])
    adv = doc.get("adversary_filter")
    if not isinstance(enforced, list) or not all(isinstance(c, str) for c in enforced):
        raise MalformedDocument("'enforced' must be an array of control ids")
    if adv is not None and (
        not isinstance(adv, list) or not all(isinstance(a, str) for a in adv)
    ):
        raise MalformedDocument("'adversary_filter' must be null or an array of adversary ids")
    portfolio = Portfolio(
        enforced=frozenset(enforced),
        adversary_filter=None if adv is None else frozenset(adv),
    )
    portfolio.validate(dataset)
    return portfolio


def portfolio_to_json(portfolio: Portfolio) -> bytes:
    doc = {
        "enforced": sorted(portfolio.enforced, key=control_sort_key),
        "adversary_filter": (
            None if portfolio.adversary_filter is None else sorted(portfolio.adversary_filter)
        ),
    }
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8")
