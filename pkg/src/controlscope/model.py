"""Canonical domain types and the indexed, immutable dataset.

The dataset joins four catalogs: adversary tactics, the techniques that
realize them, the security controls that mitigate techniques, and the
adversary entities (cybercrime groups and malware) observed using
techniques. All downstream analysis reads the dataset through the
accessors here; nothing mutates it after construction.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import (
    DanglingReference,
    DuplicateId,
    InvalidIdentifier,
    UnknownControl,
    UnknownTechnique,
)

TACTIC_ID_RE = re.compile(r"^TA\d{4}$")
# Parent-level ids are the norm; the sub-technique suffix is only reachable
# when ingest is told not to roll sub-techniques up.
TECHNIQUE_ID_RE = re.compile(r"^T\d{4}(?:\.\d{3})?$")
CONTROL_ID_RE = re.compile(r"^[A-Z]{2}-\d+$")


def control_sort_key(control_id: str) -> tuple[str, int]:
    """Canonical control ordering: family lexicographic, then numeric suffix.

    "AC-2" < "AC-10" < "CA-7". Used for every control-id tie-break.
    """
    family, _, num = control_id.partition("-")
    return (family, int(num))


@dataclass(frozen=True)
class Tactic:
    """An adversary's high-level goal, e.g. TA0004 Privilege Escalation."""

    id: str
    name: str

    def __post_init__(self):
        if not TACTIC_ID_RE.match(self.id):
            raise InvalidIdentifier(self.id, "tactic")


@dataclass(frozen=True)
class Technique:
    """A method used to achieve one or more tactics, e.g. T1110 Brute Force."""

    id: str
    name: str
    tactic_ids: frozenset[str]

    def __post_init__(self):
        if not TECHNIQUE_ID_RE.match(self.id):
            raise InvalidIdentifier(self.id, "technique")
        object.__setattr__(self, "tactic_ids", frozenset(self.tactic_ids))
        if not self.tactic_ids:
            raise InvalidIdentifier(self.id, "technique (empty tactic set)")


@dataclass(frozen=True)
class Control:
    """A safeguard from the control catalog, e.g. SI-4 System Monitoring."""

    id: str
    name: str
    family: str = ""

    def __post_init__(self):
        if not CONTROL_ID_RE.match(self.id):
            raise InvalidIdentifier(self.id, "control")
        prefix = self.id.partition("-")[0]
        if not self.family:
            object.__setattr__(self, "family", prefix)
        elif self.family != prefix:
            raise InvalidIdentifier(self.id, f"control (family {self.family!r} != prefix)")


@dataclass(frozen=True)
class AdversaryEntity:
    """A cataloged cybercrime group or malware with its observed technique set.

    The technique set may be empty: such entities stay in the dataset and
    keep counting toward adversary-population denominators.
    """

    id: str
    name: str
    kind: str  # "group" | "malware"
    technique_ids: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.id:
            raise InvalidIdentifier(self.id, "adversary")
        if self.kind not in ("group", "malware"):
            raise InvalidIdentifier(self.id, f"adversary (kind {self.kind!r})")
        object.__setattr__(self, "technique_ids", frozenset(self.technique_ids))


@dataclass(frozen=True)
class Dataset:
    """Immutable normalized graph of tactics, techniques, controls and adversaries.

    `mitigations` maps control id -> technique ids; the three derived
    indexes are exact inverses/projections of the stored relations and are
    rebuilt (never patched) on construction.
    """

    tactics: Mapping[str, Tactic]
    techniques: Mapping[str, Technique]
    controls: Mapping[str, Control]
    adversaries: Mapping[str, AdversaryEntity]
    mitigations: Mapping[str, frozenset[str]]
    technique_controls: Mapping[str, frozenset[str]]
    technique_adversaries: Mapping[str, frozenset[str]]
    tactic_techniques: Mapping[str, frozenset[str]]
    fingerprint: str

    @property
    def mitigation_pairs(self) -> list[tuple[str, str]]:
        """Deduplicated (control id, technique id) pairs in canonical order."""
        return [
            (cid, tid)
            for cid in sorted(self.mitigations, key=control_sort_key)
            for tid in sorted(self.mitigations[cid])
        ]

    def mitigating_control_ids(self) -> list[str]:
        """Controls that mitigate at least one technique, in canonical order."""
        return sorted(
            (cid for cid, tids in self.mitigations.items() if tids),
            key=control_sort_key,
        )

    def unmitigated_technique_ids(self) -> list[str]:
        """Techniques no control mitigates, sorted by id."""
        return sorted(tid for tid, cids in self.technique_controls.items() if not cids)


def _fingerprint(
    tactics: dict[str, Tactic],
    techniques: dict[str, Technique],
    controls: dict[str, Control],
    adversaries: dict[str, AdversaryEntity],
    mitigations: dict[str, frozenset[str]],
) -> str:
    h = hashlib.sha256()
    for ta in sorted(tactics):
        h.update(f"ta|{ta}|{tactics[ta].name}\n".encode())
    for te in sorted(techniques):
        rec = techniques[te]
        h.update(f"te|{te}|{rec.name}|{','.join(sorted(rec.tactic_ids))}\n".encode())
    for c in sorted(controls):
        h.update(f"c|{c}|{controls[c].name}\n".encode())
    for a in sorted(adversaries):
        rec = adversaries[a]
        h.update(f"ae|{a}|{rec.name}|{rec.kind}|{','.join(sorted(rec.technique_ids))}\n".encode())
    for c in sorted(mitigations):
        h.update(f"m|{c}|{','.join(sorted(mitigations[c]))}\n".encode())
    return h.hexdigest()


def build_dataset(
    tactics: Iterable[Tactic],
    techniques: Iterable[Technique],
    controls: Iterable[Control],
    adversaries: Iterable[AdversaryEntity],
    mitigation_pairs: Iterable[tuple[str, str]],
) -> Dataset:
    """Validate the inputs, build the derived indexes, and freeze the dataset.

    Mitigation pairs are deduplicated. Raises DuplicateId on any repeated
    id within a collection and DanglingReference on any edge that does not
    resolve.
    """
    tactic_map: dict[str, Tactic] = {}
    for ta in tactics:
        if ta.id in tactic_map:
            raise DuplicateId(ta.id)
        tactic_map[ta.id] = ta

    technique_map: dict[str, Technique] = {}
    for te in techniques:
        if te.id in technique_map:
            raise DuplicateId(te.id)
        for ta_id in te.tactic_ids:
            if ta_id not in tactic_map:
                raise DanglingReference(ta_id, "tactic")
        technique_map[te.id] = te

    control_map: dict[str, Control] = {}
    for c in controls:
        if c.id in control_map:
            raise DuplicateId(c.id)
        control_map[c.id] = c

    adversary_map: dict[str, AdversaryEntity] = {}
    for ae in adversaries:
        if ae.id in adversary_map:
            raise DuplicateId(ae.id)
        for te_id in ae.technique_ids:
            if te_id not in technique_map:
                raise DanglingReference(te_id, "technique")
        adversary_map[ae.id] = ae

    mitigation_sets: dict[str, set[str]] = {cid: set() for cid in control_map}
    for cid, tid in mitigation_pairs:
        if cid not in control_map:
            raise DanglingReference(cid, "control")
        if tid not in technique_map:
            raise DanglingReference(tid, "technique")
        mitigation_sets[cid].add(tid)
    mitigations = {cid: frozenset(tids) for cid, tids in mitigation_sets.items()}

    technique_controls: dict[str, set[str]] = {tid: set() for tid in technique_map}
    for cid, tids in mitigations.items():
        for tid in tids:
            technique_controls[tid].add(cid)

    technique_adversaries: dict[str, set[str]] = {tid: set() for tid in technique_map}
    for aid, ae in adversary_map.items():
        for tid in ae.technique_ids:
            technique_adversaries[tid].add(aid)

    tactic_techniques: dict[str, set[str]] = {ta_id: set() for ta_id in tactic_map}
    for tid, te in technique_map.items():
        for ta_id in te.tactic_ids:
            tactic_techniques[ta_id].add(tid)

    return Dataset(
        tactics=MappingProxyType(tactic_map),
        techniques=MappingProxyType(technique_map),
        controls=MappingProxyType(control_map),
        adversaries=MappingProxyType(adversary_map),
        mitigations=MappingProxyType(mitigations),
        technique_controls=MappingProxyType(
            {tid: frozenset(cids) for tid, cids in technique_controls.items()}
        ),
        technique_adversaries=MappingProxyType(
            {tid: frozenset(aids) for tid, aids in technique_adversaries.items()}
        ),
        tactic_techniques=MappingProxyType(
            {ta: frozenset(tids) for ta, tids in tactic_techniques.items()}
        ),
        fingerprint=_fingerprint(tactic_map, technique_map, control_map, adversary_map, mitigations),
    )


def mitigated_techniques(dataset: Dataset, control_id: str) -> frozenset[str]:
    """Technique ids mitigated by the control; empty for non-mitigating controls."""
    if control_id not in dataset.controls:
        raise UnknownControl(control_id)
    return dataset.mitigations[control_id]


def mitigating_controls(dataset: Dataset, technique_id: str) -> frozenset[str]:
    """Control ids mitigating the technique; empty means the technique is unmitigated."""
    if technique_id not in dataset.techniques:
        raise UnknownTechnique(technique_id)
    return dataset.technique_controls[technique_id]
