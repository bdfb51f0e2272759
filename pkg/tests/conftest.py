"""Shared fixtures: the worked-example datasets and a random-instance generator."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import pytest

from controlscope.model import (
    AdversaryEntity,
    Control,
    Dataset,
    Tactic,
    Technique,
    build_dataset,
)


def make_dataset(
    tactics: dict[str, str],
    techniques: dict[str, set[str]],
    controls: list[str],
    adversaries: dict[str, set[str]],
    pairs: list[tuple[str, str]],
) -> Dataset:
    """Terse dataset builder for tests: names are derived from ids."""
    return build_dataset(
        tactics=[Tactic(id=ta, name=name) for ta, name in tactics.items()],
        techniques=[
            Technique(id=te, name=f"technique {te}", tactic_ids=frozenset(tas))
            for te, tas in techniques.items()
        ],
        controls=[Control(id=c, name=f"control {c}") for c in controls],
        adversaries=[
            AdversaryEntity(id=a, name=f"adversary {a}", kind="group", technique_ids=frozenset(ts))
            for a, ts in adversaries.items()
        ],
        mitigation_pairs=pairs,
    )


@pytest.fixture
def coverage_fixture() -> Dataset:
    """Two controls, three techniques over two tactics.

    CC-1 mitigates T0001 (tactic TA0001) and T0002 (tactic TA0002); CC-2
    mitigates T0003 (tactic TA0001). Expected: TEC 2/1, TAC(CC-1) 0.5 and
    1.0, MTAC 0.75/0.25.
    """
    return make_dataset(
        tactics={"TA0001": "tactic one", "TA0002": "tactic two"},
        techniques={"T0001": {"TA0001"}, "T0002": {"TA0002"}, "T0003": {"TA0001"}},
        controls=["CC-1", "CC-2"],
        adversaries={},
        pairs=[("CC-1", "T0001"), ("CC-1", "T0002"), ("CC-2", "T0003")],
    )


@pytest.fixture
def redundancy_fixture() -> Dataset:
    """Three controls sharing three techniques: CR 0.5 / 1.0 / 1.0."""
    return make_dataset(
        tactics={"TA0001": "tactic one"},
        techniques={"T0001": {"TA0001"}, "T0002": {"TA0001"}, "T0003": {"TA0001"}},
        controls=["CC-1", "CC-2", "CC-3"],
        adversaries={},
        pairs=[
            ("CC-1", "T0001"),
            ("CC-1", "T0002"),
            ("CC-2", "T0002"),
            ("CC-2", "T0003"),
            ("CC-3", "T0003"),
        ],
    )


@pytest.fixture
def adversary_fixture() -> Dataset:
    """Four adversaries over five techniques: AC 0.75/0.5, ATC 0.625/0.375."""
    return make_dataset(
        tactics={"TA0001": "tactic one"},
        techniques={f"T000{i}": {"TA0001"} for i in range(1, 6)},
        controls=["CC-1", "CC-2"],
        adversaries={
            "G0001": {"T0001", "T0002"},
            "G0002": {"T0003", "T0004"},
            "G0003": {"T0005", "T0001"},
            "G0004": {"T0001"},
        },
        pairs=[
            ("CC-1", "T0001"),
            ("CC-1", "T0002"),
            ("CC-2", "T0003"),
            ("CC-2", "T0004"),
            ("CC-2", "T0005"),
        ],
    )


@pytest.fixture
def risk_fixture() -> Dataset:
    """Two real-world adversary playbooks sharing one technique.

    G0018 uses T1059 (Execution), T1566 (Initial Access), T1204 (Execution);
    G0099 uses T1059, T1027 (Defense Evasion), T1105 (Command and Control).
    CC-1 mitigates T1059 and T1566; CC-2 mitigates T1566.
    """
    return make_dataset(
        tactics={
            "TA0001": "Initial Access",
            "TA0002": "Execution",
            "TA0005": "Defense Evasion",
            "TA0011": "Command and Control",
        },
        techniques={
            "T1059": {"TA0002"},
            "T1566": {"TA0001"},
            "T1204": {"TA0002"},
            "T1027": {"TA0005"},
            "T1105": {"TA0011"},
        },
        controls=["CC-1", "CC-2"],
        adversaries={
            "G0018": {"T1059", "T1566", "T1204"},
            "G0099": {"T1059", "T1027", "T1105"},
        },
        pairs=[("CC-1", "T1059"), ("CC-1", "T1566"), ("CC-2", "T1566")],
    )


@pytest.fixture
def empty_dataset() -> Dataset:
    return make_dataset(tactics={}, techniques={}, controls=[], adversaries={}, pairs=[])


@dataclass
class RawInstance:
    """Primitive inputs for a random instance, shared with the oracles."""

    tactics: dict[str, str] = field(default_factory=dict)
    techniques: dict[str, set[str]] = field(default_factory=dict)  # id -> tactic ids
    controls: list[str] = field(default_factory=list)
    adversaries: dict[str, set[str]] = field(default_factory=dict)  # id -> technique ids
    pairs: list[tuple[str, str]] = field(default_factory=list)

    def build(self) -> Dataset:
        return make_dataset(self.tactics, self.techniques, self.controls, self.adversaries, self.pairs)


def random_instance(rng: random.Random) -> RawInstance:
    """Instance inside the oracle-suite envelope: <=10 controls, <=20
    techniques, <=15 adversaries, <=4 tactics."""
    inst = RawInstance()
    n_tactics = rng.randint(1, 4)
    inst.tactics = {f"TA{i:04d}": f"tactic {i}" for i in range(1, n_tactics + 1)}
    tactic_ids = list(inst.tactics)

    n_techniques = rng.randint(1, 20)
    for i in range(1, n_techniques + 1):
        k = rng.randint(1, min(2, n_tactics))
        inst.techniques[f"T{i:04d}"] = set(rng.sample(tactic_ids, k))
    technique_ids = list(inst.techniques)

    n_controls = rng.randint(1, 10)
    inst.controls = [f"CC-{i}" for i in range(1, n_controls + 1)]
    for cid in inst.controls:
        count = rng.randint(0, min(6, n_techniques))
        for tid in rng.sample(technique_ids, count):
            inst.pairs.append((cid, tid))
    # Sprinkle duplicates to exercise dedup.
    if inst.pairs and rng.random() < 0.5:
        inst.pairs.append(rng.choice(inst.pairs))

    n_adversaries = rng.randint(1, 15)
    for i in range(1, n_adversaries + 1):
        count = rng.randint(0, min(8, n_techniques))  # zero-technique entities included
        inst.adversaries[f"G{i:04d}"] = set(rng.sample(technique_ids, count))
    return inst
