"""Locate the optional real-world snapshot inputs.

The full-catalog assertions need three files the repository does not ship:
the ATT&CK enterprise v10 STIX bundle, the control-to-technique mapping
for SP800-53 rev 5, and the SP800-53 rev 5 catalog CSV. Drop them in a
directory and point CONTROLSCOPE_DATA_DIR at it (default: ./data).
"""

from __future__ import annotations

import os
from functools import lru_cache
from pathlib import Path


def data_dir() -> Path:
    return Path(os.environ.get("CONTROLSCOPE_DATA_DIR", "data"))


def _find(patterns: list[str]) -> Path | None:
    base = data_dir()
    if not base.is_dir():
        return None
    for pattern in patterns:
        hits = sorted(base.glob(pattern))
        if hits:
            return hits[0]
    return None


def find_bundle() -> Path | None:
    return _find(["enterprise-attack*.json", "*attack*10*.json", "attack.json"])


def find_mapping() -> Path | None:
    return _find(["*mapping*.csv", "*mappings*.csv", "nist800*53*.csv", "mapping.json"])


def find_catalog() -> Path | None:
    return _find(["*control*catalog*.csv", "sp800*53*.csv", "*800-53*.csv", "controls.csv"])


def snapshot_available() -> bool:
    return all((find_bundle(), find_mapping(), find_catalog()))


SKIP_REASON = (
    "snapshot inputs not present (set CONTROLSCOPE_DATA_DIR to a directory with the "
    "ATT&CK v10 enterprise STIX bundle, the SP800-53r5 mapping CSV, and the SP800-53r5 "
    "catalog CSV)"
)


@lru_cache(maxsize=1)
def load_snapshot_dataset():
    """Ingest the real files once per session; callers must have checked availability."""
    from controlscope.ingest import (
        IngestOptions,
        parse_attack_bundle,
        parse_control_catalog,
        parse_mapping,
    )
    from controlscope.model import build_dataset

    options = IngestOptions()
    tactics, techniques, adversaries = parse_attack_bundle(
        find_bundle().read_bytes(), options
    )
    controls = parse_control_catalog(find_catalog().read_bytes())
    mapping_path = find_mapping()
    fmt = "json" if mapping_path.suffix == ".json" else "csv"
    pairs = parse_mapping(mapping_path.read_bytes(), fmt, options)
    technique_ids = {te.id for te in techniques}
    control_ids = {c.id for c in controls}
    kept = [(c, t) for c, t in pairs if c in control_ids and t in technique_ids]
    return build_dataset(tactics, techniques, controls, adversaries, kept)
