"""Parsers for the three source files and the canonical interchange format.

Sources: an ATT&CK enterprise STIX 2.x bundle, the control-to-technique
mapping (CSV or JSON), and the control catalog CSV. Everything funnels
into flat record arrays that round-trip losslessly through a versioned,
byte-stable JSON interchange document.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass

from .errors import (
    MalformedBundle,
    MalformedDocument,
    MalformedRow,
    SchemaVersionMismatch,
    UnknownFormat,
    UnknownKillChainPhase,
)
from .model import (
    AdversaryEntity,
    Control,
    Dataset,
    Tactic,
    Technique,
    build_dataset,
    control_sort_key,
)

SCHEMA_VERSION = "1"

_ENHANCEMENT_RE = re.compile(r"^([A-Za-z]{2})-0*(\d+)(?:\s*\(\d+\))?$")
_SUBTECHNIQUE_RE = re.compile(r"^(T\d{4})\.\d{3}$")


@dataclass(frozen=True)
class IngestOptions:
    rollup_subtechniques: bool = True
    include_revoked: bool = False
    include_deprecated: bool = False


def normalize_control_id(raw: str) -> str:
    """Canonicalize a control id: upper-case, strip zero padding and enhancements.

    "ac-02(1)" -> "AC-2". Returns None-equivalent by raising ValueError on
    ids without the family-number shape.
    """
    m = _ENHANCEMENT_RE.match(raw.strip())
    if not m:
        raise ValueError(f"not a control id: {raw!r}")
    return f"{m.group(1).upper()}-{int(m.group(2))}"


def normalize_technique_id(raw: str, rollup: bool) -> str:
    tid = raw.strip().upper()
    if rollup:
        m = _SUBTECHNIQUE_RE.match(tid)
        if m:
            return m.group(1)
    return tid


# --- ATT&CK STIX bundle -------------------------------------------------------


def _external_id(obj: dict) -> str | None:
    for ref in obj.get("external_references", []):
        if ref.get("source_name") == "mitre-attack" and "external_id" in ref:
            return ref["external_id"]
    return None


def _dropped(obj: dict, options: IngestOptions) -> bool:
    if obj.get("revoked") and not options.include_revoked:
        return True
    if obj.get("x_mitre_deprecated") and not options.include_deprecated:
        return True
    return False


def parse_attack_bundle(
    stix_json_bytes: bytes, options: IngestOptions = IngestOptions()
) -> tuple[list[Tactic], list[Technique], list[AdversaryEntity]]:
    """Extract tactics, techniques and adversary entities from a STIX bundle.

    Technique tactic memberships come from mitre-attack kill-chain phases
    resolved through the bundle's tactic shortnames. With rollup enabled,
    sub-techniques fold into their parents (tactic memberships merged, uses
    attributed to the parent).
    """
    try:
        bundle = json.loads(stix_json_bytes)
    except json.JSONDecodeError as exc:
        raise MalformedBundle(f"invalid JSON: {exc}") from None
    if not isinstance(bundle, dict) or not isinstance(bundle.get("objects"), list):
        raise MalformedBundle("missing top-level 'objects' array")

    objects = [o for o in bundle["objects"] if isinstance(o, dict)]

    # tactic shortname ("initial-access") -> tactic id, for kill-chain resolution
    tactics: dict[str, Tactic] = {}
    shortname_to_id: dict[str, str] = {}
    for obj in objects:
        if obj.get("type") != "x-mitre-tactic" or _dropped(obj, options):
            continue
        ext_id = _external_id(obj)
        if not ext_id:
            raise MalformedBundle(f"tactic without external id: {obj.get('id')}")
        tactics[ext_id] = Tactic(id=ext_id, name=obj.get("name", ext_id))
        shortname_to_id[obj.get("x_mitre_shortname", "")] = ext_id

    # First pass over attack-patterns: id resolution and raw memberships.
    stix_to_ext: dict[str, str] = {}
    raw_techniques: dict[str, tuple[str, set[str]]] = {}  # ext id -> (name, tactic ids)
    for obj in objects:
        if obj.get("type") != "attack-pattern" or _dropped(obj, options):
            continue
        ext_id = _external_id(obj)
        if not ext_id:
            raise MalformedBundle(f"attack-pattern without external id: {obj.get('id')}")
        phase_tactics: set[str] = set()
        for phase in obj.get("kill_chain_phases", []):
            if phase.get("kill_chain_name") != "mitre-attack":
                continue
            name = phase.get("phase_name", "")
            if name not in shortname_to_id:
                raise UnknownKillChainPhase(name)
            phase_tactics.add(shortname_to_id[name])
        stix_to_ext[obj["id"]] = ext_id
        raw_techniques[ext_id] = (obj.get("name", ext_id), phase_tactics)

    techniques: dict[str, tuple[str, set[str]]] = {}
    folded: dict[str, str] = {}  # sub-technique ext id -> parent ext id
    for ext_id, (name, tactic_ids) in raw_techniques.items():
        if options.rollup_subtechniques and (m := _SUBTECHNIQUE_RE.match(ext_id)):
            folded[ext_id] = m.group(1)
            continue
        techniques.setdefault(ext_id, (name, set()))[1].update(tactic_ids)
    for sub_id, parent_id in folded.items():
        name, tactic_ids = raw_techniques[sub_id]
        if parent_id not in techniques:
            # Orphan sub-technique: promote it so its usage is not lost.
            techniques[parent_id] = (name, set())
        techniques[parent_id][1].update(tactic_ids)

    # Adversary entities and their uses relationships.
    adversary_meta: dict[str, tuple[str, str, str]] = {}  # stix id -> (ext, name, kind)
    for obj in objects:
        kind = {"intrusion-set": "group", "malware": "malware", "tool": "malware"}.get(
            obj.get("type", "")
        )
        if kind is None or _dropped(obj, options):
            continue
        ext_id = _external_id(obj)
        if not ext_id:
            raise MalformedBundle(f"{obj.get('type')} without external id: {obj.get('id')}")
        adversary_meta[obj["id"]] = (ext_id, obj.get("name", ext_id), kind)

    usage: dict[str, set[str]] = {stix_id: set() for stix_id in adversary_meta}
    for obj in objects:
        if obj.get("type") != "relationship" or obj.get("relationship_type") != "uses":
            continue
        if _dropped(obj, options):
            continue
        src, tgt = obj.get("source_ref", ""), obj.get("target_ref", "")
        if src not in adversary_meta or tgt not in stix_to_ext:
            continue
        used = stix_to_ext[tgt]
        if options.rollup_subtechniques:
            used = folded.get(used, used)
        if used in techniques:
            usage[src].add(used)

    adversaries = [
        AdversaryEntity(id=ext, name=name, kind=kind, technique_ids=frozenset(usage[stix_id]))
        for stix_id, (ext, name, kind) in adversary_meta.items()
    ]
    technique_records = [
        Technique(id=tid, name=name, tactic_ids=frozenset(tactic_ids))
        for tid, (name, tactic_ids) in techniques.items()
        if tactic_ids  # a technique must belong to at least one tactic
    ]
    return (
        sorted(tactics.values(), key=lambda t: t.id),
        sorted(technique_records, key=lambda t: t.id),
        sorted(adversaries, key=lambda a: a.id),
    )


# --- control-to-technique mapping ----------------------------------------------


def _find_column(headers: list[str], *needles: str) -> int | None:
    for i, header in enumerate(headers):
        lowered = header.lower()
        if all(n in lowered for n in needles):
            return i
    return None


def parse_mapping(
    mapping_bytes: bytes,
    format: str = "csv",
    options: IngestOptions = IngestOptions(),
) -> list[tuple[str, str]]:
    """Parse (control id, technique id) pairs from the mapping file.

    Ids are upper-cased, control enhancements fold to their base control,
    and sub-technique targets fold to parents under rollup. Duplicates are
    removed; pair order is canonical (control order, then technique id).
    """
    if format == "csv":
        raw_pairs = _mapping_rows_csv(mapping_bytes)
    elif format == "json":
        raw_pairs = _mapping_rows_json(mapping_bytes)
    else:
        raise UnknownFormat(format)

    pairs: set[tuple[str, str]] = set()
    for line, control_raw, technique_raw in raw_pairs:
        try:
            cid = normalize_control_id(control_raw)
        except ValueError:
            raise MalformedRow(line, f"bad control id {control_raw!r}") from None
        tid = normalize_technique_id(technique_raw, options.rollup_subtechniques)
        if not re.match(r"^T\d{4}(?:\.\d{3})?$", tid):
            raise MalformedRow(line, f"bad technique id {technique_raw!r}")
        pairs.add((cid, tid))
    return sorted(pairs, key=lambda p: (control_sort_key(p[0]), p[1]))


def _mapping_rows_csv(data: bytes) -> list[tuple[int, str, str]]:
    text = data.decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader]
    if not rows:
        return []
    headers = rows[0]
    ctrl_col = _find_column(headers, "control", "id")
    tech_col = _find_column(headers, "technique", "id")
    if ctrl_col is None or tech_col is None:
        # Headerless two-column form: (control id, technique id).
        ctrl_col, tech_col, start = 0, 1, 0
    else:
        start = 1
    out: list[tuple[int, str, str]] = []
    for line, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) <= max(ctrl_col, tech_col):
            raise MalformedRow(line, "missing columns")
        out.append((line, row[ctrl_col], row[tech_col]))
    return out


def _mapping_rows_json(data: bytes) -> list[tuple[int, str, str]]:
    try:
        doc = json.loads(data) if data.strip() else []
    except json.JSONDecodeError as exc:
        raise MalformedRow(exc.lineno, "invalid JSON") from None
    if not isinstance(doc, list):
        raise MalformedRow(1, "expected a JSON array of mapping records")
    out: list[tuple[int, str, str]] = []
    for i, rec in enumerate(doc, start=1):
        if isinstance(rec, dict):
            cid = next((rec[k] for k in ("control_id", "controlID", "control") if k in rec), None)
            tid = next(
                (rec[k] for k in ("technique_id", "techniqueID", "technique") if k in rec), None
            )
            if cid is None or tid is None:
                raise MalformedRow(i, "record missing control/technique id")
            out.append((i, str(cid), str(tid)))
        elif isinstance(rec, (list, tuple)) and len(rec) >= 2:
            out.append((i, str(rec[0]), str(rec[1])))
        else:
            raise MalformedRow(i, "unrecognized record shape")
    return out


# --- control catalog -------------------------------------------------------------


def parse_control_catalog(catalog_bytes: bytes) -> list[Control]:
    """Parse the control catalog CSV into base controls.

    Rows carry (id, name); enhancement rows fold into their base control
    (the base row's name wins when both are present) and rows marked
    withdrawn are dropped.
    """
    text = catalog_bytes.decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader]
    if not rows:
        return []
    headers = rows[0]
    id_col = _find_column(headers, "identifier")
    if id_col is None:
        id_col = _find_column(headers, "id")
    name_col = _find_column(headers, "name")
    if name_col is None:
        name_col = _find_column(headers, "title")
    if id_col is None or name_col is None:
        id_col, name_col, start = 0, 1, 0
    else:
        start = 1

    controls: dict[str, Control] = {}
    for line, row in enumerate(rows[start:], start=start + 1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) <= max(id_col, name_col):
            raise MalformedRow(line, "missing columns")
        raw_id, name = row[id_col].strip(), row[name_col].strip()
        if name.lower().startswith("withdrawn"):
            continue
        is_enhancement = "(" in raw_id
        try:
            cid = normalize_control_id(raw_id)
        except ValueError:
            raise MalformedRow(line, f"bad control id {raw_id!r}") from None
        if is_enhancement:
            # Base name before the enhancement qualifier, if we must synthesize.
            base_name = re.split(r"\s*[|:]\s*", name)[0]
            controls.setdefault(cid, Control(id=cid, name=base_name))
        else:
            controls[cid] = Control(id=cid, name=name)
    return sorted(controls.values(), key=lambda c: control_sort_key(c.id))


# --- interchange document ----------------------------------------------------------


def save_interchange(dataset: Dataset) -> bytes:
    """Serialize a dataset to the canonical interchange JSON (byte-stable)."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tactics": [
            {"id": ta.id, "name": ta.name}
            for ta in sorted(dataset.tactics.values(), key=lambda t: t.id)
        ],
        "techniques": [
            {"id": te.id, "name": te.name, "tactic_ids": sorted(te.tactic_ids)}
            for te in sorted(dataset.techniques.values(), key=lambda t: t.id)
        ],
        "controls": [
            {"id": c.id, "name": c.name, "family": c.family}
            for c in sorted(dataset.controls.values(), key=lambda c: control_sort_key(c.id))
        ],
        "adversaries": [
            {
                "id": ae.id,
                "name": ae.name,
                "kind": ae.kind,
                "technique_ids": sorted(ae.technique_ids),
            }
            for ae in sorted(dataset.adversaries.values(), key=lambda a: a.id)
        ],
        "mitigations": [
            {"control_id": cid, "technique_id": tid} for cid, tid in dataset.mitigation_pairs
        ],
    }
    return (json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def load_interchange(data: bytes) -> Dataset:
    """Parse interchange JSON back into a Dataset (inverse of save_interchange)."""
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedDocument("expected a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(str(version), SCHEMA_VERSION)
    try:
        tactics = [Tactic(id=t["id"], name=t["name"]) for t in doc.get("tactics", [])]
        techniques = [
            Technique(id=t["id"], name=t["name"], tactic_ids=frozenset(t["tactic_ids"]))
            for t in doc.get("techniques", [])
        ]
        controls = [Control(id=c["id"], name=c["name"]) for c in doc.get("controls", [])]
        adversaries = [
            AdversaryEntity(
                id=a["id"],
                name=a["name"],
                kind=a["kind"],
                technique_ids=frozenset(a["technique_ids"]),
            )
            for a in doc.get("adversaries", [])
        ]
        pairs = [(m["control_id"], m["technique_id"]) for m in doc.get("mitigations", [])]
    except (KeyError, TypeError) as exc:
        raise MalformedDocument(f"missing or mistyped field: {exc}") from None
    return build_dataset(tactics, techniques, controls, adversaries, pairs)
