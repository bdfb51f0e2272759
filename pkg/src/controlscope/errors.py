"""Exception types shared across the controlscope modules."""

from __future__ import annotations


class ControlScopeError(Exception):
    """Base class for every error raised by this package."""


# --- dataset construction -------------------------------------------------

class InvalidIdentifier(ControlScopeError):
    """An id does not match the pattern required for its record kind."""

    def __init__(self, identifier: str, kind: str):
        super().__init__(f"invalid {kind} id: {identifier!r}")
        self.identifier = identifier
        self.kind = kind


class DuplicateId(ControlScopeError):
    def __init__(self, identifier: str):
        super().__init__(f"duplicate id: {identifier!r}")
        self.identifier = identifier


class DanglingReference(ControlScopeError):
    """A record refers to an id that does not resolve in the dataset."""

    def __init__(self, identifier: str, kind: str):
        super().__init__(f"dangling {kind} reference: {identifier!r}")
        self.identifier = identifier
        self.kind = kind


# --- lookups ---------------------------------------------------------------

class UnknownControl(ControlScopeError):
    def __init__(self, control_id: str):
        super().__init__(f"unknown control: {control_id!r}")
        self.control_id = control_id


class UnknownTechnique(ControlScopeError):
    def __init__(self, technique_id: str):
        super().__init__(f"unknown technique: {technique_id!r}")
        self.technique_id = technique_id


class UnknownTactic(ControlScopeError):
    def __init__(self, tactic_id: str):
        super().__init__(f"unknown tactic: {tactic_id!r}")
        self.tactic_id = tactic_id


class UnknownAdversary(ControlScopeError):
    def __init__(self, adversary_id: str):
        super().__init__(f"unknown adversary entity: {adversary_id!r}")
        self.adversary_id = adversary_id


# --- metric preconditions ----------------------------------------------------

class EmptyTactic(ControlScopeError):
    """Tactic coverage is undefined for a tactic with zero techniques."""


class NoAdversaries(ControlScopeError):
    """Adversary-based metrics are undefined on a dataset with no entities."""


class NotAMitigatingControl(ControlScopeError):
    """Control redundancy is undefined for a control that mitigates nothing."""


class DatasetMismatch(ControlScopeError):
    """A derived artifact was built from a different dataset."""


class InvalidAlpha(ControlScopeError):
    """The severity decay constant must be positive."""


# --- ingest ------------------------------------------------------------------

class MalformedBundle(ControlScopeError):
    def __init__(self, detail: str):
        super().__init__(f"malformed STIX bundle: {detail}")
        self.detail = detail


class UnknownKillChainPhase(ControlScopeError):
    def __init__(self, name: str):
        super().__init__(f"kill chain phase has no matching tactic: {name!r}")
        self.name = name


class MalformedRow(ControlScopeError):
    def __init__(self, line: int, detail: str = ""):
        msg = f"malformed row at line {line}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.line = line
        self.detail = detail


class UnknownFormat(ControlScopeError):
    def __init__(self, fmt: str):
        super().__init__(f"unknown format: {fmt!r}")
        self.format = fmt


class SchemaVersionMismatch(ControlScopeError):
    def __init__(self, found: str, supported: str):
        super().__init__(f"unsupported schema_version {found!r} (supported: {supported})")
        self.found = found
        self.supported = supported


class MalformedDocument(ControlScopeError):
    def __init__(self, detail: str):
        super().__init__(f"malformed interchange document: {detail}")
        self.detail = detail


# --- clustering / reporting ---------------------------------------------------

class EmptyInput(ControlScopeError):
    """Operation requires at least one record/value."""


class DegenerateInput(ControlScopeError):
    """Input has fewer rows or columns than requested components."""


class TooFewRows(ControlScopeError):
    """Clustering requires at least as many rows as clusters."""


class MismatchedInput(ControlScopeError):
    """Two inputs that must describe the same controls do not line up."""


class UnknownMetric(ControlScopeError):
    def __init__(self, metric: str):
        super().__init__(f"unknown metric: {metric!r}")
        self.metric = metric


# --- portfolio -----------------------------------------------------------------

class AlreadyEnforced(ControlScopeError):
    def __init__(self, control_id: str):
        super().__init__(f"control already enforced: {control_id!r}")
        self.control_id = control_id
