"""controlscope: prioritize security controls against cataloged adversary techniques."""

from .model import (
    AdversaryEntity,
    Control,
    Dataset,
    Tactic,
    Technique,
    build_dataset,
    mitigated_techniques,
    mitigating_controls,
)
from .metrics import MetricsRecord, ac, atc, cr, evaluate_all, mtac, tac, tec
from .risk import (
    ConjunctionGraph,
    build_conjunction_graph,
    cmr,
    likelihood,
    severity,
    technique_risk,
)

__version__ = "0.1.0"

__all__ = [
    "AdversaryEntity",
    "ConjunctionGraph",
    "Control",
    "Dataset",
    "MetricsRecord",
    "Tactic",
    "Technique",
    "__version__",
    "ac",
    "atc",
    "build_conjunction_graph",
    "build_dataset",
    "cmr",
    "cr",
    "evaluate_all",
    "likelihood",
    "mitigated_techniques",
    "mitigating_controls",
    "mtac",
    "severity",
    "tac",
    "tec",
    "technique_risk",
]
