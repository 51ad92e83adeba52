"""Deterministic generation and maintenance of attack-tree DAG skeletons
from an architecture model, a risk-assessment study and a security
knowledge base, with an annotation overlay for expert review."""

from .arch import Access, AccessKind, ArchitectureModel
from .dag import (
    Annotation,
    AttackDag,
    DagNode,
    Gate,
    NodeKind,
    merge_annotations,
    synth_label,
    validate_dag,
)
from .errors import AttackTreeError
from .generate import (
    AttackNature,
    GenerationConfig,
    Outcome,
    RetentionVerdict,
    generate,
    retention_verdict,
)
from .kb import KnowledgeBase, PrerequisiteKind, ThreatDef
from .maintain import ModelDiff, RegenReport, diff_models, regenerate
from .risk import FearedEvent, RiskStudy, parse_feared_event, validate_study

__version__ = "0.1.0"

__all__ = [
    "Access",
    "AccessKind",
    "Annotation",
    "ArchitectureModel",
    "AttackDag",
    "AttackNature",
    "AttackTreeError",
    "DagNode",
    "FearedEvent",
    "Gate",
    "GenerationConfig",
    "KnowledgeBase",
    "ModelDiff",
    "NodeKind",
    "Outcome",
    "PrerequisiteKind",
    "RegenReport",
    "RetentionVerdict",
    "RiskStudy",
    "ThreatDef",
    "diff_models",
    "generate",
    "merge_annotations",
    "parse_feared_event",
    "regenerate",
    "retention_verdict",
    "synth_label",
    "validate_dag",
    "validate_study",
]
