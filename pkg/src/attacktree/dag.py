"""Attack DAG data structure: typed nodes, OR/AND gates, canonical path
identities, provenance links, status flags, deterministic label synthesis,
structural validation and annotation-overlay merging.

Canonical paths are slash-joined sequences of stable artefact ids from the
root down, never display names, so renaming an artefact relabels nodes
without moving them and expert annotations survive regeneration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Iterator

from .errors import ModelInvariantError

if TYPE_CHECKING:
    from .arch import ArchitectureModel
    from .kb import KnowledgeBase
    from .risk import RiskStudy

FORMAT_VERSION = 1

# provenance entries carrying the retention verdict rather than an artefact id
VERDICT_PREFIX = "verdict:"


class NodeKind(str, Enum):
    ROOT = "root"
    STATE = "state"
    MODE = "mode"
    ASSET_TYPE = "asset_type"
    ENTRY_POINT = "entry_point"
    THREAT = "threat"
    THREAT_SOURCE = "threat_source"
    PRECONDITION = "precondition"
    ATTACK_STUB = "attack_stub"
    POSTCONDITION = "postcondition"
    EXPERT = "expert"


class Gate(str, Enum):
    OR = "or"
    AND = "and"


LEAF_KINDS = frozenset({
    NodeKind.PRECONDITION, NodeKind.ATTACK_STUB, NodeKind.POSTCONDITION,
    NodeKind.EXPERT,
})

# layer discipline: which child kinds may follow a given kind (the asset
# type layer is optional; modes may be absent below a state)
ALLOWED_CHILD_KINDS: dict[NodeKind, frozenset[NodeKind]] = {
    NodeKind.ROOT: frozenset({NodeKind.STATE}),
    NodeKind.STATE: frozenset({NodeKind.MODE, NodeKind.ASSET_TYPE, NodeKind.ENTRY_POINT}),
    NodeKind.MODE: frozenset({NodeKind.ASSET_TYPE, NodeKind.ENTRY_POINT}),
    NodeKind.ASSET_TYPE: frozenset({NodeKind.ENTRY_POINT}),
    NodeKind.ENTRY_POINT: frozenset({NodeKind.THREAT}),
    NodeKind.THREAT: frozenset({NodeKind.THREAT_SOURCE}),
    NodeKind.THREAT_SOURCE: LEAF_KINDS,
    NodeKind.PRECONDITION: frozenset(),
    NodeKind.ATTACK_STUB: frozenset(),
    NodeKind.POSTCONDITION: frozenset(),
    NodeKind.EXPERT: frozenset(),
}

STATUS_GENERATED = "generated"
STATUS_WARNING_ORPHANED = "warning_orphaned"
STATUS_NEW_SINCE_LAST = "new_since_last"
STATUS_EXPERT_REQUIRED = "expert_required"
STATUS_DISPUTABLE = "disputable"

KNOWN_STATUS = frozenset({
    STATUS_GENERATED, STATUS_WARNING_ORPHANED, STATUS_NEW_SINCE_LAST,
    STATUS_EXPERT_REQUIRED, STATUS_DISPUTABLE,
})


@dataclass
class DagNode:
    path: str
    kind: NodeKind
    gate: Gate | None
    label: str
    provenance: list[str] = field(default_factory=list)
    status: set[str] = field(default_factory=set)
    children: list["DagNode"] = field(default_factory=list)
    summary: dict | None = None

    def segment(self) -> str:
        return self.path.rsplit("/", 1)[-1]


class AttackDag:
    """Rooted DAG with unique canonical paths per node."""

    def __init__(self, feared_event: str, root: DagNode):
        self.feared_event = feared_event
        self.root = root
        self.nodes: dict[str, DagNode] = {root.path: root}

    def add(self, parent: DagNode, node: DagNode) -> DagNode:
        """Attach ``node`` under ``parent``; an existing node at the same
        path is shared instead (DAG mode)."""
        existing = self.nodes.get(node.path)
        if existing is not None:
            if existing.kind is not node.kind:
                raise ModelInvariantError(
                    f"path '{node.path}' reused with a different node kind"
                )
            parent.children.append(existing)
            return existing
        self.nodes[node.path] = node
        parent.children.append(node)
        return node

    def node(self, path: str) -> DagNode | None:
        return self.nodes.get(path)

    def walk(self) -> Iterator[DagNode]:
        """Deterministic pre-order traversal; shared nodes yielded once,
        at their first encounter."""
        seen: set[str] = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.path in seen:
                continue
            seen.add(node.path)
            yield node
            stack.extend(reversed(node.children))

    def edges(self) -> list[tuple[str, str]]:
        """Parent->child pairs in traversal order (shared children appear
        once per parent)."""
        out: list[tuple[str, str]] = []
        seen: set[str] = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.path in seen:
                continue
            seen.add(node.path)
            for child in node.children:
                out.append((node.path, child.path))
            stack.extend(reversed(node.children))
        return out

    def parents(self, path: str) -> list[str]:
        return [p for (p, c) in self.edges() if c == path]

    # -- serialization -------------------------------------------------------

    def to_doc(self) -> dict:
        nodes = []
        for node in self.walk():
            entry = {
                "path": node.path,
                "kind": node.kind.value,
                "gate": node.gate.value if node.gate else None,
                "label": node.label,
                "provenance": list(node.provenance),
                "status": sorted(node.status),
            }
            if node.summary is not None:
                entry["summary"] = node.summary
            nodes.append(entry)
        return {
            "format_version": FORMAT_VERSION,
            "feared_event": self.feared_event,
            "nodes": nodes,
            "edges": [[p, c] for (p, c) in self.edges()],
        }

    def to_text(self) -> str:
        return json.dumps(self.to_doc(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_doc(cls, doc: dict) -> "AttackDag":
        by_path: dict[str, DagNode] = {}
        order: list[str] = []
        for entry in doc["nodes"]:
            node = DagNode(
                path=entry["path"],
                kind=NodeKind(entry["kind"]),
                gate=Gate(entry["gate"]) if entry.get("gate") else None,
                label=entry["label"],
                provenance=list(entry.get("provenance", [])),
                status=set(entry.get("status", [])),
                summary=entry.get("summary"),
            )
            by_path[node.path] = node
            order.append(node.path)
        for parent_path, child_path in doc["edges"]:
            by_path[parent_path].children.append(by_path[child_path])
        root = by_path[order[0]]
        dag = cls(doc["feared_event"], root)
        dag.nodes = by_path
        return dag


# -- label synthesis ---------------------------------------------------------


class NameResolver:
    """Maps stable artefact ids to (role, display name) across the three
    input models. Severity labels resolve through the study scale."""

    def __init__(self, model: "ArchitectureModel", study: "RiskStudy",
                 kb: "KnowledgeBase"):
        self._names: dict[str, tuple[str, str]] = {}

        def put(role: str, items):
            for item in items:
                self._names.setdefault(item.id, (role, item.name))

        put("entity", model.entities)
        put("activity", model.activities)
        put("process", model.processes)
        put("state", model.states)
        for st in model.states:
            put("mode", st.modes)
        put("component", model.components)
        put("interface", model.interfaces)
        put("chain", model.chains)
        put("asset_type", kb.asset_types)
        put("criterion", kb.criteria)
        put("primary_asset", study.primary_assets)
        put("threat_source", study.threat_sources)
        for th in kb.threats:
            self._names.setdefault(th.code, ("threat", th.description))
        for label in study.severity_scale.labels:
            self._names.setdefault(label, ("severity", label))
        self._kb = kb

    def exists(self, artefact_id: str) -> bool:
        return artefact_id in self._names

    def role(self, artefact_id: str) -> str | None:
        entry = self._names.get(artefact_id)
        return entry[0] if entry else None

    def name(self, artefact_id: str) -> str | None:
        entry = self._names.get(artefact_id)
        return entry[1] if entry else None

    def prerequisite(self, code: str, ordinal: int):
        try:
            threat = self._kb.threat(code)
            return threat.prerequisites[ordinal - 1]
        except Exception:
            return None


SYNTHETIC_CONTEXT_SEGMENT = "ctx-any"
SYNTHETIC_CONTEXT_LABEL = "in any system state and mode (state/activity matrix is empty)"


def synth_label(node: DagNode, model: "ArchitectureModel", study: "RiskStudy",
                kb: "KnowledgeBase") -> str:
    """Synthesize the node label from current artefact display names.

    Pure function of the provenance names and a fixed template per node
    kind. If any provenance artefact no longer resolves, the last-known
    label is kept unchanged (the caller flags the node as orphaned).
    """
    return _synth_label(node, NameResolver(model, study, kb))


def _synth_label(node: DagNode, resolver: NameResolver) -> str:
    if node.kind is NodeKind.STATE and node.segment() == SYNTHETIC_CONTEXT_SEGMENT:
        return SYNTHETIC_CONTEXT_LABEL

    vals: dict[str, list[str]] = {}
    for pid in node.provenance:
        if pid.startswith(VERDICT_PREFIX):
            continue
        role = resolver.role(pid)
        if role is None:
            return node.label  # orphaned provenance: keep last-known names
        vals.setdefault(role, []).append(resolver.name(pid) or pid)

    def one(role: str, default: str = "?") -> str:
        return vals.get(role, [default])[0]

    context = ""
    if "state" in vals:
        context = f" while {one('entity')} is in state {one('state')}"
        if "mode" in vals:
            context += f", mode {one('mode')}"
    elif node.segment().startswith(SYNTHETIC_CONTEXT_SEGMENT):
        context = " " + SYNTHETIC_CONTEXT_LABEL

    kind = node.kind
    if kind is NodeKind.ROOT:
        label = (f"Loss of {one('criterion')} of the {one('primary_asset')} "
                 f"on the {one('entity')}")
        if "severity" in vals:
            label += f" [{one('severity')}]"
        return label
    if kind in (NodeKind.STATE, NodeKind.MODE):
        return (f"Loss of {one('criterion')} of the {one('primary_asset')} "
                f"on the {one('entity')}{context}")
    if kind is NodeKind.ASSET_TYPE:
        return f"Attack through {one('asset_type')} supporting assets{context}"
    if kind is NodeKind.ENTRY_POINT:
        if "interface" in vals:
            return (f"Attack through interface {one('interface')} "
                    f"({one('asset_type')}){context}")
        return f"Attack on {one('component')} ({_type_phrase(vals)}){context}"
    if kind is NodeKind.THREAT:
        return f"{one('threat')} targeting {_entry_phrase(vals)}{context}"
    if kind is NodeKind.THREAT_SOURCE:
        return (f"{one('threat')} targeting {_entry_phrase(vals)} "
                f"carried out by {one('threat_source')}{context}")
    if kind is NodeKind.PRECONDITION:
        code = next((pid for pid in node.provenance
                     if resolver.role(pid) == "threat"), None)
        prereq = resolver.prerequisite(code, _pre_ordinal(node)) if code else None
        if prereq is None:
            return node.label
        label = f"Precondition: {prereq.text}"
        if prereq.state is not None and resolver.exists(prereq.state):
            ref = f" [see state {resolver.name(prereq.state)}"
            if prereq.mode is not None and resolver.exists(prereq.mode):
                ref += f", mode {resolver.name(prereq.mode)}"
            label = f"Precondition: {prereq.text}{ref}]"
        return label
    if kind is NodeKind.ATTACK_STUB:
        nature = ""
        seg = node.segment()
        if seg.endswith("intentional"):
            nature = "intentional "
        elif seg.endswith("accidental"):
            nature = "accidental "
        return (f"Carry out {nature}{one('threat')} on {_entry_phrase(vals)} "
                f"(to be developed by the security expert)")
    if kind is NodeKind.POSTCONDITION:
        return "Postcondition: ensure repudiation of the attack"
    return node.label


def _type_phrase(vals: dict[str, list[str]]) -> str:
    names = vals.get("asset_type", [])
    if len(names) > 1:
        return " and ".join(names)
    return names[0] if names else "untyped"


def _entry_phrase(vals: dict[str, list[str]]) -> str:
    if "interface" in vals:
        return f"interface {vals['interface'][0]}"
    if "component" in vals:
        return vals["component"][0]
    return "?"


def _pre_ordinal(node: DagNode) -> int:
    seg = node.segment()
    try:
        return int(seg.removeprefix("pre"))
    except ValueError:
        return 0


# -- structural validation -----------------------------------------------------


@dataclass(frozen=True)
class DagDiagnostic:
    code: str
    path: str
    message: str


def validate_dag(dag: AttackDag) -> list[DagDiagnostic]:
    """Layer-order violations, cycles, misplaced AND gates and duplicate
    paths, reported rather than raised."""
    diags: list[DagDiagnostic] = []

    # duplicate paths: two distinct objects claiming the same identity
    seen_objects: dict[str, int] = {}
    cycle_found = False

    def visit(node: DagNode, trail: tuple[str, ...]):
        nonlocal cycle_found
        if node.path in trail:
            if not cycle_found:
                diags.append(DagDiagnostic(
                    "cycle", node.path, f"cycle through '{node.path}'"))
                cycle_found = True
            return
        prev = seen_objects.get(node.path)
        if prev is None:
            seen_objects[node.path] = id(node)
        elif prev != id(node):
            diags.append(DagDiagnostic(
                "duplicate-path", node.path,
                f"two distinct nodes share path '{node.path}'"))
            return
        else:
            return  # shared node already checked
        if node.gate is Gate.AND and node.kind is not NodeKind.THREAT_SOURCE:
            diags.append(DagDiagnostic(
                "and-placement", node.path,
                f"AND gate above the threat-source layer at '{node.path}'"))
        if node.children and node.gate is None:
            diags.append(DagDiagnostic(
                "missing-gate", node.path,
                f"internal node '{node.path}' has no gate"))
        allowed = ALLOWED_CHILD_KINDS[node.kind]
        for child in node.children:
            if child.kind not in allowed:
                diags.append(DagDiagnostic(
                    "layer-order", child.path,
                    f"'{child.kind.value}' node may not follow '{node.kind.value}'"))
            visit(child, trail + (node.path,))

    visit(dag.root, ())
    return diags


# -- annotation overlay ---------------------------------------------------------


DECISIONS = ("open", "closed", "developed")


@dataclass(frozen=True)
class Annotation:
    decision: str = "open"
    comment: str = ""
    color: str | None = None

    def __post_init__(self):
        if self.decision not in DECISIONS:
            raise ModelInvariantError(
                f"unknown decision '{self.decision}' (expected one of {', '.join(DECISIONS)})"
            )

    def to_dict(self) -> dict:
        out: dict = {"decision": self.decision}
        if self.comment:
            out["comment"] = self.comment
        if self.color is not None:
            out["color"] = self.color
        return out


AnnotationOverlay = dict[str, Annotation]


def merge_annotations(dag: AttackDag, overlay: AnnotationOverlay) -> tuple[dict, list[str]]:
    """Attach overlay decisions to the serialized DAG by canonical path.

    Returns the annotated document plus the orphan report: overlay entries
    whose path no longer exists. Orphans are reported, never dropped.
    """
    doc = dag.to_doc()
    for entry in doc["nodes"]:
        ann = overlay.get(entry["path"])
        if ann is not None:
            entry["annotation"] = ann.to_dict()
    orphans = [path for path in sorted(overlay) if path not in dag.nodes]
    return doc, orphans
