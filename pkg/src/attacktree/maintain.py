"""Keeping generated DAGs aligned with an evolving architecture: snapshot
diffing by stable artefact id, regeneration with rename propagation,
warning stubs for deleted provenance, new-branch flags and annotation
preservation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .arch import ArchitectureModel
from .dag import (
    AnnotationOverlay,
    AttackDag,
    DagNode,
    NameResolver,
    STATUS_NEW_SINCE_LAST,
    STATUS_WARNING_ORPHANED,
    VERDICT_PREFIX,
)
from .generate import GenerationConfig, generate
from .kb import KnowledgeBase
from .risk import FearedEvent, RiskStudy


@dataclass
class ModelDiff:
    renamed: list[tuple[str, str, str]] = field(default_factory=list)
    deleted: list[str] = field(default_factory=list)
    added: list[str] = field(default_factory=list)
    retyped: list[tuple[str, str, str]] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (self.renamed or self.deleted or self.added or self.retyped)

    def to_dict(self) -> dict:
        return {
            "renamed": [list(r) for r in self.renamed],
            "deleted": list(self.deleted),
            "added": list(self.added),
            "retyped": [list(r) for r in self.retyped],
        }


def _artefact_names(model: ArchitectureModel) -> dict[str, str]:
    names: dict[str, str] = {}
    for items in (model.entities, model.activities, model.processes,
                  model.components, model.interfaces, model.chains,
                  model.states):
        for item in items:
            names[item.id] = item.name
    for st in model.states:
        for md in st.modes:
            names[md.id] = md.name
    return names


def diff_models(old_model: ArchitectureModel, new_model: ArchitectureModel,
                old_study: RiskStudy | None = None,
                new_study: RiskStudy | None = None) -> ModelDiff:
    """Diff two model snapshots by stable artefact id.

    A rename is the same id carrying a new name; deletions and additions
    are id presence. Retypes come from the studies' asset-type tags when
    both studies are supplied; a component that was both renamed and
    retyped counts as retyped only, keeping the categories disjoint.
    """
    old_names = _artefact_names(old_model)
    new_names = _artefact_names(new_model)
    diff = ModelDiff()
    retyped_ids: set[str] = set()
    if old_study is not None and new_study is not None:
        for cid, old_type in old_study.asset_type_tags.items():
            new_type = new_study.asset_type_tags.get(cid)
            if new_type is not None and new_type != old_type \
                    and cid in old_names and cid in new_names:
                diff.retyped.append((cid, old_type, new_type))
                retyped_ids.add(cid)
    for aid, name in old_names.items():
        if aid not in new_names:
            diff.deleted.append(aid)
        elif new_names[aid] != name and aid not in retyped_ids:
            diff.renamed.append((aid, name, new_names[aid]))
    for aid in new_names:
        if aid not in old_names:
            diff.added.append(aid)
    return diff


@dataclass
class RegenReport:
    unchanged_paths: list[str] = field(default_factory=list)
    relabeled_paths: list[str] = field(default_factory=list)
    added_paths: list[str] = field(default_factory=list)
    removed_paths: list[str] = field(default_factory=list)
    warned_paths: list[str] = field(default_factory=list)
    orphaned_annotations: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "unchanged_paths": self.unchanged_paths,
            "relabeled_paths": self.relabeled_paths,
            "added_paths": self.added_paths,
            "removed_paths": self.removed_paths,
            "warned_paths": self.warned_paths,
            "orphaned_annotations": self.orphaned_annotations,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RegenReport":
        return cls(**{k: list(v) for k, v in data.items()})


def _subtree_summary(dag: AttackDag, node: DagNode) -> dict:
    seen: set[str] = set()
    labels: list[str] = []
    stack = [node]
    while stack:
        cur = stack.pop()
        if cur.path in seen:
            continue
        seen.add(cur.path)
        labels.append(cur.label)
        stack.extend(reversed(cur.children))
    return {"node_count": len(seen), "last_labels": labels[:5]}


def regenerate(fe: FearedEvent, new_model: ArchitectureModel, study: RiskStudy,
               kb: KnowledgeBase, config: GenerationConfig, old_dag: AttackDag,
               overlay: AnnotationOverlay) -> tuple[AttackDag, RegenReport]:
    """Regenerate the DAG from the new model, preserving expert work.

    Paths are id-based, so renames keep the path set intact and only
    relabel. Subtrees whose provenance artefacts were deleted do not
    regenerate; a warning stub is kept at the old path (with the
    last-known subtree summary) until the overlay closes or develops it.
    Newly appearing branches are flagged. Overlay entries re-attach by
    path; the rest are reported as orphans, never dropped.
    """
    new_dag = generate(fe, new_model, study, kb, config)
    resolver = NameResolver(new_model, study, kb)

    generated_paths = set(new_dag.nodes)  # before any stub is attached
    old_labels = {node.path: node.label for node in old_dag.walk()}
    warned: list[str] = []
    removed: list[str] = []
    visited: set[str] = set()

    def provenance_deleted(node: DagNode) -> bool:
        return any(not resolver.exists(pid) for pid in node.provenance
                   if not pid.startswith(VERDICT_PREFIX))

    def acknowledged(path: str) -> bool:
        ann = overlay.get(path)
        return ann is not None and ann.decision in ("closed", "developed")

    def collect(node: DagNode, parent: DagNode | None):
        if node.path in generated_paths:
            if node.path not in visited:
                visited.add(node.path)
                for child in node.children:
                    collect(child, node)
            return
        if provenance_deleted(node):
            if acknowledged(node.path):
                # the expert closed/developed this path: drop the whole
                # subtree silently, the annotation lands in the orphan report
                if node.path not in visited:
                    visited.add(node.path)
                    removed.append(node.path)
                    _mark_removed_descendants(node, removed)
                return
            warned.append(node.path)
            _attach_stub(new_dag, old_dag, node, parent)
            if node.path not in visited:
                visited.add(node.path)
                _mark_removed_descendants(node, removed)
            return
        if node.path in visited:
            return
        visited.add(node.path)
        removed.append(node.path)
        for child in node.children:
            collect(child, node)

    collect(old_dag.root, None)

    report = RegenReport()
    report.warned_paths = sorted(set(warned))
    report.removed_paths = sorted(p for p in set(removed)
                                  if p not in new_dag.nodes)
    for node in new_dag.walk():
        if node.path in report.warned_paths:
            continue
        old_label = old_labels.get(node.path)
        if old_label is None:
            node.status.add(STATUS_NEW_SINCE_LAST)
            report.added_paths.append(node.path)
        elif old_label == node.label:
            report.unchanged_paths.append(node.path)
        else:
            report.relabeled_paths.append(node.path)
    report.added_paths.sort()
    report.unchanged_paths.sort()
    report.relabeled_paths.sort()
    report.orphaned_annotations = [p for p in sorted(overlay)
                                   if p not in new_dag.nodes]
    return new_dag, report


def _attach_stub(new_dag: AttackDag, old_dag: AttackDag, node: DagNode,
                 parent: DagNode | None) -> None:
    stub = DagNode(
        path=node.path,
        kind=node.kind,
        gate=None,
        label=node.label,
        provenance=list(node.provenance),
        status={STATUS_WARNING_ORPHANED},
        summary=_subtree_summary(old_dag, node),
    )
    anchor = None
    if parent is not None:
        anchor = new_dag.node(parent.path)
    if anchor is None:
        # climb the old path until an ancestor survives; the root always does
        prefix = node.path
        while "/" in prefix and anchor is None:
            prefix = prefix.rsplit("/", 1)[0]
            anchor = new_dag.node(prefix)
        if anchor is None:
            anchor = new_dag.root
    new_dag.add(anchor, stub)


def _mark_removed_descendants(node: DagNode, removed: list[str]) -> None:
    stack = list(node.children)
    seen: set[str] = set()
    while stack:
        cur = stack.pop()
        if cur.path in seen:
            continue
        seen.add(cur.path)
        removed.append(cur.path)
        stack.extend(cur.children)
