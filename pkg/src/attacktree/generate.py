"""Six-step attack-DAG construction for one feared event.

Step 1 creates the root from the feared event; step 2 decomposes over
admissible states and modes; step 3 (optional) structures by supporting
asset type; step 4 attaches attack entry points from the traced functional
chain; step 5 enumerates applicable threats from the knowledge base; step
6 retains or rejects threat sources and hangs the AND-gated precondition /
attack-stub groups beneath the retained ones.

Every gate is OR except the child grouping of a threat-source node, which
is AND, keeping conjunctions as low in the tree as possible. Disputable
nodes are always generated and flagged rather than pruned, so the analysis
stays complete and the expert's attention is directed by status flags.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .arch import Access, AccessKind, ArchitectureModel
from .dag import (
    SYNTHETIC_CONTEXT_SEGMENT,
    AttackDag,
    DagNode,
    Gate,
    NameResolver,
    NodeKind,
    STATUS_DISPUTABLE,
    STATUS_EXPERT_REQUIRED,
    STATUS_GENERATED,
    _synth_label,
    validate_dag,
)
from .errors import GenerationError, UntracedProcessError, UntypedAssetError
from .kb import KnowledgeBase, PrerequisiteKind, ThreatDef
from .risk import FearedEvent, RiskStudy, ThreatSource


@dataclass(frozen=True)
class GenerationConfig:
    dag_mode: bool = True
    include_asset_type_layer: bool = True
    emit_postconditions: bool = False


class Outcome(str, Enum):
    RETAINED_UNKNOWN_SOURCE = "retained_unknown_source"
    RETAINED_WITH_ACCESS = "retained_with_access"
    RETAINED_MALEVOLENT_DOUBTFUL_ACCESS = "retained_malevolent_doubtful_access"
    REJECTED = "rejected"


class AttackNature(str, Enum):
    INTENTIONAL = "intentional"
    ACCIDENTAL = "accidental"


@dataclass(frozen=True)
class RetentionVerdict:
    outcome: Outcome
    nature: AttackNature | None = None

    @property
    def retained(self) -> bool:
        return self.outcome is not Outcome.REJECTED

    def provenance_tag(self) -> str:
        tag = f"verdict:{self.outcome.value}"
        if self.nature is not None:
            tag += f":{self.nature.value}"
        return tag


def required_access_kinds(threat: ThreatDef) -> list[AccessKind]:
    """Access kinds the threat's prerequisites demand, deduplicated."""
    kinds: list[AccessKind] = []
    for pre in threat.prerequisites:
        if pre.kind is PrerequisiteKind.PHYSICAL_ACCESS and AccessKind.PHYSICAL not in kinds:
            kinds.append(AccessKind.PHYSICAL)
        elif pre.kind is PrerequisiteKind.LOGICAL_ACCESS and AccessKind.LOGICAL not in kinds:
            kinds.append(AccessKind.LOGICAL)
    return kinds


def retention_verdict(source: ThreatSource, threat: ThreatDef, entry_point: str,
                      context: tuple[str | None, str | None],
                      model: ArchitectureModel) -> RetentionVerdict:
    """Decide whether a threat source is retained for a threat on an entry
    point in a state/mode context.

    In order: a source not represented as an actor in the architecture is
    retained (we lack knowledge about it); a modeled source with the
    required access in the context is retained for an intentional attack
    if malevolent, accidental otherwise; a modeled malevolent source
    without established access is retained despite the doubt; anything
    else is rejected. A source whose access is merely unknown counts as
    having no known access.
    """
    if source.modeled_actor is None:
        return RetentionVerdict(Outcome.RETAINED_UNKNOWN_SOURCE)
    kinds = required_access_kinds(threat)
    has_full_access = all(
        model.actor_has_access(source.modeled_actor, entry_point, kind, context)
        is Access.YES
        for kind in kinds
    )
    if has_full_access:
        nature = AttackNature.INTENTIONAL if source.malevolent else AttackNature.ACCIDENTAL
        return RetentionVerdict(Outcome.RETAINED_WITH_ACCESS, nature)
    if source.malevolent:
        return RetentionVerdict(Outcome.RETAINED_MALEVOLENT_DOUBTFUL_ACCESS)
    return RetentionVerdict(Outcome.REJECTED)


class _Builder:
    """Shared lookups for one generation run."""

    def __init__(self, fe: FearedEvent, model: ArchitectureModel,
                 study: RiskStudy, kb: KnowledgeBase, config: GenerationConfig):
        self.fe = fe
        self.model = model
        self.study = study
        self.kb = kb
        self.config = config
        self.resolver = NameResolver(model, study, kb)
        self._clone_counter = 0

    def label(self, node: DagNode) -> str:
        return _synth_label(node, self.resolver)

    def next_clone_suffix(self) -> str:
        self._clone_counter += 1
        return f"#{self._clone_counter}"


def _mk(builder: _Builder, parent: DagNode | None, segment: str, kind: NodeKind,
        gate: Gate | None, provenance: list[str],
        status: set[str] | None = None) -> DagNode:
    path = segment if parent is None else f"{parent.path}/{segment}"
    node = DagNode(path=path, kind=kind, gate=gate, label="",
                   provenance=provenance,
                   status={STATUS_GENERATED} | (status or set()))
    node.label = builder.label(node)
    return node


# -- step 1: root --------------------------------------------------------------


def step1_root(fe: FearedEvent, model: ArchitectureModel, study: RiskStudy,
               kb: KnowledgeBase, config: GenerationConfig) -> AttackDag:
    """Root-only DAG for the feared event."""
    builder = _Builder(fe, model, study, kb, config)
    prov = [fe.criterion, fe.primary_asset, fe.entity]
    if fe.severity is not None:
        prov.append(fe.severity)
    root = _mk(builder, None, fe.id, NodeKind.ROOT, Gate.OR, prov)
    dag = AttackDag(fe.id, root)
    dag._builder = builder  # builder rides along for the remaining steps
    return dag


def _builder_for(dag: AttackDag, model: ArchitectureModel, study: RiskStudy,
                 kb: KnowledgeBase, config: GenerationConfig) -> _Builder:
    builder = getattr(dag, "_builder", None)
    if builder is None or builder.model is not model:
        fe = study.feared_event(dag.feared_event)
        builder = _Builder(fe, model, study, kb, config)
        dag._builder = builder
    builder.config = config
    return builder


# -- step 2: states and modes ---------------------------------------------------


def step2_states_modes(dag: AttackDag, model: ArchitectureModel, study: RiskStudy,
                       kb: KnowledgeBase,
                       config: GenerationConfig = GenerationConfig()) -> AttackDag:
    """OR-decompose the root over every state (and mode) in which the
    feared event's operational process can run.

    A state with no admissible modes terminates the layer itself. An empty
    matrix row degenerates to a single synthetic any-state context flagged
    for the expert.
    """
    builder = _builder_for(dag, model, study, kb, config)
    fe = builder.fe
    process = study.primary_asset(fe.primary_asset).process
    contexts = model.admissible_contexts(process)
    fe_prov = [fe.criterion, fe.primary_asset, fe.entity]

    if not contexts:
        _mk_child(dag, builder, dag.root, SYNTHETIC_CONTEXT_SEGMENT,
                  NodeKind.STATE, Gate.OR, [],
                  status={STATUS_EXPERT_REQUIRED})
        return dag

    state_nodes: dict[str, DagNode] = {}
    seen: set[tuple[str, str | None]] = set()
    for state, mode in contexts:
        node = state_nodes.get(state.id)
        if node is None:
            node = _mk_child(dag, builder, dag.root, state.id, NodeKind.STATE,
                             Gate.OR, [state.id, *fe_prov])
            state_nodes[state.id] = node
        if mode is not None and (state.id, mode.id) not in seen:
            seen.add((state.id, mode.id))
            _mk_child(dag, builder, node, mode.id, NodeKind.MODE, Gate.OR,
                      [mode.id, state.id, *fe_prov])
    return dag


def _mk_child(dag: AttackDag, builder: _Builder, parent: DagNode, segment: str,
              kind: NodeKind, gate: Gate | None, provenance: list[str],
              status: set[str] | None = None) -> DagNode:
    node = _mk(builder, parent, segment, kind, gate, provenance, status)
    return dag.add(parent, node)


def _context_nodes(dag: AttackDag) -> list[DagNode]:
    """Deepest state/mode layer nodes, in traversal order."""
    out = []
    for node in dag.walk():
        if node.kind is NodeKind.MODE:
            out.append(node)
        elif node.kind is NodeKind.STATE and not any(
                c.kind is NodeKind.MODE for c in node.children):
            out.append(node)
    return out


def _context_of(node: DagNode, model: ArchitectureModel) -> tuple[str | None, str | None]:
    state_ids = {st.id for st in model.states}
    mode_ids = {md.id for st in model.states for md in st.modes}
    state = next((pid for pid in node.provenance if pid in state_ids), None)
    mode = next((pid for pid in node.provenance if pid in mode_ids), None)
    return (state, mode)


# -- step 3: supporting asset types ----------------------------------------------


def step3_asset_types(dag: AttackDag, model: ArchitectureModel, study: RiskStudy,
                      kb: KnowledgeBase,
                      config: GenerationConfig = GenerationConfig()) -> AttackDag:
    """Under every context node, one OR child per structural supporting
    asset type, in KB declaration order. Skipped entirely when the layer
    is disabled."""
    builder = _builder_for(dag, model, study, kb, config)
    if not config.include_asset_type_layer:
        return dag
    fe = builder.fe
    for context in _context_nodes(dag):
        state, mode = _context_of(context, model)
        prov_ctx = [p for p in (state, mode) if p is not None]
        for asset_type in kb.structural_types():
            _mk_child(dag, builder, context, asset_type.id, NodeKind.ASSET_TYPE,
                      Gate.OR, [asset_type.id, *prov_ctx, fe.entity])
    return dag


# -- step 4: attack entry points --------------------------------------------------


def step4_entry_points(dag: AttackDag, model: ArchitectureModel, study: RiskStudy,
                       kb: KnowledgeBase,
                       config: GenerationConfig = GenerationConfig()) -> AttackDag:
    """Attach the traced chain's participants under their asset-type nodes
    and the chain-relevant external interfaces under the network node.

    Composite (system) components appear under both hardware and software:
    as one shared node in DAG mode, as suffixed clones in duplication
    mode. Asset-type nodes left without entry points stay as leaves
    flagged for the expert.
    """
    builder = _builder_for(dag, model, study, kb, config)
    fe = builder.fe
    process = study.primary_asset(fe.primary_asset).process
    try:
        chain = model.chain_for_process(process)
    except UntracedProcessError:
        raise GenerationError(
            f"cannot generate entry points: process '{process}' has no traced chain"
        ) from None
    try:
        buckets = model.chain_participants(chain, study, kb)
    except UntypedAssetError as exc:
        raise GenerationError(str(exc)) from None
    interfaces = model.network_entry_points(chain, study, kb)

    for context in _context_nodes(dag):
        state, mode = _context_of(context, model)
        prov_ctx = [p for p in (state, mode) if p is not None]
        if config.include_asset_type_layer:
            for target in [c for c in context.children
                           if c.kind is NodeKind.ASSET_TYPE]:
                type_id = target.segment()
                added = False
                for cid in buckets.get(type_id, []):
                    _attach_entry(dag, builder, target, context, cid, prov_ctx)
                    added = True
                if kb.type(type_id).interface_entry:
                    for iface in interfaces:
                        _mk_child(dag, builder, target, iface.id,
                                  NodeKind.ENTRY_POINT, Gate.OR,
                                  [iface.id, type_id, *prov_ctx, fe.entity])
                        added = True
                if not added:
                    target.status.add(STATUS_EXPERT_REQUIRED)
        else:
            # layer disabled: each participant and interface attaches once,
            # directly under the context
            seen: set[str] = set()
            for members in buckets.values():
                for cid in members:
                    if cid in seen:
                        continue
                    seen.add(cid)
                    tag = study.asset_type_tags[cid]
                    prov = [cid, *kb.effective_types(tag), *prov_ctx, fe.entity]
                    _mk_child(dag, builder, context, cid, NodeKind.ENTRY_POINT,
                              Gate.OR, prov)
            net_types = [t.id for t in kb.structural_types() if t.interface_entry]
            for iface in interfaces:
                prov = [iface.id, *net_types, *prov_ctx, fe.entity]
                _mk_child(dag, builder, context, iface.id, NodeKind.ENTRY_POINT,
                          Gate.OR, prov)
    return dag


def _attach_entry(dag: AttackDag, builder: _Builder, target: DagNode,
                  context: DagNode, cid: str, prov_ctx: list[str]) -> None:
    study, kb, fe = builder.study, builder.kb, builder.fe
    tag = study.asset_type_tags[cid]
    tag_type = kb.type(tag)
    effective = kb.effective_types(tag)
    if tag_type.composite and builder.config.dag_mode:
        # one shared node for all placements of a composite component;
        # its canonical path carries the composite tag, not a branch
        path = f"{context.path}/{tag_type.id}/{cid}"
        node = dag.node(path)
        if node is None:
            node = _mk(builder, context, f"{tag_type.id}/{cid}",
                       NodeKind.ENTRY_POINT, Gate.OR,
                       [cid, *effective, *prov_ctx, fe.entity])
        dag.add(target, node)
        return
    if tag_type.composite:
        segment = f"{cid}{builder.next_clone_suffix()}"
        prov = [cid, target.segment(), *prov_ctx, fe.entity]
    else:
        segment = cid
        prov = [cid, *effective, *prov_ctx, fe.entity]
    _mk_child(dag, builder, target, segment, NodeKind.ENTRY_POINT, Gate.OR, prov)


# -- step 5: applicable threats ----------------------------------------------------


def step5_threats(dag: AttackDag, model: ArchitectureModel, study: RiskStudy,
                  kb: KnowledgeBase,
                  config: GenerationConfig = GenerationConfig()) -> AttackDag:
    """OR-decompose every entry point with all KB threats targeting its
    type(s) and concerning the feared event's criterion. Entry points with
    no applicable threat are flagged for the expert."""
    builder = _builder_for(dag, model, study, kb, config)
    fe = builder.fe
    for node in list(dag.walk()):
        if node.kind is not NodeKind.ENTRY_POINT:
            continue
        state, mode = _context_of(node, model)
        prov_ctx = [p for p in (state, mode) if p is not None]
        threats = _threats_for_entry(builder, node)
        if not threats:
            node.status.add(STATUS_EXPERT_REQUIRED)
            continue
        entry_id = _entry_artefact(node)
        for threat in threats:
            _mk_child(dag, builder, node, threat.code, NodeKind.THREAT, Gate.OR,
                      [threat.code, entry_id, *prov_ctx, fe.entity])
    return dag


def _entry_artefact(node: DagNode) -> str:
    return node.provenance[0]


def _threats_for_entry(builder: _Builder, node: DagNode) -> list[ThreatDef]:
    kb, study, model = builder.kb, builder.study, builder.model
    entry_id = _entry_artefact(node)
    if model.has_interface(entry_id):
        interface_types = [t.id for t in kb.structural_types() if t.interface_entry]
        targets = set(interface_types)
    else:
        tag = study.asset_type_tags.get(entry_id)
        if tag is None:
            return []
        tag_type = kb.type(tag)
        if tag_type.composite and "#" in node.segment():
            # clones carry their placement type as the second provenance entry
            targets = {node.provenance[1]}
        else:
            targets = set(kb.effective_types(tag))
    criterion = builder.fe.criterion
    return [t for t in kb.threats
            if t.targeted_type in targets and criterion in t.criteria]


# -- step 6: threat sources ---------------------------------------------------------


def step6_threat_sources(dag: AttackDag, model: ArchitectureModel, study: RiskStudy,
                         kb: KnowledgeBase,
                         config: GenerationConfig = GenerationConfig()) -> AttackDag:
    """Retain/reject every threat source per threat node; retained sources
    become OR siblings whose children form the AND group of precondition
    leaves, attack stub(s) and optional postcondition."""
    builder = _builder_for(dag, model, study, kb, config)
    for node in list(dag.walk()):
        if node.kind is not NodeKind.THREAT:
            continue
        if not study.threat_sources:
            node.status.add(STATUS_EXPERT_REQUIRED)
            continue
        threat = kb.threat(node.segment())
        entry_id = _entry_artefact_of_threat(node)
        context = _context_of(node, model)
        retained_any = False
        for source in study.threat_sources:
            verdict = retention_verdict(source, threat, entry_id, context, model)
            if not verdict.retained:
                continue
            retained_any = True
            _attach_source(dag, builder, node, source, threat, entry_id,
                           context, verdict)
        if not retained_any:
            node.status.add(STATUS_EXPERT_REQUIRED)
    return dag


def _entry_artefact_of_threat(node: DagNode) -> str:
    return node.provenance[1]


def _attach_source(dag: AttackDag, builder: _Builder, threat_node: DagNode,
                   source: ThreatSource, threat: ThreatDef, entry_id: str,
                   context: tuple[str | None, str | None],
                   verdict: RetentionVerdict) -> None:
    fe = builder.fe
    prov_ctx = [p for p in context if p is not None]
    src_node = _mk_child(
        dag, builder, threat_node, source.id, NodeKind.THREAT_SOURCE, Gate.AND,
        [source.id, threat.code, entry_id, *prov_ctx, fe.entity,
         verdict.provenance_tag()])

    for ordinal, prereq in enumerate(threat.prerequisites, start=1):
        prov = [threat.code]
        status = set()
        if prereq.kind is PrerequisiteKind.STATE_MODE_CHANGE:
            status.add(STATUS_EXPERT_REQUIRED)
            if prereq.state is not None:
                prov.append(prereq.state)
            if prereq.mode is not None:
                prov.append(prereq.mode)
        _mk_child(dag, builder, src_node, f"pre{ordinal}", NodeKind.PRECONDITION,
                  None, prov, status=status)

    stub_prov = [threat.code, entry_id]
    if verdict.outcome is Outcome.RETAINED_WITH_ACCESS:
        if verdict.nature is AttackNature.INTENTIONAL:
            _mk_child(dag, builder, src_node, "attack-intentional",
                      NodeKind.ATTACK_STUB, None, stub_prov,
                      status={STATUS_EXPERT_REQUIRED})
            _mk_child(dag, builder, src_node, "attack-accidental",
                      NodeKind.ATTACK_STUB, None, stub_prov,
                      status={STATUS_EXPERT_REQUIRED, STATUS_DISPUTABLE})
        else:
            _mk_child(dag, builder, src_node, "attack-accidental",
                      NodeKind.ATTACK_STUB, None, stub_prov,
                      status={STATUS_EXPERT_REQUIRED, STATUS_DISPUTABLE})
    else:
        _mk_child(dag, builder, src_node, "attack", NodeKind.ATTACK_STUB, None,
                  stub_prov, status={STATUS_EXPERT_REQUIRED})

    if builder.config.emit_postconditions:
        _mk_child(dag, builder, src_node, "post-repudiation",
                  NodeKind.POSTCONDITION, None, [])


# -- full pipeline -------------------------------------------------------------------


def generate(fe: FearedEvent, model: ArchitectureModel, study: RiskStudy,
             kb: KnowledgeBase,
             config: GenerationConfig = GenerationConfig()) -> AttackDag:
    """Run steps 1-6 in order; the result passes structural validation."""
    dag = step1_root(fe, model, study, kb, config)
    step2_states_modes(dag, model, study, kb, config)
    step3_asset_types(dag, model, study, kb, config)
    step4_entry_points(dag, model, study, kb, config)
    step5_threats(dag, model, study, kb, config)
    step6_threat_sources(dag, model, study, kb, config)
    problems = validate_dag(dag)
    if problems:
        details = "; ".join(f"{d.code}@{d.path}" for d in problems[:5])
        raise GenerationError(f"generated DAG failed validation: {details}")
    return dag
