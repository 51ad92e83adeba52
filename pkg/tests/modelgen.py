"""Builders for synthetic inputs: hand-sized helpers plus a seeded random
generator of small (model, study, kb, feared event) instances, and the
independent layered-product node-count oracle used against the generator.
"""

from __future__ import annotations

import random

from attacktree.arch import (
    AccessKind,
    ArchitectureModel,
    FunctionalChain,
    InterfaceDef,
    LogicalComponent,
    MatrixEntry,
    Mode,
    OperationalActivity,
    OperationalEntity,
    OperationalProcess,
    Port,
    PortAvailability,
    PortConnection,
    State,
    TraceKind,
    TraceLink,
)
from attacktree.generate import GenerationConfig
from attacktree.kb import (
    KnowledgeBase,
    Prerequisite,
    PrerequisiteKind,
    SecurityCriterion,
    SupportingAssetType,
    ThreatDef,
)
from attacktree.risk import FearedEvent, PrimaryAsset, RiskStudy, SeverityScale, ThreatSource

CRITERIA = [
    SecurityCriterion("availability", "Availability"),
    SecurityCriterion("integrity", "Integrity"),
    SecurityCriterion("confidentiality", "Confidentiality"),
]

BASE_TYPES = [
    SupportingAssetType("HW", "Hardware"),
    SupportingAssetType("SW", "Software"),
    SupportingAssetType("NET", "Networks", interface_entry=True),
    SupportingAssetType("ORG", "Organisations"),
    SupportingAssetType("PEOPLE", "People", display_under="ORG"),
    SupportingAssetType("SYS", "System", composite=True, parts=("HW", "SW")),
]

TAGGABLE = ["HW", "SW", "ORG", "PEOPLE", "SYS", "NET"]


def random_setup(seed: int) -> tuple[FearedEvent, ArchitectureModel, RiskStudy,
                                     KnowledgeBase, GenerationConfig]:
    """One random small instance; every input is valid by construction."""
    rng = random.Random(seed)

    # states and modes
    states = []
    for i in range(rng.randint(1, 3)):
        modes = tuple(Mode(f"md-{i}-{j}", f"Mode {i}.{j}")
                      for j in range(rng.randint(0, 2)))
        states.append(State(f"st-{i}", f"State {i}", modes))

    # threats (may reference a state in a state-change prerequisite)
    n_threats = rng.randint(0, 6)
    threats = []
    kinds = list(PrerequisiteKind)
    for i in range(n_threats):
        target = rng.choice(["HW", "SW", "NET", "ORG", "PEOPLE"])
        crit_ids = rng.sample([c.id for c in CRITERIA], rng.randint(1, 3))
        prereqs = []
        for j in range(rng.randint(0, 3)):
            kind = rng.choice(kinds)
            state_ref = None
            if kind is PrerequisiteKind.STATE_MODE_CHANGE and rng.random() < 0.7:
                state_ref = rng.choice(states).id
            prereqs.append(Prerequisite(f"prerequisite {i}.{j}", kind, state_ref))
        threats.append(ThreatDef(f"T-{i}", f"Threat number {i}", target,
                                 tuple(sorted(crit_ids)), (), tuple(prereqs)))
    kb = KnowledgeBase(asset_types=list(BASE_TYPES), criteria=list(CRITERIA),
                       threats=threats)

    # entities: one system entity plus actors
    entities = [OperationalEntity("ent-sys", "The System", False)]
    for i in range(rng.randint(1, 3)):
        entities.append(OperationalEntity(f"ent-a{i}", f"Actor {i}", True))

    # components with forest containment and random ports
    components = []
    n_comp = rng.randint(2, 6)
    for i in range(n_comp):
        parent = None
        if i > 0 and rng.random() < 0.4:
            parent = f"c{rng.randrange(i)}"
        ports = tuple(
            Port(f"p{i}-{k}", f"port {i}.{k}",
                 rng.choice(list(AccessKind)), rng.random() < 0.6)
            for k in range(rng.randint(1, 3)))
        components.append(LogicalComponent(f"c{i}", f"Component {i}", parent, ports))

    connections = []
    for _ in range(rng.randint(0, 6)):
        ca, cb = rng.sample(components, 2) if len(components) >= 2 else (None, None)
        if ca is None or not ca.ports or not cb.ports:
            continue
        connections.append(PortConnection(
            (ca.id, rng.choice(ca.ports).id), (cb.id, rng.choice(cb.ports).id)))

    availability = []
    for comp in components:
        for port in comp.ports:
            if rng.random() < 0.2:
                availability.append(PortAvailability(port.id, rng.choice(states).id))

    interfaces = []
    for i in range(rng.randint(0, 2)):
        exposing = rng.sample([c.id for c in components],
                              rng.randint(1, min(2, len(components))))
        first = next(c for c in components if c.id == exposing[0])
        ports = tuple(p.id for p in first.ports[:1])
        interfaces.append(InterfaceDef(f"if-{i}", f"Interface {i}",
                                       tuple(exposing), ports))

    activities = [OperationalActivity("act-0", "Activity 0",
                                      rng.choice(entities).id)]
    processes = [OperationalProcess("proc-0", "Process 0", ("act-0",),
                                    "act-0", "act-0")]

    chain_members = tuple(rng.sample([c.id for c in components],
                                     rng.randint(1, len(components))))
    chain_ifaces = tuple(i.id for i in interfaces if rng.random() < 0.5)
    chains = [FunctionalChain("chn-0", "Chain 0", chain_members, chain_ifaces)]

    links = [TraceLink("proc-0", "chn-0", TraceKind.PROCESS_CHAIN)]
    for ent in entities:
        if ent.is_actor and components and rng.random() < 0.8:
            links.append(TraceLink(ent.id, rng.choice(components).id,
                                   TraceKind.ENTITY_COMPONENT))

    matrix = []
    for st in states:
        if rng.random() < 0.5:
            if st.modes and rng.random() < 0.7:
                for md in st.modes:
                    if rng.random() < 0.7:
                        matrix.append(MatrixEntry(st.id, md.id, "proc-0"))
            else:
                matrix.append(MatrixEntry(st.id, None, "proc-0"))

    model = ArchitectureModel(
        entities=entities, activities=activities, processes=processes,
        states=states, matrix=matrix, components=components,
        interfaces=interfaces, chains=chains, trace_links=links,
        port_connections=connections, port_availability=availability)

    tags = {}
    for comp in components:
        if comp.id in chain_members or rng.random() < 0.5:
            tags[comp.id] = rng.choice(TAGGABLE)

    sources = []
    actors = [e for e in entities if e.is_actor]
    for i in range(rng.randint(0, 3)):
        if rng.random() < 0.6 and actors:
            actor = rng.choice(actors).id
        else:
            actor = None
        sources.append(ThreatSource(f"ts-{i}", f"Source {i}",
                                    rng.random() < 0.5, actor))

    study = RiskStudy(
        severity_scale=SeverityScale(("Low", "High", "Critical")),
        primary_assets=[PrimaryAsset("pa-0", "Asset Zero", "proc-0")],
        asset_type_tags=tags,
        threat_sources=sources,
    )
    fe = FearedEvent("fe-0", rng.choice(CRITERIA).id, "pa-0", "ent-sys",
                     rng.choice(study.severity_scale.labels))
    study.feared_events = [fe]
    study._events_by_id = {fe.id: fe}

    config = GenerationConfig(
        dag_mode=rng.random() < 0.7,
        include_asset_type_layer=rng.random() < 0.8,
        emit_postconditions=rng.random() < 0.3,
    )
    return fe, model, study, kb, config


# -- independent node-count oracle ---------------------------------------------


def _oracle_verdict(source: ThreatSource, threat: ThreatDef, entry: str,
                    context, model: ArchitectureModel) -> tuple[bool, int]:
    """Four-bullet retention decision, recomputed table-style.

    Returns (retained, stub_count).
    """
    from attacktree.arch import Access

    if source.modeled_actor is None:
        return True, 1
    needed = []
    for pre in threat.prerequisites:
        if pre.kind is PrerequisiteKind.PHYSICAL_ACCESS:
            needed.append(AccessKind.PHYSICAL)
        elif pre.kind is PrerequisiteKind.LOGICAL_ACCESS:
            needed.append(AccessKind.LOGICAL)
    full = all(model.actor_has_access(source.modeled_actor, entry, k, context)
               is Access.YES for k in needed)
    if full:
        return True, 2 if source.malevolent else 1
    if source.malevolent:
        return True, 1
    return False, 0


def expected_node_count(fe: FearedEvent, model: ArchitectureModel,
                        study: RiskStudy, kb: KnowledgeBase,
                        config: GenerationConfig) -> int:
    """Layered-product count of the DAG the six steps should produce,
    computed without running the generator."""
    count = 1  # root

    process = study.primary_asset(fe.primary_asset).process
    rows = [e for e in model.matrix if e.process == process]
    contexts: list[tuple[str | None, str | None]] = []
    if not rows:
        count += 1  # synthetic any-state context
        contexts.append((None, None))
    else:
        by_state: dict[str, list[str]] = {}
        for e in rows:
            by_state.setdefault(e.state, [])
            if e.mode is not None:
                by_state[e.state].append(e.mode)
        count += len(by_state)  # state nodes
        for state_id, modes in by_state.items():
            if modes:
                count += len(set(modes))
                for m in set(modes):
                    contexts.append((state_id, m))
            else:
                contexts.append((state_id, None))

    structural = kb.structural_types()
    ie_types = [t.id for t in structural if t.interface_entry]
    chain = model.chain_for_process(process)
    buckets = model.chain_participants(chain, study, kb)
    interfaces = model.network_entry_points(chain, study, kb)

    for context in contexts:
        if config.include_asset_type_layer:
            count += len(structural)

        # entry nodes and their target type sets
        entries: list[tuple[str, frozenset[str]]] = []
        if config.include_asset_type_layer and not config.dag_mode:
            for type_id, members in buckets.items():
                for cid in members:
                    tag = kb.type(study.asset_type_tags[cid])
                    targets = frozenset({type_id}) if tag.composite \
                        else frozenset(kb.effective_types(tag.id))
                    entries.append((cid, targets))
        else:
            seen: set[str] = set()
            for members in buckets.values():
                for cid in members:
                    if cid in seen:
                        continue
                    seen.add(cid)
                    tag = study.asset_type_tags[cid]
                    entries.append((cid, frozenset(kb.effective_types(tag))))
        iface_placements = len(ie_types) if config.include_asset_type_layer else 1
        for iface in interfaces:
            for _ in range(iface_placements):
                entries.append((iface.id, frozenset(ie_types)))
        count += len(entries)

        for entry_id, targets in entries:
            matching = [t for t in kb.threats
                        if t.targeted_type in targets and fe.criterion in t.criteria]
            count += len(matching)
            for threat in matching:
                for source in study.threat_sources:
                    retained, stubs = _oracle_verdict(source, threat, entry_id,
                                                      context, model)
                    if not retained:
                        continue
                    count += 1  # source node
                    count += len(threat.prerequisites)
                    count += stubs
                    if config.emit_postconditions:
                        count += 1
    return count
