"""Portable architecture model: operational and logical abstraction levels
plus the queries the tree generator needs.

The model is immutable once constructed. Every query is read-only and
returns results in declaration order of the underlying artefacts, so
repeated calls yield identical output (including ordering).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

from .errors import ModelInvariantError, ResolutionError, UntracedProcessError, UntypedAssetError

if TYPE_CHECKING:
    from .kb import KnowledgeBase
    from .risk import RiskStudy


class AccessKind(str, Enum):
    PHYSICAL = "physical"
    LOGICAL = "logical"
    BOTH = "both"

    def admits(self, kind: "AccessKind") -> bool:
        return self is AccessKind.BOTH or self is kind


class Access(str, Enum):
    """Tri-state answer to an actor-access query.

    A design model expresses what a system is or can do, never what it
    cannot do: UNKNOWN captures physical/logical reachability without any
    modelled expectation of use.
    """

    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


class TraceKind(str, Enum):
    PROCESS_CHAIN = "process_chain"
    ENTITY_COMPONENT = "entity_component"


@dataclass(frozen=True)
class OperationalEntity:
    id: str
    name: str
    is_actor: bool = False


@dataclass(frozen=True)
class OperationalActivity:
    id: str
    name: str
    owner: str


@dataclass(frozen=True)
class OperationalProcess:
    id: str
    name: str
    activities: tuple[str, ...]
    first: str
    last: str


@dataclass(frozen=True)
class Mode:
    id: str
    name: str


@dataclass(frozen=True)
class State:
    id: str
    name: str
    modes: tuple[Mode, ...] = ()


@dataclass(frozen=True)
class MatrixEntry:
    """One 'process can run here' cell of the state x activity matrix."""

    state: str
    mode: str | None
    process: str


@dataclass(frozen=True)
class Port:
    id: str
    name: str
    access_kind: AccessKind
    external: bool = False


@dataclass(frozen=True)
class LogicalComponent:
    id: str
    name: str
    parent: str | None = None
    ports: tuple[Port, ...] = ()


@dataclass(frozen=True)
class InterfaceDef:
    id: str
    name: str
    exposing: tuple[str, ...]
    ports: tuple[str, ...] = ()


@dataclass(frozen=True)
class FunctionalChain:
    id: str
    name: str
    components: tuple[str, ...]
    interfaces: tuple[str, ...] = ()


@dataclass(frozen=True)
class TraceLink:
    source: str
    target: str
    kind: TraceKind


@dataclass(frozen=True)
class PortConnection:
    """Undirected link between two (component, port) endpoints."""

    a: tuple[str, str]
    b: tuple[str, str]


@dataclass(frozen=True)
class PortAvailability:
    """Marks a port usable in a state (and optionally one of its modes).

    A port with no availability entries at all is usable everywhere.
    """

    port: str
    state: str
    mode: str | None = None


@dataclass
class ArchitectureModel:
    entities: list[OperationalEntity] = field(default_factory=list)
    activities: list[OperationalActivity] = field(default_factory=list)
    processes: list[OperationalProcess] = field(default_factory=list)
    states: list[State] = field(default_factory=list)
    matrix: list[MatrixEntry] = field(default_factory=list)
    components: list[LogicalComponent] = field(default_factory=list)
    interfaces: list[InterfaceDef] = field(default_factory=list)
    chains: list[FunctionalChain] = field(default_factory=list)
    trace_links: list[TraceLink] = field(default_factory=list)
    port_connections: list[PortConnection] = field(default_factory=list)
    port_availability: list[PortAvailability] = field(default_factory=list)

    def __post_init__(self):
        self._entities = _index("entity", self.entities)
        self._activities = _index("activity", self.activities)
        self._processes = _index("process", self.processes)
        self._components = _index("component", self.components)
        self._interfaces = _index("interface", self.interfaces)
        self._chains = _index("chain", self.chains)
        self._states = _index("state", self.states)
        self._modes = {}
        self._state_of_mode = {}
        for st in self.states:
            for md in st.modes:
                if md.id in self._modes:
                    raise ModelInvariantError(
                        f"duplicate mode id '{md.id}' (mode ids must be unique)"
                    )
                self._modes[md.id] = md
                self._state_of_mode[md.id] = st.id
        self._validate()
        self._ports = {}
        for comp in self.components:
            seen = set()
            for port in comp.ports:
                if port.id in seen:
                    raise ModelInvariantError(
                        f"duplicate port id '{port.id}' on component '{comp.id}'"
                    )
                seen.add(port.id)
                self._ports[(comp.id, port.id)] = port
        self._children = {}
        for comp in self.components:
            if comp.parent is not None:
                self._children.setdefault(comp.parent, []).append(comp.id)
        self._availability_by_port = {}
        for entry in self.port_availability:
            self._availability_by_port.setdefault(entry.port, []).append(entry)
        self._adjacency = {}
        for conn in self.port_connections:
            self._adjacency.setdefault(conn.a[0], []).append((conn.a, conn.b))
            self._adjacency.setdefault(conn.b[0], []).append((conn.b, conn.a))

    def _validate(self):
        for act in self.activities:
            if act.owner not in self._entities:
                raise ModelInvariantError(
                    f"activity '{act.id}' owner '{act.owner}' does not resolve"
                )
        for proc in self.processes:
            if not proc.activities:
                raise ModelInvariantError(f"process '{proc.id}' has no activities")
            for aid in proc.activities:
                if aid not in self._activities:
                    raise ModelInvariantError(
                        f"process '{proc.id}' references unknown activity '{aid}'"
                    )
            if proc.first not in proc.activities or proc.last not in proc.activities:
                raise ModelInvariantError(
                    f"process '{proc.id}' first/last markers must be members of the activity list"
                )
        for entry in self.matrix:
            if entry.state not in self._states:
                raise ModelInvariantError(
                    f"matrix entry references unknown state '{entry.state}'"
                )
            if entry.mode is not None:
                if self._state_of_mode.get(entry.mode) != entry.state:
                    raise ModelInvariantError(
                        f"matrix entry references mode '{entry.mode}' not belonging to state '{entry.state}'"
                    )
            if entry.process not in self._processes:
                raise ModelInvariantError(
                    f"matrix entry references unknown process '{entry.process}'"
                )
        # containment must form a forest
        for comp in self.components:
            if comp.parent is not None and comp.parent not in self._components:
                raise ModelInvariantError(
                    f"component '{comp.id}' parent '{comp.parent}' does not resolve"
                )
        for comp in self.components:
            seen = {comp.id}
            cur = comp.parent
            while cur is not None:
                if cur in seen:
                    raise ModelInvariantError(
                        f"component containment cycle through '{cur}'"
                    )
                seen.add(cur)
                cur = self._components[cur].parent
        for iface in self.interfaces:
            if not iface.exposing:
                raise ModelInvariantError(
                    f"interface '{iface.id}' has no exposing component"
                )
            for cid in iface.exposing:
                if cid not in self._components:
                    raise ModelInvariantError(
                        f"interface '{iface.id}' exposing component '{cid}' does not resolve"
                    )
        for chain in self.chains:
            if not chain.components:
                raise ModelInvariantError(f"chain '{chain.id}' has no participants")
            for cid in chain.components:
                if cid not in self._components:
                    raise ModelInvariantError(
                        f"chain '{chain.id}' references unknown component '{cid}'"
                    )
            for iid in chain.interfaces:
                if iid not in self._interfaces:
                    raise ModelInvariantError(
                        f"chain '{chain.id}' references unknown interface '{iid}'"
                    )
        seen_process_links = set()
        for link in self.trace_links:
            if link.kind is TraceKind.PROCESS_CHAIN:
                if link.source not in self._processes or link.target not in self._chains:
                    raise ModelInvariantError(
                        f"trace link {link.source}->{link.target} endpoints do not resolve"
                    )
                if link.source in seen_process_links:
                    raise ModelInvariantError(
                        f"process '{link.source}' has more than one chain trace link"
                    )
                seen_process_links.add(link.source)
            else:
                if link.source not in self._entities or link.target not in self._components:
                    raise ModelInvariantError(
                        f"trace link {link.source}->{link.target} endpoints do not resolve"
                    )

    # -- basic lookups -----------------------------------------------------

    def entity(self, entity_id: str) -> OperationalEntity:
        return _get(self._entities, entity_id, "operational entity")

    def process(self, process_id: str) -> OperationalProcess:
        return _get(self._processes, process_id, "operational process")

    def component(self, component_id: str) -> LogicalComponent:
        return _get(self._components, component_id, "logical component")

    def interface(self, interface_id: str) -> InterfaceDef:
        return _get(self._interfaces, interface_id, "interface")

    def chain(self, chain_id: str) -> FunctionalChain:
        return _get(self._chains, chain_id, "functional chain")

    def state(self, state_id: str) -> State:
        return _get(self._states, state_id, "state")

    def mode(self, mode_id: str) -> Mode:
        return _get(self._modes, mode_id, "mode")

    def has_component(self, component_id: str) -> bool:
        return component_id in self._components

    def has_interface(self, interface_id: str) -> bool:
        return interface_id in self._interfaces

    # -- queries -----------------------------------------------------------

    def admissible_contexts(self, process_id: str) -> list[tuple[State, Mode | None]]:
        """States (and modes) in which the process can run.

        Exactly the matrix entries for the process, ordered by state
        declaration order, then mode declaration order within a state
        (a state-level entry sorts before its mode-level entries).
        """
        proc = self.process(process_id)
        rows = [e for e in self.matrix if e.process == proc.id]
        state_order = {st.id: i for i, st in enumerate(self.states)}
        mode_order = {}
        for st in self.states:
            for j, md in enumerate(st.modes):
                mode_order[md.id] = j

        def key(entry: MatrixEntry):
            return (state_order[entry.state],
                    -1 if entry.mode is None else mode_order[entry.mode])

        out = []
        for entry in sorted(rows, key=key):
            st = self._states[entry.state]
            md = self._modes[entry.mode] if entry.mode is not None else None
            out.append((st, md))
        return out

    def chain_for_process(self, process_id: str) -> FunctionalChain:
        """The functional chain traced to the process."""
        proc = self.process(process_id)
        for link in self.trace_links:
            if link.kind is TraceKind.PROCESS_CHAIN and link.source == proc.id:
                return self._chains[link.target]
        raise UntracedProcessError(proc.id)

    def components_for_actor(self, entity_id: str) -> list[str]:
        """Logical components traced to an operational entity."""
        return [link.target for link in self.trace_links
                if link.kind is TraceKind.ENTITY_COMPONENT and link.source == entity_id]

    def chain_participants(self, chain: FunctionalChain, study: "RiskStudy",
                           kb: "KnowledgeBase") -> dict[str, list[str]]:
        """Bucket the chain's participating components by structural asset type.

        Composite (system) components land in every part bucket; folded
        subtypes (people) land under their display branch. Ordering within
        a bucket is chain declaration order.
        """
        buckets: dict[str, list[str]] = {t.id: [] for t in kb.structural_types()}
        untyped = []
        for cid in chain.components:
            tag = study.asset_type_tags.get(cid)
            if tag is None:
                untyped.append(cid)
                continue
            for branch in kb.branch_types(tag):
                if cid not in buckets.setdefault(branch, []):
                    buckets[branch].append(cid)
        if untyped:
            raise UntypedAssetError(untyped)
        return buckets

    def network_entry_points(self, chain: FunctionalChain, study: "RiskStudy",
                             kb: "KnowledgeBase") -> list[InterfaceDef]:
        """External interfaces usable as attack entry points against the chain.

        Rule: external interfaces exposed by chain participants whose tag
        is composite (system) or of the interface-entry (network) type.
        Each interface is listed once, in declaration order.
        """
        relevant = set()
        for cid in chain.components:
            tag = study.asset_type_tags.get(cid)
            if tag is None or not kb.has_type(tag):
                continue
            t = kb.type(tag)
            if t.composite or t.interface_entry:
                relevant.add(cid)
        out = []
        for iface in self.interfaces:
            if not relevant.intersection(iface.exposing):
                continue
            if not self._interface_external(iface):
                continue
            out.append(iface)
        return out

    def _interface_external(self, iface: InterfaceDef) -> bool:
        # absent port information we keep the interface (completeness first)
        if not iface.ports:
            return True
        for pid in iface.ports:
            for cid in iface.exposing:
                port = self._ports.get((cid, pid))
                if port is not None and port.external:
                    return True
        return False

    def actor_has_access(self, actor_id: str, target_id: str, kind: AccessKind,
                         context: tuple[str | None, str | None]) -> Access:
        """Can the actor reach the target with the given access kind in the
        given (state, mode) context?

        YES: a port-connection path exists from a component traced to the
        actor to the target, every traversed port admits the access kind
        and is available in the context, and the actor is expected to use
        the target (both participate in a functional chain touching it).
        UNKNOWN: such a path exists but no chain expresses the expected
        use. NO: no such path exists.
        """
        entity = self.entity(actor_id)
        if not entity.is_actor:
            raise ResolutionError(
                f"operational entity '{actor_id}' is not an actor", ref=actor_id
            )
        start = self.components_for_actor(actor_id)
        reached = self._reach(start, kind, context)
        targets = self._target_components(target_id)
        if not any(cid in reached for cid in targets):
            return Access.NO
        if self._expected_use(start, target_id, targets):
            return Access.YES
        return Access.UNKNOWN

    # -- reachability internals ---------------------------------------------

    def _target_components(self, target_id: str) -> list[str]:
        if target_id in self._components:
            return [target_id]
        if target_id in self._interfaces:
            return list(self._interfaces[target_id].exposing)
        raise ResolutionError(
            f"unknown component or interface '{target_id}'", ref=target_id
        )

    def _port_ok(self, comp_id: str, port_id: str, kind: AccessKind,
                 context: tuple[str | None, str | None]) -> bool:
        port = self._ports.get((comp_id, port_id))
        if port is None:
            return False
        return port.access_kind.admits(kind) and self._port_available(port.id, context)

    def _port_available(self, port_id: str,
                        context: tuple[str | None, str | None]) -> bool:
        entries = self._availability_by_port.get(port_id)
        if not entries:
            return True
        state_id, mode_id = context
        if state_id is None:
            # no concrete context (synthetic any-state branch): do not block
            return True
        for e in entries:
            if e.state == state_id and (e.mode is None or mode_id is None or e.mode == mode_id):
                return True
        return False

    def _reach(self, start: list[str], kind: AccessKind,
               context: tuple[str | None, str | None]) -> set[str]:
        reached = set(start)
        queue = deque(start)
        while queue:
            cid = queue.popleft()
            for (here, there) in self._adjacency.get(cid, ()):  # port connections
                other = there[0]
                if other in reached:
                    continue
                if self._port_ok(cid, here[1], kind, context) and \
                        self._port_ok(other, there[1], kind, context):
                    reached.add(other)
                    queue.append(other)
            # a reached container grants reach to contained components
            # through their external ports
            for child in self._children.get(cid, ()):
                if child in reached:
                    continue
                comp = self._components[child]
                if any(p.external and p.access_kind.admits(kind)
                       and self._port_available(p.id, context) for p in comp.ports):
                    reached.add(child)
                    queue.append(child)
        return reached

    def _expected_use(self, actor_components: list[str], target_id: str,
                      target_components: list[str]) -> bool:
        actor_set = set(actor_components)
        target_set = set(target_components)
        for chain in self.chains:
            members = set(chain.components)
            if not actor_set.intersection(members):
                continue
            if target_id in self._interfaces:
                if target_id in chain.interfaces or target_set.intersection(members):
                    return True
            elif target_id in members:
                return True
        return False


def _index(kind: str, items) -> dict:
    out = {}
    for item in items:
        if item.id in out:
            raise ModelInvariantError(f"duplicate {kind} id '{item.id}'")
        if not item.name:
            raise ModelInvariantError(f"{kind} '{item.id}' has an empty name")
        out[item.id] = item
    return out


def _get(index: dict, key: str, kind: str):
    try:
        return index[key]
    except KeyError:
        raise ResolutionError(f"unknown {kind} '{key}'", ref=key) from None
