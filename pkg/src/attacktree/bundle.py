"""File formats and loaders for the project bundle.

A bundle is a directory of line-oriented, human-diffable JSON documents:

    architecture.json   operational + logical model
    study.json          risk study (feared events, tags, sources, scale)
    kb.json             security knowledge base
    config.json         generation options (optional)
    overlay.json        expert annotations (optional)

Every artefact carries an explicit stable ``id``; feared events are stored
as sentences and re-parsed at load, so the grammar is the contract.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .arch import (
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
from .dag import Annotation, AnnotationOverlay, AttackDag
from .errors import AttackTreeError, LoadError
from .generate import GenerationConfig
from .kb import (
    KnowledgeBase,
    Prerequisite,
    PrerequisiteKind,
    SecurityCriterion,
    SupportingAssetType,
    ThreatDef,
)
from .risk import (
    FearedEvent,
    PrimaryAsset,
    RiskStudy,
    SeverityScale,
    ThreatSource,
    parse_feared_event,
    validate_study,
)

FORMAT_VERSION = 1

ARCHITECTURE_FILE = "architecture.json"
STUDY_FILE = "study.json"
KB_FILE = "kb.json"
CONFIG_FILE = "config.json"
OVERLAY_FILE = "overlay.json"


def _read_json(path: Path) -> dict:
    if not path.exists():
        raise LoadError("file not found", path=str(path))
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise LoadError(f"invalid JSON: {exc.msg}", path=str(path),
                        location=f"line {exc.lineno}") from None
    if not isinstance(doc, dict):
        raise LoadError("top-level value must be an object", path=str(path))
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise LoadError(f"unsupported format_version {version!r} "
                        f"(expected {FORMAT_VERSION})", path=str(path))
    return doc


def _req(obj: dict, key: str, path: Path, location: str):
    if key not in obj:
        raise LoadError(f"missing required key '{key}'", path=str(path),
                        location=location)
    return obj[key]


# -- architecture --------------------------------------------------------------


def load_model(path: Path) -> ArchitectureModel:
    doc = _read_json(path)

    entities = [OperationalEntity(_req(e, "id", path, "entities"),
                                  _req(e, "name", path, "entities"),
                                  bool(e.get("is_actor", False)))
                for e in doc.get("entities", [])]
    activities = [OperationalActivity(_req(a, "id", path, "activities"),
                                      _req(a, "name", path, "activities"),
                                      _req(a, "owner", path, "activities"))
                  for a in doc.get("activities", [])]
    processes = []
    for p in doc.get("processes", []):
        acts = tuple(_req(p, "activities", path, "processes"))
        processes.append(OperationalProcess(
            _req(p, "id", path, "processes"), _req(p, "name", path, "processes"),
            acts, p.get("first", acts[0] if acts else ""),
            p.get("last", acts[-1] if acts else "")))

    states = []
    for s in doc.get("state_machine", {}).get("states", []):
        modes = []
        for m in s.get("modes", []):
            if "modes" in m or "submodes" in m:
                raise LoadError(
                    "state machines deeper than two levels (states containing "
                    "modes) are not supported", path=str(path),
                    location=f"state '{s.get('id')}'")
            modes.append(Mode(_req(m, "id", path, "modes"),
                              _req(m, "name", path, "modes")))
        states.append(State(_req(s, "id", path, "states"),
                            _req(s, "name", path, "states"), tuple(modes)))

    matrix = [MatrixEntry(_req(e, "state", path, "state_activity_matrix"),
                          e.get("mode"),
                          _req(e, "process", path, "state_activity_matrix"))
              for e in doc.get("state_activity_matrix", [])]

    components = []
    for c in doc.get("components", []):
        ports = tuple(Port(_req(p, "id", path, "ports"),
                           _req(p, "name", path, "ports"),
                           AccessKind(_req(p, "access_kind", path, "ports")),
                           bool(p.get("external", False)))
                      for p in c.get("ports", []))
        components.append(LogicalComponent(
            _req(c, "id", path, "components"), _req(c, "name", path, "components"),
            c.get("parent"), ports))

    interfaces = [InterfaceDef(_req(i, "id", path, "interfaces"),
                               _req(i, "name", path, "interfaces"),
                               tuple(_req(i, "exposing", path, "interfaces")),
                               tuple(i.get("ports", [])))
                  for i in doc.get("interfaces", [])]

    chains = [FunctionalChain(_req(c, "id", path, "chains"),
                              _req(c, "name", path, "chains"),
                              tuple(_req(c, "components", path, "chains")),
                              tuple(c.get("interfaces", [])))
              for c in doc.get("chains", [])]

    links = []
    for t in doc.get("trace_links", []):
        kind = _req(t, "kind", path, "trace_links")
        try:
            trace_kind = TraceKind(kind)
        except ValueError:
            raise LoadError(f"unknown trace link kind '{kind}'", path=str(path),
                            location="trace_links") from None
        links.append(TraceLink(_req(t, "source", path, "trace_links"),
                               _req(t, "target", path, "trace_links"), trace_kind))

    connections = []
    for pc in doc.get("port_connections", []):
        a = _req(pc, "from", path, "port_connections")
        b = _req(pc, "to", path, "port_connections")
        connections.append(PortConnection((a[0], a[1]), (b[0], b[1])))

    availability = [PortAvailability(_req(e, "port", path, "port_availability"),
                                     _req(e, "state", path, "port_availability"),
                                     e.get("mode"))
                    for e in doc.get("port_availability", [])]

    try:
        return ArchitectureModel(
            entities=entities, activities=activities, processes=processes,
            states=states, matrix=matrix, components=components,
            interfaces=interfaces, chains=chains, trace_links=links,
            port_connections=connections, port_availability=availability)
    except AttackTreeError as exc:
        raise LoadError(str(exc), path=str(path)) from None


# -- knowledge base --------------------------------------------------------------


def load_kb(path: Path) -> KnowledgeBase:
    doc = _read_json(path)
    types = [SupportingAssetType(
        _req(t, "id", path, "asset_types"), _req(t, "name", path, "asset_types"),
        bool(t.get("composite", False)), tuple(t.get("parts", [])),
        t.get("display_under"), bool(t.get("interface_entry", False)))
        for t in doc.get("asset_types", [])]
    criteria = [SecurityCriterion(_req(c, "id", path, "criteria"),
                                  _req(c, "name", path, "criteria"))
                for c in doc.get("criteria", [])]
    threats = []
    for t in doc.get("threats", []):
        code = _req(t, "code", path, "threats")
        prereqs = []
        for i, p in enumerate(t.get("prerequisites", []), start=1):
            kind_raw = p.get("kind")
            if kind_raw is None:
                raise LoadError(f"prerequisite {i} of threat '{code}' has no kind",
                                path=str(path), location=f"threats/{code}")
            try:
                kind = PrerequisiteKind(kind_raw)
            except ValueError:
                raise LoadError(
                    f"prerequisite {i} of threat '{code}' has unclassifiable "
                    f"kind '{kind_raw}'", path=str(path),
                    location=f"threats/{code}") from None
            prereqs.append(Prerequisite(_req(p, "text", path, f"threats/{code}"),
                                        kind, p.get("state"), p.get("mode")))
        threats.append(ThreatDef(
            code, _req(t, "description", path, "threats"),
            _req(t, "targeted_type", path, "threats"),
            tuple(_req(t, "criteria", path, "threats")),
            tuple(t.get("vulnerabilities", [])), tuple(prereqs)))
    try:
        return KnowledgeBase(asset_types=types, criteria=criteria, threats=threats)
    except AttackTreeError as exc:
        raise LoadError(str(exc), path=str(path)) from None


# -- study -----------------------------------------------------------------------


def load_study(path: Path, model: ArchitectureModel, kb: KnowledgeBase) -> RiskStudy:
    doc = _read_json(path)
    scale = SeverityScale(tuple(_req(doc, "severity_scale", path, "")))
    assets = [PrimaryAsset(_req(a, "id", path, "primary_assets"),
                           _req(a, "name", path, "primary_assets"),
                           _req(a, "process", path, "primary_assets"))
              for a in doc.get("primary_assets", [])]
    tags = dict(doc.get("asset_type_tags", {}))
    sources = [ThreatSource(_req(s, "id", path, "threat_sources"),
                            _req(s, "name", path, "threat_sources"),
                            bool(_req(s, "malevolent", path, "threat_sources")),
                            s.get("actor"))
               for s in doc.get("threat_sources", [])]
    try:
        study = RiskStudy(severity_scale=scale, primary_assets=assets,
                          asset_type_tags=tags, threat_sources=sources)
    except AttackTreeError as exc:
        raise LoadError(str(exc), path=str(path)) from None

    events = []
    for e in doc.get("feared_events", []):
        event_id = _req(e, "id", path, "feared_events")
        statement = _req(e, "statement", path, "feared_events")
        try:
            fe = parse_feared_event(statement, model, kb, study,
                                    event_id=event_id, severity=e.get("severity"))
        except AttackTreeError as exc:
            raise LoadError(f"feared event '{event_id}': {exc}",
                            path=str(path), location="feared_events") from None
        events.append(fe)
    study.feared_events = events
    study._events_by_id = {fe.id: fe for fe in events}
    return study


# -- config / overlay --------------------------------------------------------------


def load_config(path: Path) -> GenerationConfig:
    if not path.exists():
        return GenerationConfig()
    doc = _read_json(path)
    return GenerationConfig(
        dag_mode=bool(doc.get("dag_mode", True)),
        include_asset_type_layer=bool(doc.get("include_asset_type_layer", True)),
        emit_postconditions=bool(doc.get("emit_postconditions", False)))


def load_overlay(path: Path) -> AnnotationOverlay:
    if not path.exists():
        return {}
    doc = _read_json(path)
    overlay: AnnotationOverlay = {}
    for node_path, entry in doc.get("annotations", {}).items():
        try:
            overlay[node_path] = Annotation(
                decision=entry.get("decision", "open"),
                comment=entry.get("comment", ""),
                color=entry.get("color"))
        except AttackTreeError as exc:
            raise LoadError(str(exc), path=str(path),
                            location=node_path) from None
    return overlay


def save_overlay(path: Path, overlay: AnnotationOverlay) -> None:
    """Write-temp-then-rename so a crash never corrupts prior annotations."""
    doc = {
        "format_version": FORMAT_VERSION,
        "annotations": {p: overlay[p].to_dict() for p in sorted(overlay)},
    }
    text = json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name,
                               suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- tree documents ------------------------------------------------------------------


def save_tree(dag: AttackDag, path: Path) -> None:
    path.write_text(dag.to_text(), encoding="utf-8")


def load_tree(path: Path) -> AttackDag:
    doc = _read_json(path)
    if "nodes" not in doc or "edges" not in doc:
        raise LoadError("not a tree document (missing nodes/edges)",
                        path=str(path))
    return AttackDag.from_doc(doc)


# -- bundle -----------------------------------------------------------------------


@dataclass
class ProjectBundle:
    root: Path
    model: ArchitectureModel
    study: RiskStudy
    kb: KnowledgeBase
    config: GenerationConfig
    overlay: AnnotationOverlay = field(default_factory=dict)

    @property
    def overlay_path(self) -> Path:
        return self.root / OVERLAY_FILE


def load_bundle(root: str | Path, *, strict: bool = True) -> ProjectBundle:
    """Load and cross-validate all bundle inputs.

    With ``strict`` (the default) any study diagnostic is fatal; the
    ``validate`` command loads non-strictly to report everything at once.
    """
    root = Path(root)
    kb = load_kb(root / KB_FILE)
    model = load_model(root / ARCHITECTURE_FILE)
    study = load_study(root / STUDY_FILE, model, kb)
    config = load_config(root / CONFIG_FILE)
    overlay = load_overlay(root / OVERLAY_FILE)
    diags = validate_study(study, model, kb)
    if strict and diags:
        lines = "; ".join(f"{d.code}({d.subject})" for d in diags)
        raise LoadError(f"study failed cross-validation: {lines}",
                        path=str(root / STUDY_FILE))
    return ProjectBundle(root=root, model=model, study=study, kb=kb,
                         config=config, overlay=overlay)
