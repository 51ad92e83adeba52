"""Risk-assessment study inputs: feared events under the strict sentence
grammar, the severity scale, supporting-asset type tags and the
threat-source catalog.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from .errors import FearedEventParseError, ModelInvariantError, ResolutionError

if TYPE_CHECKING:
    from .arch import ArchitectureModel
    from .kb import KnowledgeBase

GRAMMAR = "Loss of <security criterion> of the <primary asset> on the <operational entity>"


@dataclass(frozen=True)
class SeverityScale:
    """Strictly ordered severity labels, least severe first."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if not self.labels:
            raise ModelInvariantError("severity scale must not be empty")
        if len(set(self.labels)) != len(self.labels):
            raise ModelInvariantError("severity scale labels must be unique")

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ResolutionError(f"severity '{label}' not in scale",
                                  ref=label, candidates=list(self.labels)) from None

    def compare(self, a: str, b: str) -> int:
        ia, ib = self.index(a), self.index(b)
        return (ia > ib) - (ia < ib)


@dataclass(frozen=True)
class PrimaryAsset:
    """Something of value, mapped onto an operational process."""

    id: str
    name: str
    process: str


@dataclass(frozen=True)
class FearedEvent:
    id: str
    criterion: str
    primary_asset: str
    entity: str
    severity: str | None = None


@dataclass(frozen=True)
class ThreatSource:
    id: str
    name: str
    malevolent: bool
    modeled_actor: str | None = None


@dataclass
class RiskStudy:
    severity_scale: SeverityScale
    primary_assets: list[PrimaryAsset] = field(default_factory=list)
    asset_type_tags: dict[str, str] = field(default_factory=dict)
    threat_sources: list[ThreatSource] = field(default_factory=list)
    feared_events: list[FearedEvent] = field(default_factory=list)

    def __post_init__(self):
        self._assets_by_id = {}
        for pa in self.primary_assets:
            if pa.id in self._assets_by_id:
                raise ModelInvariantError(f"duplicate primary asset id '{pa.id}'")
            self._assets_by_id[pa.id] = pa
        self._sources_by_id = {}
        for ts in self.threat_sources:
            if ts.id in self._sources_by_id:
                raise ModelInvariantError(f"duplicate threat source id '{ts.id}'")
            self._sources_by_id[ts.id] = ts
        self._events_by_id = {fe.id: fe for fe in self.feared_events}

    def primary_asset(self, asset_id: str) -> PrimaryAsset:
        try:
            return self._assets_by_id[asset_id]
        except KeyError:
            raise ResolutionError(f"unknown primary asset '{asset_id}'",
                                  ref=asset_id) from None

    def has_primary_asset(self, asset_id: str) -> bool:
        return asset_id in self._assets_by_id

    def threat_source(self, source_id: str) -> ThreatSource:
        try:
            return self._sources_by_id[source_id]
        except KeyError:
            raise ResolutionError(f"unknown threat source '{source_id}'",
                                  ref=source_id) from None

    def feared_event(self, event_id: str) -> FearedEvent:
        try:
            return self._events_by_id[event_id]
        except KeyError:
            raise ResolutionError(
                f"unknown feared event '{event_id}'", ref=event_id,
                candidates=[fe.id for fe in self.feared_events]) from None


def parse_feared_event(text: str, model: "ArchitectureModel", kb: "KnowledgeBase",
                       study: RiskStudy, *, event_id: str = "",
                       severity: str | None = None) -> FearedEvent:
    """Parse a feared-event sentence against the strict grammar.

    Keywords are matched case-insensitively; the criterion, primary asset
    and entity are matched by display name with case folding, no fuzzy
    matching. Because names may themselves contain the keywords, every
    split is tried: exactly one must resolve.
    """
    s = text.strip()
    if s.endswith("."):
        s = s[:-1]
    low = s.casefold()
    head = "loss of "
    if not low.startswith(head):
        raise FearedEventParseError("expected sentence to start with 'Loss of'", 0)
    body = s[len(head):]
    body_low = low[len(head):]

    candidates = []
    for i in _find_all(body_low, " of the "):
        criterion_txt = body[:i]
        rest = body[i + len(" of the "):]
        rest_low = body_low[i + len(" of the "):]
        for j in _find_all(rest_low, " on the "):
            asset_txt = rest[:j]
            entity_txt = rest[j + len(" on the "):]
            candidates.append((criterion_txt, asset_txt, entity_txt))

    if not candidates:
        if " of the " not in body_low:
            raise FearedEventParseError(
                "expected \"of the\" after the security criterion", len(head))
        raise FearedEventParseError(
            "expected \"on the\" after the primary asset",
            len(head) + body_low.index(" of the ") + len(" of the "))

    resolved = []
    for criterion_txt, asset_txt, entity_txt in candidates:
        criterion = kb.criterion_by_name(criterion_txt)
        asset = _asset_by_name(study, asset_txt)
        entity = _entity_by_name(model, entity_txt)
        if criterion is not None and asset is not None and entity is not None:
            resolved.append((criterion, asset, entity))

    if len(resolved) == 1:
        criterion, asset, entity = resolved[0]
        return FearedEvent(id=event_id, criterion=criterion.id,
                           primary_asset=asset.id, entity=entity.id,
                           severity=severity)
    if len(resolved) > 1:
        raise ResolutionError(
            f"ambiguous feared event '{text}'", ref=text,
            candidates=[f"{c.name}/{a.name}/{e.name}" for c, a, e in resolved])

    # nothing resolved: report against the leftmost split, naming candidates
    criterion_txt, asset_txt, entity_txt = candidates[0]
    if kb.criterion_by_name(criterion_txt) is None:
        raise ResolutionError(
            f"criterion not in KB: '{criterion_txt}'", ref=criterion_txt,
            candidates=[c.name for c in kb.criteria])
    if _asset_by_name(study, asset_txt) is None:
        raise ResolutionError(
            f"unknown primary asset '{asset_txt}'", ref=asset_txt,
            candidates=[a.name for a in study.primary_assets])
    raise ResolutionError(
        f"unknown operational entity '{entity_txt}'", ref=entity_txt,
        candidates=[e.name for e in model.entities])


def format_feared_event(fe: FearedEvent, model: "ArchitectureModel",
                        kb: "KnowledgeBase", study: RiskStudy) -> str:
    """Canonical sentence form of a feared event."""
    criterion = kb.criterion(fe.criterion)
    asset = study.primary_asset(fe.primary_asset)
    entity = model.entity(fe.entity)
    return f"Loss of {criterion.name} of the {asset.name} on the {entity.name}"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    subject: str
    message: str


def validate_study(study: RiskStudy, model: "ArchitectureModel",
                   kb: "KnowledgeBase") -> list[Diagnostic]:
    """All dangling references, untagged chain participants and scale
    problems; an empty list means the study is valid."""
    diags: list[Diagnostic] = []

    for comp_id, type_id in study.asset_type_tags.items():
        if not model.has_component(comp_id):
            diags.append(Diagnostic(
                "dangling-ref", comp_id,
                f"asset type tag references unknown component '{comp_id}'"))
        if not kb.has_type(type_id):
            diags.append(Diagnostic(
                "dangling-ref", type_id,
                f"asset type tag on '{comp_id}' uses unknown type '{type_id}'"))

    process_ids = {p.id for p in model.processes}
    for pa in study.primary_assets:
        if pa.process not in process_ids:
            diags.append(Diagnostic(
                "dangling-ref", pa.id,
                f"primary asset '{pa.id}' maps to unknown process '{pa.process}'"))

    entity_index = {e.id: e for e in model.entities}
    for ts in study.threat_sources:
        if ts.modeled_actor is None:
            continue
        actor = entity_index.get(ts.modeled_actor)
        if actor is None:
            diags.append(Diagnostic(
                "dangling-ref", ts.id,
                f"threat source '{ts.id}' references unknown entity '{ts.modeled_actor}'"))
        elif not actor.is_actor:
            diags.append(Diagnostic(
                "dangling-ref", ts.id,
                f"threat source '{ts.id}' references non-actor entity '{ts.modeled_actor}'"))

    for fe in study.feared_events:
        if not kb.has_criterion(fe.criterion):
            diags.append(Diagnostic(
                "dangling-ref", fe.id,
                f"feared event '{fe.id}' references unknown criterion '{fe.criterion}'"))
        if not study.has_primary_asset(fe.primary_asset):
            diags.append(Diagnostic(
                "dangling-ref", fe.id,
                f"feared event '{fe.id}' references unknown primary asset '{fe.primary_asset}'"))
        if fe.entity not in entity_index:
            diags.append(Diagnostic(
                "dangling-ref", fe.id,
                f"feared event '{fe.id}' references unknown entity '{fe.entity}'"))
        if fe.severity is not None and fe.severity not in study.severity_scale.labels:
            diags.append(Diagnostic(
                "unordered-severity", fe.id,
                f"feared event '{fe.id}' severity '{fe.severity}' is not on the scale"))

    untagged = []
    for fe in study.feared_events:
        if not study.has_primary_asset(fe.primary_asset):
            continue
        pa = study.primary_asset(fe.primary_asset)
        if pa.process not in process_ids:
            continue
        try:
            chain = model.chain_for_process(pa.process)
        except Exception:
            diags.append(Diagnostic(
                "untraced-process", pa.process,
                f"process '{pa.process}' of feared event '{fe.id}' has no chain trace"))
            continue
        for cid in chain.components:
            if cid not in study.asset_type_tags and cid not in untagged:
                untagged.append(cid)
    for cid in untagged:
        diags.append(Diagnostic(
            "untagged-participant", cid,
            f"chain participant '{cid}' has no supporting-asset type tag"))

    return diags


def _find_all(haystack: str, needle: str) -> list[int]:
    out = []
    i = haystack.find(needle)
    while i != -1:
        out.append(i)
        i = haystack.find(needle, i + 1)
    return out


def _asset_by_name(study: RiskStudy, name: str) -> PrimaryAsset | None:
    folded = name.casefold()
    for pa in study.primary_assets:
        if pa.name.casefold() == folded:
            return pa
    return None


def _entity_by_name(model: "ArchitectureModel", name: str):
    folded = name.casefold()
    for e in model.entities:
        if e.name.casefold() == folded:
            return e
    return None
