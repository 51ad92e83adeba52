"""Security knowledge base: supporting-asset types, security criteria and
threat descriptions with machine-checkable prerequisites.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import ModelInvariantError, ResolutionError


class PrerequisiteKind(str, Enum):
    KNOWLEDGE = "knowledge"
    PHYSICAL_ACCESS = "physical_access"
    LOGICAL_ACCESS = "logical_access"
    STATE_MODE_CHANGE = "state_mode_change"
    OTHER = "other"


@dataclass(frozen=True)
class Prerequisite:
    """One precondition a threat source must satisfy to enact a threat.

    ``state``/``mode`` optionally point at the model state/mode a
    state-change prerequisite refers to, so generated leaves can name it
    and follow renames.
    """

    text: str
    kind: PrerequisiteKind
    state: str | None = None
    mode: str | None = None


@dataclass(frozen=True)
class SupportingAssetType:
    """A category of supporting assets (hardware, software, ...).

    ``composite`` types (system-like) decompose into ``parts``.
    ``display_under`` folds a subtype into another type's structural
    branch (people shown under organisations). ``interface_entry`` marks
    the type whose attack entry points are external interfaces rather
    than tagged components (networks).
    """

    id: str
    name: str
    composite: bool = False
    parts: tuple[str, ...] = ()
    display_under: str | None = None
    interface_entry: bool = False


@dataclass(frozen=True)
class SecurityCriterion:
    id: str
    name: str


@dataclass(frozen=True)
class ThreatDef:
    code: str
    description: str
    targeted_type: str
    criteria: tuple[str, ...]
    vulnerabilities: tuple[str, ...] = ()
    prerequisites: tuple[Prerequisite, ...] = ()


@dataclass
class KnowledgeBase:
    """Immutable after construction; all queries preserve declaration order."""

    asset_types: list[SupportingAssetType]
    criteria: list[SecurityCriterion]
    threats: list[ThreatDef]
    _types_by_id: dict[str, SupportingAssetType] = field(init=False, repr=False)
    _criteria_by_id: dict[str, SecurityCriterion] = field(init=False, repr=False)
    _threats_by_code: dict[str, ThreatDef] = field(init=False, repr=False)

    def __post_init__(self):
        self._types_by_id = {}
        for t in self.asset_types:
            if t.id in self._types_by_id:
                raise ModelInvariantError(f"duplicate asset type id '{t.id}'")
            self._types_by_id[t.id] = t
        self._criteria_by_id = {}
        for c in self.criteria:
            if c.id in self._criteria_by_id:
                raise ModelInvariantError(f"duplicate criterion id '{c.id}'")
            self._criteria_by_id[c.id] = c
        self._threats_by_code = {}
        for th in self.threats:
            if th.code in self._threats_by_code:
                raise ModelInvariantError(f"duplicate threat code '{th.code}'")
            if not th.criteria:
                raise ModelInvariantError(
                    f"threat '{th.code}' declares no security criteria"
                )
            if th.targeted_type not in self._types_by_id:
                raise ModelInvariantError(
                    f"threat '{th.code}' targets undeclared type '{th.targeted_type}'"
                )
            for crit in th.criteria:
                if crit not in self._criteria_by_id:
                    raise ModelInvariantError(
                        f"threat '{th.code}' references undeclared criterion '{crit}'"
                    )
            self._threats_by_code[th.code] = th
        for t in self.asset_types:
            for part in t.parts:
                if part not in self._types_by_id:
                    raise ModelInvariantError(
                        f"composite type '{t.id}' lists undeclared part '{part}'"
                    )
            if t.display_under is not None and t.display_under not in self._types_by_id:
                raise ModelInvariantError(
                    f"type '{t.id}' displays under undeclared type '{t.display_under}'"
                )

    # -- lookups -----------------------------------------------------------

    def type(self, type_id: str) -> SupportingAssetType:
        try:
            return self._types_by_id[type_id]
        except KeyError:
            raise ResolutionError(f"unknown supporting asset type '{type_id}'",
                                  ref=type_id) from None

    def has_type(self, type_id: str) -> bool:
        return type_id in self._types_by_id

    def criterion(self, criterion_id: str) -> SecurityCriterion:
        try:
            return self._criteria_by_id[criterion_id]
        except KeyError:
            raise ResolutionError(f"unknown security criterion '{criterion_id}'",
                                  ref=criterion_id) from None

    def has_criterion(self, criterion_id: str) -> bool:
        return criterion_id in self._criteria_by_id

    def criterion_by_name(self, name: str) -> SecurityCriterion | None:
        folded = name.casefold()
        for c in self.criteria:
            if c.name.casefold() == folded:
                return c
        return None

    def threat(self, code: str) -> ThreatDef:
        try:
            return self._threats_by_code[code]
        except KeyError:
            raise ResolutionError(f"unknown threat code '{code}'", ref=code) from None

    def structural_types(self) -> list[SupportingAssetType]:
        """Types that get their own layer node: non-composite, not folded."""
        return [t for t in self.asset_types
                if not t.composite and t.display_under is None]

    def effective_types(self, type_id: str) -> list[str]:
        """Structural types an asset of the given tag belongs to.

        Composite tags expand to their parts; folded subtypes keep their
        own identity for threat matching but sit under the parent branch.
        """
        t = self.type(type_id)
        if t.composite:
            return list(t.parts)
        return [t.id]

    def branch_types(self, type_id: str) -> list[str]:
        """Structural branch(es) the tagged asset attaches under."""
        t = self.type(type_id)
        if t.composite:
            return list(t.parts)
        if t.display_under is not None:
            return [t.display_under]
        return [t.id]

    # -- queries -----------------------------------------------------------

    def threats_for(self, asset_type_id: str, criterion_id: str) -> list[ThreatDef]:
        """All threats targeting the type and concerning the criterion,
        in declaration order."""
        self.type(asset_type_id)
        self.criterion(criterion_id)
        return [t for t in self.threats
                if t.targeted_type == asset_type_id and criterion_id in t.criteria]

    def threats_for_tag(self, tag_type_id: str, criterion_id: str) -> list[ThreatDef]:
        """Threats applicable to an asset carrying the given tag.

        For composite tags this is the union over the parts, still in
        declaration order. Folded subtypes (people) match their own
        threats, not the branch they display under.
        """
        targets = set(self.effective_types(tag_type_id))
        self.criterion(criterion_id)
        return [th for th in self.threats
                if th.targeted_type in targets and criterion_id in th.criteria]
