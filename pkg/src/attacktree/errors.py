"""Exception types shared across the package."""

from __future__ import annotations


class AttackTreeError(Exception):
    """Base class for every error raised by this package."""


class ResolutionError(AttackTreeError):
    """An identifier or display name could not be resolved.

    Carries the offending reference and, when helpful, the known
    candidates so callers can present a pick list.
    """

    def __init__(self, message: str, *, ref: str | None = None,
                 candidates: list[str] | None = None):
        if candidates:
            message = f"{message} (candidates: {', '.join(candidates)})"
        super().__init__(message)
        self.ref = ref
        self.candidates = list(candidates or [])


class UntracedProcessError(AttackTreeError):
    """An operational process has no traced functional chain."""

    def __init__(self, process_id: str):
        super().__init__(
            f"untraced process: '{process_id}' has no functional chain trace link"
        )
        self.process_id = process_id


class UntypedAssetError(AttackTreeError):
    """Chain participants without a supporting-asset type tag."""

    def __init__(self, component_ids: list[str]):
        super().__init__(
            "untyped supporting asset(s): " + ", ".join(component_ids)
        )
        self.component_ids = list(component_ids)


class FearedEventParseError(AttackTreeError):
    """The feared-event sentence does not match the required grammar."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ModelInvariantError(AttackTreeError):
    """A structural invariant of an input model is violated."""


class LoadError(AttackTreeError):
    """A bundle file failed schema or cross-reference validation."""

    def __init__(self, message: str, *, path: str | None = None,
                 location: str | None = None):
        prefix = ""
        if path:
            prefix = f"{path}: "
            if location:
                prefix = f"{path} [{location}]: "
        super().__init__(prefix + message)
        self.path = path
        self.location = location


class GenerationError(AttackTreeError):
    """Tree generation could not proceed with the given inputs."""
