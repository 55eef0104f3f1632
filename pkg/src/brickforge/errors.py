"""Exception hierarchy shared by the library, CLI and HTTP service.

Every error carries a stable machine-readable ``code`` and, where it makes
sense, the pipeline ``stage`` that produced it.
"""

from __future__ import annotations


class BrickForgeError(Exception):
    code = "error"

    def __init__(self, message: str, *, stage: str | None = None):
        super().__init__(message)
        self.stage = stage

    @property
    def message(self) -> str:
        return str(self)


class ValidationError(BrickForgeError):
    """A parameter or input value violates an operation's contract."""

    code = "invalid-parameter"


class VisionError(BrickForgeError):
    """Base class for photograph-to-bitmask pipeline failures."""

    code = "vision-error"


class NoModelFound(VisionError):
    code = "no-model-found"


class ReferenceBrickNotFound(VisionError):
    code = "reference-not-found"


class AmbiguousReference(VisionError):
    code = "ambiguous-reference"


class ProfileMismatch(BrickForgeError):
    """Profiles placed on orthogonal planes disagree on a shared axis."""

    code = "profile-mismatch"


class StateConflict(BrickForgeError):
    """The requested operation is not applicable to the current state."""

    code = "state-conflict"


class MeshContractError(BrickForgeError):
    """Input mesh does not satisfy the operation's preconditions."""

    code = "mesh-contract"


class ParseError(BrickForgeError):
    """A document (bitmask text, OBJ, project file) could not be parsed."""

    code = "parse-error"

    def __init__(self, message: str, *, location: str | None = None, stage: str | None = None):
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message, stage=stage)
        self.location = location


class VersionError(BrickForgeError):
    """Project document uses an unsupported schema version or fields."""

    code = "version-mismatch"
