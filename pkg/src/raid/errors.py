"""Exception types shared across the library, CLI, and HTTP service.

Every error carries a stable machine-readable ``code`` so the service can
map exceptions to wire-format error bodies without string matching.
"""


class RaidError(Exception):
    """Base class for all library errors."""

    code = "internal"

    def __init__(self, message: str, detail=None):
        super().__init__(message)
        self.message = message
        self.detail = detail


class InvalidPolygonError(RaidError):
    """Input polygon cannot be repaired into a valid region."""

    code = "invalid_polygon"


class DegenerateRegionError(RaidError):
    """Region has zero area where positive area is required."""

    code = "degenerate_region"


class EmptyRelationshipError(RaidError):
    """Target contributes no coverage anywhere; descriptor would be all-zero."""

    code = "empty_relationship"


class NotFoundError(RaidError):
    code = "not_found"


class ConflictError(RaidError):
    code = "conflict"


class ConfigMismatchError(RaidError):
    """Descriptor shapes/configs of two operands do not agree."""

    code = "config_mismatch"


class BadRequestError(RaidError):
    code = "bad_request"


class ParseError(RaidError):
    """Annotation or sidecar file could not be parsed."""

    code = "parse_error"
