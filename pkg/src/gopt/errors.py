"""Exception hierarchy shared across the package."""


class GoptError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(GoptError):
    """Schema file is malformed or internally inconsistent."""


class GraphLoadError(GoptError):
    """Graph CSV data violates the schema or references missing vertices."""


class QuerySyntaxError(GoptError):
    """Query text does not conform to the grammar."""

    def __init__(self, message: str, position: int | None = None, expected=None):
        self.position = position
        self.expected = tuple(expected) if expected else ()
        detail = message
        if position is not None:
            detail += f" (at offset {position})"
        if self.expected:
            detail += " expected " + " | ".join(self.expected)
        super().__init__(detail)


class BindingError(GoptError):
    """Unknown type name, alias or tag reference."""


class PatternError(GoptError):
    """Pattern is structurally invalid (disconnected, conflicting constraints)."""


class GuardError(GoptError):
    """A combinatorial or size safety guard was exceeded."""


class ExecutionError(GoptError):
    """Runtime failure while evaluating a plan (unbound parameter, type mismatch)."""
