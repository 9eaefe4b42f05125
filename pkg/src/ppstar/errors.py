"""Shared exception types.

Every error raised by the library on bad input derives from PpstarError,
so CLI and test code can distinguish domain failures from bugs.
"""


class PpstarError(Exception):
    """Base class for all library errors."""


class ParseError(PpstarError):
    """Formula text rejected; carries the character offset of the problem."""

    def __init__(self, position: int, message: str):
        self.position = position
        self.message = message
        super().__init__(f"parse error at {position}: {message}")


class SchemaError(PpstarError):
    """Structure file rejected; carries the JSON path of the offending value."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class DimensionError(PpstarError):
    """Operands with incompatible ambient dimensions or arities."""


class TypeMismatchError(PpstarError):
    """extend() called on tuples whose pp* fingerprints already differ."""


class BasisIncompleteError(PpstarError):
    """The formula basis at the given caps cannot certify the request."""


class SizeLimitError(PpstarError):
    """Structure too large for exhaustive automorphism search."""
