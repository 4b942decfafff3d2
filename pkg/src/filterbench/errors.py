"""Exception types shared across the package."""


class ModelError(Exception):
    """Raised for malformed models or references to unknown atoms."""


class ResourceError(Exception):
    """Raised when a configured search or step budget is exceeded."""


class ParseError(ValueError):
    """Raised on malformed input text; carries the offending position."""

    def __init__(self, message: str, pos: int = -1, line: int = 0):
        self.pos = pos
        self.line = line
        where = f" at line {line}" if line else ""
        where += f" (column {pos + 1})" if pos >= 0 else ""
        super().__init__(f"{message}{where}")


class LabelError(ParseError):
    """Raised when the top element is used as a test label."""
