"""Exception hierarchy shared across the library.

Every error raised by molvec derives from MolvecError so callers can catch
broadly; the CLI maps subclasses onto exit codes.
"""


class MolvecError(Exception):
    """Base class for all molvec errors."""


class GraphError(MolvecError):
    """Structurally invalid molecular graph (bad endpoint, self-loop, ...)."""


class ConfigError(MolvecError):
    """Invalid configuration value (dimensions, fractions, level counts)."""


class ParseError(MolvecError):
    """Malformed input text; carries a position when known."""

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (position {position})"
        super().__init__(message)
        self.position = position


class UnsupportedError(ParseError):
    """Input is well-formed but uses a feature outside the supported subset."""


class FormatError(MolvecError):
    """File content violates the declared external format."""


class IoError(MolvecError):
    """Missing or unreadable file; carries the offending path."""


class ShapeError(MolvecError):
    """Array arguments are not shape-congruent."""


class VocabError(MolvecError):
    """Atom id outside the embedding vocabulary."""


class NumericsError(MolvecError):
    """Non-finite value encountered where finite math is required."""


class DataError(MolvecError):
    """Dataset-level contract violation (missing label, single class, ...)."""


class VersionError(MolvecError):
    """Model archive version not recognized."""


class CorruptArchiveError(MolvecError):
    """Model archive payload does not match its declared shapes."""
