"""Shared exception types.

Exit-code mapping used by the CLI: ConfigError -> 2, ResourceError and
TruncationError -> 3, CheckFailure -> 1.
"""


class FsmapsError(Exception):
    pass


class ConfigError(FsmapsError):
    """Incompatible caps, bad arguments, malformed configuration."""


class NotInvertible(FsmapsError):
    """Series or scalar with no inverse in the truncated ring."""


class TruncationError(FsmapsError):
    """Requested coefficient lies beyond the truncation budget."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class ResourceError(FsmapsError):
    """Combinatorial size guard tripped (dart limit, graph limit)."""


class DegenerateCurve(FsmapsError):
    """Non-simple critical point; ordinary recursion not applicable."""


class NoConvergence(FsmapsError):
    """Numeric Newton iteration failed to converge."""
