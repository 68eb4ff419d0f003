"""Exception types shared across the toolkit.

The CLI maps these onto its exit-code contract: data problems (malformed
files, unknown ids) exit 2, scorer transport failures exit 3.
"""


class UprkitError(Exception):
    """Base class for all toolkit errors."""


class DataFormatError(UprkitError):
    """A file or payload violates its declared format or an invariant."""


class NotFoundError(UprkitError):
    """A referenced id (passage, query) does not resolve."""


class InvalidScorePairError(UprkitError, ValueError):
    """A (context, continuation) pair violates scorer preconditions."""


class ScorerTransportError(UprkitError):
    """The remote scoring service could not be reached or misbehaved."""
