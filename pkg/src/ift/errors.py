"""Exception hierarchy for the ift package.

Every error raised by the library derives from IFTError so callers can catch
one base type; the concrete subclasses map to distinct CLI exit codes.
"""

from __future__ import annotations


class IFTError(Exception):
    """Base error for this package."""


class FormatError(IFTError, ValueError):
    """Malformed serialized input (tree/distribution/record JSON or CSV)."""


class CapExceededError(IFTError):
    """A dense-table size cap (variable count or vertex count) was exceeded."""


class InvalidTreeError(IFTError, ValueError):
    """An operation received a tree that fails validation.

    Carries the full violation list from :func:`ift.core.validate`.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid tree: " + "; ".join(self.violations))


class PreconditionError(IFTError, ValueError):
    """An operation's stated precondition does not hold for its arguments."""


class ZeroProbabilityError(IFTError):
    """A conditioning event has probability zero.

    Raised by single-event conditioning; expectation-style operations skip
    zero-probability outcomes with weight zero instead of raising.
    """
