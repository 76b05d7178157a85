"""
Exception hierarchy shared by every package in the bandit library.

All library errors derive from ``CmabError`` so callers can catch one type.
Precondition violations also derive from ``ValueError``.
"""


class CmabError(Exception):
    """Base exception for combinatorial bandit errors"""

    pass


class InvalidInputError(CmabError, ValueError):
    """Raised when an input violates a documented precondition"""

    pass


class DegenerateInputError(InvalidInputError):
    """Raised when a quantity is undefined for the given input (zero denominator)"""

    pass


class InfeasibleError(CmabError):
    """Raised when no action with K items satisfies the diversity constraints"""

    pass


class EndOfLogError(CmabError):
    """Raised when a replay log has no event for the requested round"""

    pass


class ConfigurationError(CmabError, ValueError):
    """Raised for invalid settings or unsupported mode combinations"""

    pass


class UndefinedWindowError(CmabError):
    """Raised when a metric window is requested before it exists"""

    pass


class InternalError(CmabError, RuntimeError):
    """Raised when an internal contract is broken"""

    pass
