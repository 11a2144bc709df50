"""Exception types raised across the package."""


class ConfigError(ValueError):
    """A detection configuration violates one of its constraints.

    ``constraint`` names the violated rule so callers (and the CLI) can
    branch on it without parsing the message.
    """

    def __init__(self, constraint, message):
        super().__init__(message)
        self.constraint = constraint


class LengthError(ValueError):
    """An input has a length the operation cannot accept (e.g. odd)."""


class StateError(RuntimeError):
    """A stateful object was used in the wrong phase."""


class HaltedError(StateError):
    """AboveThreshold was queried after it already reported Top."""


class ScaleError(ValueError):
    """A noise scale was not strictly positive."""


class EmptyError(ValueError):
    """A selection mechanism received no candidates."""


class DomainError(ValueError):
    """A bound calculator received parameters outside its domain."""
