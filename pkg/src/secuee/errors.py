"""Exception types raised by the solver library."""


class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""


class BracketError(RuntimeError):
    """A monotone root search could not bracket its target."""


class SolverError(RuntimeError):
    """A solver failed to produce a valid point."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
