"""Exception hierarchy shared by every declafl module."""

from __future__ import annotations


class DeclaflError(Exception):
    """Base class for all errors raised by declafl."""


class ParseError(DeclaflError):
    def __init__(self, message: str, line: int = 0, col: int = 0, path: str = "<string>"):
        super().__init__(f"{path}:{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.path = path


class AnalysisError(DeclaflError):
    """Name, arity and other static errors found after parsing."""


class NameResolutionError(AnalysisError):
    def __init__(self, identifier: str, span=None):
        where = f" at {span.line}:{span.col}" if span is not None else ""
        super().__init__(f"cannot resolve name {identifier!r}{where}")
        self.identifier = identifier
        self.span = span


class ArityError(AnalysisError):
    pass


class UnknownNode(DeclaflError):
    pass


class UnknownTest(DeclaflError):
    pass


class UnmatchedCommand(AnalysisError):
    pass


class ScopeError(AnalysisError):
    pass


class CapacityError(DeclaflError):
    """Grounding or search exceeded a configured variable or time budget."""


class NotUnsat(DeclaflError):
    pass


class InvalidMutant(DeclaflError):
    pass


class NoDistinguishingInstance(DeclaflError):
    pass


class Exhausted(DeclaflError):
    pass


class NoFailingTests(DeclaflError):
    pass


class NoUnsatFailures(DeclaflError):
    pass


class NoFaultLabels(DeclaflError):
    pass
