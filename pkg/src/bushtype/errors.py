"""Exception hierarchy shared by the construction and verification modules."""


class BushError(Exception):
    """Base class for every error raised by this package."""


class NotAnOddPrime(BushError, ValueError):
    pass


class DimensionMismatch(BushError, ValueError):
    pass


class BudgetExhausted(BushError):
    def __init__(self, nodes, message=None):
        self.nodes = nodes
        super().__init__(message or f"search budget exhausted after {nodes} nodes")


class SizeMismatch(BushError, ValueError):
    def __init__(self, expected, actual, what="subset"):
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what} has size {actual}, expected {expected}")


class BadLineSelection(BushError, ValueError):
    pass


class SizeInvariantViolated(BushError):
    pass


class NoAdmissibleLine(BushError):
    pass


class MixedGroups(BushError, ValueError):
    pass


class CertificateMismatch(BushError):
    pass


class FactorizationError(BushError, ValueError):
    pass


class DisjointnessViolated(BushError):
    pass


class NotAConnectionSet(BushError, ValueError):
    pass


class InvalidKind(BushError, ValueError):
    pass


class ParseError(BushError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
