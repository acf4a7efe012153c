from typing import Iterable, Optional, Tuple


class TemporalLogicError(Exception):
    """Base class for every error raised by tlsynth."""

    exit_code = 2


class SyntaxFailure(TemporalLogicError):
    """Specification text could not be tokenized or parsed."""

    exit_code = 1

    def __init__(self, message: str, span: Tuple[int, int]):
        super().__init__(message)
        self.message = message
        self.span = span

    @property
    def offset(self) -> int:
        return self.span[0]


class LexError(SyntaxFailure):
    """Unrecognized character in specification text."""

    def __init__(self, message: str, offset: int):
        super().__init__(message, (offset, offset + 1))


class ParseError(SyntaxFailure):
    """Token sequence does not match the grammar."""

    def __init__(
        self, message: str, span: Tuple[int, int], expected: Optional[Iterable[str]] = None
    ):
        super().__init__(message, span)
        self.expected = frozenset(expected or ())

    def __str__(self) -> str:
        if not self.expected:
            return self.message
        return f"{self.message} (expected one of: {', '.join(sorted(self.expected))})"


class MissingInterval(ParseError):
    """Temporal operator written without its [a,b] interval."""


class SemanticError(TemporalLogicError):
    """Well-formed input that the requested operation cannot accept."""


class UnknownWeight(SemanticError):
    def __init__(self, name: str):
        super().__init__(f"weight '{name}' is not defined in the weight table")
        self.name = name


class WeightArityMismatch(SemanticError):
    def __init__(self, name: str, expected: int, got: int):
        super().__init__(f"weight '{name}' has {got} entries, operator needs {expected}")
        self.name = name
        self.expected = expected
        self.got = got


class InvalidWeight(SemanticError):
    """Weight vector with a non-positive or non-finite entry."""


class UnsupportedNegation(SemanticError):
    """Negation reached an Until node; there is no Release operator to dualize into."""


class UnsupportedOperator(SemanticError):
    """Operator not supported by the requested semantics (e.g. Until under AGM)."""


class MissingBound(SemanticError):
    def __init__(self, signal: str, reason: str = "no bounds given"):
        super().__init__(f"signal '{signal}': {reason}")
        self.signal = signal


class UnknownSignal(SemanticError):
    def __init__(self, signal: str):
        super().__init__(f"unknown signal '{signal}'")
        self.signal = signal


class HorizonOverrideTooSmall(SemanticError):
    def __init__(self, requested: int, needed: int):
        super().__init__(f"horizon {requested} is shorter than the formula horizon {needed}")
        self.requested = requested
        self.needed = needed


class DimensionMismatch(SemanticError):
    """Matrix or vector shapes of a system description do not agree."""


class TraceTooShort(SemanticError):
    def __init__(self, needed: int, got: int):
        super().__init__(f"trace needs {needed} steps, has {got}")
        self.needed = needed
        self.got = got


class BatchTraceError(SemanticError):
    def __init__(self, index: int, cause: TemporalLogicError):
        super().__init__(f"trace {index}: {cause}")
        self.index = index
        self.cause = cause


class ConfigError(SemanticError):
    """Invalid configuration value or configuration file schema."""


class TraceFormatError(SemanticError):
    """Trace CSV does not follow the time,<signal>... layout."""


class ModelError(TemporalLogicError):
    """Invalid MILP construction request."""


class DuplicateName(ModelError):
    def __init__(self, name: str):
        super().__init__(f"name '{name}' already used in model")
        self.name = name


class BadBounds(ModelError):
    """Lower bound above upper bound, or binary bounds outside [0, 1]."""


class UnknownVar(ModelError):
    def __init__(self, var: int):
        super().__init__(f"variable id {var} does not exist")
        self.var = var


class UnboundedSource(ModelError):
    """Absolute-value link requested for a variable with an infinite bound."""


class NoObjective(ModelError):
    """Model exported before an objective was set."""


class NotOptimal(ModelError):
    def __init__(self, status: str):
        super().__init__(f"solution status is '{status}', no incumbent to extract")
        self.status = status


class SolverError(TemporalLogicError):
    """Numerical breakdown inside the simplex method."""
