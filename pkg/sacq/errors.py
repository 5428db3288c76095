"""Exception hierarchy for sacq."""

from typing import Optional


class SacqError(Exception):
    """Base class for every error raised by sacq."""


class DimensionMismatchError(SacqError, ValueError):
    """Vector or operator dimensions do not agree."""

    def __init__(self, expected: int, got: int, what: str = "vector"):
        self.expected = expected
        self.got = got
        super().__init__(f"{what}: expected dimension {expected}, got {got}")


class InvalidOperatorError(SacqError, ValueError):
    """An operator cannot be built from the given data."""


class NormEstimationError(SacqError):
    """Power iteration did not converge; `estimate` holds the best value seen."""

    def __init__(self, message: str, estimate: float):
        self.estimate = estimate
        super().__init__(message)


class PlanValidationError(SacqError, ValueError):
    """A string plan is outside the admissible family."""


class StringIndexError(PlanValidationError):
    def __init__(self, index: int, p: int):
        self.index = index
        super().__init__(f"operator index {index} out of range 0..{p - 1}")


class StringTooLongError(PlanValidationError):
    def __init__(self, string: tuple, q_bar: int):
        self.string = string
        super().__init__(f"string {string} has length {len(string)} > q_bar={q_bar}")


class NotFitError(PlanValidationError):
    def __init__(self, missing: set):
        self.missing = frozenset(missing)
        super().__init__(f"plan is not fit, missing indices {sorted(self.missing)}")


class WeightSumError(PlanValidationError):
    def __init__(self, total: float):
        self.total = total
        super().__init__(f"weights sum to {total!r}, expected 1")


class WeightBelowDeltaError(PlanValidationError):
    def __init__(self, string: tuple, weight: float, delta: float):
        self.string = string
        self.weight = weight
        super().__init__(f"weight {weight!r} of string {string} is below delta={delta!r}")


class ConfigError(SacqError, ValueError):
    """Solver configuration is invalid."""


class ProblemFileError(SacqError, ValueError):
    """A problem, solution or trace file cannot be parsed."""

    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class DegenerateGeometryError(SacqError, ValueError):
    """Phantom geometry produced an empty or undosed structure."""


class NonFiniteIterateError(SacqError, ArithmeticError):
    """The solve loop produced NaN or inf; `state` is the last finite state."""

    def __init__(self, message: str, state=None):
        self.state = state
        super().__init__(message)


class NegativeDoseError(SacqError, ValueError):
    """A dose vector handed to the DVH has negative entries."""
