"""Exception types shared across the package."""


class Spline2ReluError(Exception):
    """Base class for all package errors."""


class DomainError(Spline2ReluError, ValueError):
    """Input outside the domain or range a routine is defined on."""


class StructureError(Spline2ReluError, ValueError):
    """A network or function object violates a structural invariant."""


class ContractError(Spline2ReluError, ValueError):
    """A declared analytic property (Lipschitz bound, sign, ...) fails to hold."""


class DegenerateCompositionError(Spline2ReluError, ValueError):
    """A composition factor is constant on the range it receives."""


class ResourceError(Spline2ReluError, RuntimeError):
    """A configured node or size budget would be exceeded."""


class BudgetError(Spline2ReluError, RuntimeError):
    """A compiled network exceeds its guaranteed parameter budget."""


class ParseError(Spline2ReluError, ValueError):
    """A text file does not conform to the expected format."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
