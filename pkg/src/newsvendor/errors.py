"""Exception hierarchy shared across the package."""


class NewsvendorError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(NewsvendorError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(NewsvendorError, ArithmeticError):
    """An iterative routine hit its iteration limit."""


class BracketError(NewsvendorError, ValueError):
    """Root bracket endpoints do not straddle a sign change."""


class UnsupportedPolicyError(NewsvendorError, TypeError):
    """The policy form is not supported by the requested evaluator."""


class DivergenceError(NewsvendorError, ArithmeticError):
    """A quantity is infinite (e.g. a distribution without a finite mean)."""


class InconsistencyError(NewsvendorError, RuntimeError):
    """An internal invariant was violated; indicates a numerical bug."""


class HorizonError(NewsvendorError):
    """No answer exists below the scan horizon."""


class ZeroOracleError(NewsvendorError, ValueError):
    """The oracle cost is zero, so relative regret cannot be estimated."""
