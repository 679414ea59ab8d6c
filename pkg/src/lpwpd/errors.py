"""Exception hierarchy shared by all modules."""


class LpWpdError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(LpWpdError, ValueError):
    pass


class InvalidConfig(LpWpdError, ValueError):
    pass


class ConfigMismatch(LpWpdError, ValueError):
    pass


class InvalidWeight(LpWpdError, ValueError):
    pass


class InvalidMask(LpWpdError, ValueError):
    pass


class SolverError(LpWpdError, ArithmeticError):
    """Numerical failure inside a per-bin solver; the pipeline may fall back."""


class NotPositiveDefinite(SolverError):
    pass


class ConvergenceFailure(SolverError):
    pass


class DegenerateReference(SolverError):
    pass


class DegenerateConstraint(SolverError):
    pass
