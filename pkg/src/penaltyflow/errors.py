"""Exception hierarchy shared by all modules."""


class ContractError(ValueError):
    """An argument violates a documented precondition (shape, sign, ...)."""


class PreconditionError(ContractError):
    """A mathematical hypothesis required by an operation does not hold."""


class ConstructionError(ValueError):
    """An operator, schedule or problem could not be built from its parameters."""


class NumericalError(RuntimeError):
    """An iterative numerical routine failed."""


class NonConvergenceError(NumericalError):
    def __init__(self, message, best_residual=float("nan"), iterations=0):
        super().__init__(message)
        self.best_residual = best_residual
        self.iterations = iterations


class DivergenceError(NumericalError):
    def __init__(self, message, last_finite_t):
        super().__init__(message)
        self.last_finite_t = last_finite_t
