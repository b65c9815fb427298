"""Exception hierarchy shared by all modules."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class CapacityError(ValidationError):
    """Requested Hilbert space exceeds the configured dimension cap."""


class ModelDefinitionError(ValueError):
    """A Hamiltonian specification does not describe a valid model."""


class NumericalError(ArithmeticError):
    """A linear-algebra routine failed or produced an unusable result."""


class AccuracyError(NumericalError):
    """An integrator could not reach the requested accuracy.

    The achieved residual is kept on ``residual`` so callers can decide
    whether to retry with more steps.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class ConditionViolatedError(ModelDefinitionError):
    """The model breaks the no-qubits-interaction condition."""


class InsufficientDataError(ValueError):
    """Too few usable points for a power-law fit."""
