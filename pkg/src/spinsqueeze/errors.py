"""Exception hierarchy shared by the solver, the oracle and the CLI."""


class SpinSqueezeError(Exception):
    """Base class for all package errors."""


class DomainError(SpinSqueezeError, ValueError):
    """An argument lies outside the domain of the operation."""


class CapacityError(SpinSqueezeError):
    """A requested size exceeds what the implementation can address."""


class ParameterError(SpinSqueezeError, ValueError):
    """Physical parameters violate their invariants."""


class SingularParameterError(ParameterError):
    pass


class IntegrationError(SpinSqueezeError):
    """The stochastic integration produced a non-finite or non-positive trace.

    ``step`` and ``time`` locate the failure when known.
    """

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time

    def __str__(self):
        msg = super().__str__()
        if self.step is not None:
            msg += f" (step {self.step}"
            if self.time is not None:
                msg += f", t={self.time:.6g} us"
            msg += ")"
        return msg


class OracleIntegrityError(SpinSqueezeError):
    """The full density matrix is not permutation symmetric."""


class ConfigError(SpinSqueezeError):
    pass
