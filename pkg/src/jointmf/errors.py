"""Exception hierarchy. Each class carries the CLI exit status it maps to."""


class JointMFError(Exception):
    exit_code = 1


class ParameterError(JointMFError, ValueError):
    """Invalid argument, grid, scale set or configuration."""

    exit_code = 2


class ModelError(ParameterError):
    """Generator parameters that describe no valid stochastic model."""


class SingularParameterError(ParameterError):
    pass


class DomainError(ParameterError):
    pass


class DataError(JointMFError, ValueError):
    """Input data that cannot be analysed (bad rows, zero mass, ...)."""

    exit_code = 3


class DegenerateInputError(DataError):
    pass


class FitError(JointMFError):
    exit_code = 4


class ToleranceError(JointMFError):
    """A comparison against a reference exceeded its configured tolerance."""

    exit_code = 5
