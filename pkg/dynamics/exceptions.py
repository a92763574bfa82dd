"""Errors raised by the dynamics pipelines.

Each error carries the process exit code the experiment commands use:
2 for configuration and usage problems, 1 for scientific failures.
"""


class DynamicsError(Exception):
    exit_code = 1


class ConfigurationError(DynamicsError):
    exit_code = 2

    def __init__(self, message, line=None, field=None):
        self.detail = message
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f'line {line}')
        if field is not None:
            location.append(f"field '{field}'")
        if location:
            message = f"{', '.join(location)}: {message}"
        super().__init__(message)


class DomainError(DynamicsError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class WindowError(DynamicsError):
    def __init__(self, message, required_extension=None):
        self.required_extension = required_extension
        if required_extension is not None:
            message = f'{message} (extend the window by {required_extension:g})'
        super().__init__(message)


class IntegrationError(DynamicsError):
    pass


class NonHyperbolicError(DynamicsError):
    def __init__(self, message, gap=None):
        self.gap = gap
        super().__init__(message)


class IsomorphismError(DynamicsError):
    """A restricted flow map on the unstable range is not invertible."""


class ContractionError(DynamicsError):
    def __init__(self, message, rho=None, threshold=None):
        self.rho = rho
        self.threshold = threshold
        super().__init__(message)


class RobustnessHypothesisError(DynamicsError):
    def __init__(self, message, delta=None, threshold=None):
        self.delta = delta
        self.threshold = threshold
        super().__init__(message)


class ThresholdError(DynamicsError):
    def __init__(self, message, which=None):
        self.which = which
        super().__init__(message)


class ConvergenceError(DynamicsError):
    pass
