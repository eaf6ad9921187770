# coding: utf-8
# vim:sw=4:ts=4:et:
"""Exceptions raised by thermonet."""


class ThermoNetError(Exception):
    """Base class for all thermonet errors."""


class ConfigError(ThermoNetError):
    """Configuration file or value is invalid."""


class DataError(ThermoNetError):
    """Dataset or checkpoint file is missing or malformed."""


class InvalidInputError(ThermoNetError, ValueError):
    """Input value violates an operation precondition."""


class InvalidParameterError(ThermoNetError, ValueError):
    """Material or model parameter is out of its admissible range."""


class InvalidStateError(ThermoNetError, ValueError):
    """Internal state of a model became inadmissible."""


class DegenerateDeformationError(InvalidInputError):
    """Deformation gradient is not invertible or inverts orientation."""


class ShapeError(ThermoNetError, ValueError):
    """Array dimensions do not chain."""


class UsageError(ThermoNetError):
    """An API was called in an unsupported way."""


class IntegrationError(ThermoNetError):
    """Time integration of the classical model failed."""

    def __init__(self, message, residual=None):
        super(IntegrationError, self).__init__(message)
        self.residual = residual


class GenerationError(ThermoNetError):
    """Too many sequences had to be skipped while generating data."""


class EvaluationError(ThermoNetError):
    """A network produced a non-finite value."""


class TrainingAbortError(ThermoNetError):
    """Training stopped on a non-finite loss or gradient."""

    def __init__(self, message, last_good_state=None, history=None):
        super(TrainingAbortError, self).__init__(message)
        self.last_good_state = last_good_state
        self.history = history or []


# exit code class of every error family
NUMERIC_ERRORS = (InvalidParameterError, InvalidStateError,
                  IntegrationError, GenerationError, EvaluationError,
                  TrainingAbortError, DegenerateDeformationError)
