"""Exception hierarchy shared by every sml module."""

from __future__ import annotations


class SmlError(Exception):
    """Base class for all errors raised by sml."""


class ValidationError(SmlError, ValueError):
    """Invalid model parameters or malformed user input."""


class ConfigurationError(SmlError, ValueError):
    """A run or grid configuration cannot be used (e.g. grid too coarse)."""


class DomainError(SmlError, ValueError):
    """A point lies outside the declared evaluation box."""


class EvaluatorError(SmlError, FloatingPointError):
    """A user-supplied evaluator returned NaN or Inf."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class NumericalError(SmlError, ArithmeticError):
    """Generic numerical breakdown (e.g. QR iteration did not converge)."""


class GapTooSmallError(NumericalError):
    """The fast/slow spectral gap is below the configured threshold."""

    def __init__(self, message, ratio=None):
        super().__init__(message)
        self.ratio = ratio


class SingularSylvesterError(NumericalError):
    """Fast and slow spectra are (numerically) not disjoint."""


class SingularSystemError(NumericalError):
    """D_z g (or a Newton matrix) is singular at some node."""


class ComplexSpectrumError(NumericalError):
    """Planar closed-form path hit complex eigenvalues."""


class PoleError(NumericalError):
    """Explicit planar iteration hit a vanishing denominator."""

    def __init__(self, message, nodes=()):
        super().__init__(message)
        self.nodes = list(nodes)


class NotAttractingError(NumericalError):
    """The critical manifold is not asymptotically stable at some node."""


class NonConvergenceError(NumericalError):
    """Newton iteration failed to converge."""

    def __init__(self, message, node=None, trace=()):
        super().__init__(message)
        self.node = node
        self.trace = list(trace)


class PartialResultError(NumericalError):
    """Some grid nodes failed; ``partial`` holds what could be computed."""

    def __init__(self, message, failed=(), partial=None):
        super().__init__(message)
        self.failed = list(failed)
        self.partial = partial


class DomainExitError(NumericalError):
    """A trajectory left the evaluation box."""

    def __init__(self, message, time=None, trajectory=None):
        super().__init__(message)
        self.time = time
        self.trajectory = trajectory


class TooFastToFitError(NumericalError):
    """Distance to the manifold collapsed before enough samples were taken."""


class FitError(NumericalError):
    """Not enough valid data points for a log-log fit."""
