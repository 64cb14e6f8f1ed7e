"""Exception hierarchy shared across the package."""


class CsbpLabError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CsbpLabError):
    """An argument lies outside the mathematical domain of the operation."""


class NoSolution(CsbpLabError):
    """The defining equation has no solution for the given arguments."""


class QuadratureFailure(CsbpLabError):
    """Numerical integration could not reach the requested tolerance."""


class NonIntegrableLevyMeasure(CsbpLabError):
    """The jump density fails the (1 ^ x^2) integrability requirement."""


class InconclusiveIntegralTest(CsbpLabError):
    """The dyadic convergence heuristic could not decide within its block cap."""


class UnsupportedMechanism(CsbpLabError):
    """The operation has no exact method for this branching mechanism."""


class InfiniteMass(CsbpLabError):
    """A point-process window was requested with infinite expected mass."""


class InfiniteRate(CsbpLabError):
    """The jump tail has infinite mass at the chosen truncation level."""


class NonConvergent(CsbpLabError):
    """A grid extrapolation failed its Cauchy convergence test."""


class StepSizeTooLarge(CsbpLabError):
    """Euler stepping moved the state by too much even after adaptive halving."""


class LengthMismatch(CsbpLabError):
    """Paired sequence arguments have different lengths."""


class DomainMismatch(CsbpLabError):
    """Two processes defined on different domains cannot be combined."""


class InstantaneousState(CsbpLabError):
    """A Markov jump simulation cannot start from an instantaneous state."""


class TooFewSamples(CsbpLabError):
    """Not enough samples for the requested statistic."""


class EmptySeries(CsbpLabError):
    """Plot data was requested for an empty series."""


class UnknownExperiment(CsbpLabError):
    """No experiment is registered under the requested name."""


class ConfigError(CsbpLabError):
    """The experiment configuration is invalid."""


class ParseError(ConfigError):
    """The configuration text could not be parsed."""


class ValidationError(ConfigError):
    """A configuration field has an invalid value."""
