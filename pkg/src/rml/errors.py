"""Exception hierarchy shared by all rml modules."""


class RmlError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(RmlError):
    """A parameter set violates one of its stated hypotheses.

    The message names the violated inequality.
    """


class InvalidSpec(RmlError):
    """A process or experiment specification is malformed or unsupported."""


class UnsupportedKernel(RmlError):
    """Unknown kernel name."""


class UnsupportedCombination(RmlError):
    """No dependence result covers the requested (kind, setting) pair."""


class QuadratureFailure(RmlError):
    """Two quadrature resolutions disagree beyond the requested accuracy."""


class DegenerateDenominator(RmlError):
    """A ratio's denominator is zero / nonpositive where positivity is needed."""


class StateSpaceTooLarge(RmlError):
    """Exact enumeration would exceed the configured state budget."""


class EmptySample(RmlError):
    """An aggregation was requested over zero samples."""


class DegenerateFit(RmlError):
    """A log-log rate fit is impossible (zero norms or too few points)."""


class TooManyExclusions(RmlError):
    """More than the allowed share of replications was degenerate."""


class AllExcluded(RmlError):
    """Every evaluation point of a grid was degenerate."""


class ConfigError(RmlError):
    """A config file could not be parsed; message carries line/key info."""
