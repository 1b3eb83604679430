"""Exception types raised across the package."""


class CfxError(Exception):
    """Base class for all package errors."""


class ShapeError(CfxError, ValueError):
    """Block structures or array lengths do not agree."""


class ParameterError(CfxError, ValueError):
    """A relaxation, weight or tolerance parameter is outside its admissible range."""


class WeightError(ParameterError):
    """Weight matrix is malformed (negative entries, zero or unnormalized columns)."""


class DegenerateConstraintError(ParameterError):
    """A constraint has a zero normal vector (zero row of A) or a nonpositive radius."""


class DegenerateColumnError(ParameterError):
    """A column of the system matrix has no nonzero entries."""


class PreconditionError(CfxError, ValueError):
    """An operation was called without the data it needs (empty sampler, empty certificate)."""


class SamplingError(CfxError, RuntimeError):
    """Sampling produced no usable sample (e.g. all pairs degenerate)."""


class GenerationError(CfxError, RuntimeError):
    """Random instance generation failed after the allowed number of redraws."""


class InputError(CfxError, ValueError):
    """A file or configuration could not be parsed."""


class DivergenceError(CfxError, ArithmeticError):
    """An iteration produced a non-finite iterate.

    Attributes
    ----------
    last_finite : ProductVector
        The last iterate whose entries were all finite.
    history : IterationHistory or None
        Partial history up to and including ``last_finite``.
    """

    def __init__(self, message, last_finite=None, history=None):
        super().__init__(message)
        self.last_finite = last_finite
        self.history = history
