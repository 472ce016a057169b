"""Exception types shared across the toolkit."""


class PolefitError(Exception):
    """Base class for all toolkit errors."""


class ArgumentError(PolefitError, ValueError):
    """Invalid argument or violated precondition."""


class FormatError(PolefitError, ValueError):
    """Malformed input file."""


class EvaluationError(PolefitError, ArithmeticError):
    """Transfer-function evaluation requested at (or too close to) a pole."""


class MetricError(PolefitError, ArithmeticError):
    """Metric undefined for the given data, e.g. zero-magnitude samples."""


class DegenerateModelError(PolefitError, ValueError):
    """Model has no numerator content (all residues, d and e are zero)."""


class IllConditionedError(PolefitError, RuntimeError):
    """Least-squares basis is numerically rank deficient."""

    def __init__(self, message: str, poles=()):
        super().__init__(message)
        self.poles = list(poles)


class RelocationDegenerateError(PolefitError, RuntimeError):
    """Scaling function sigma(s) vanished over too much of the grid."""


class DegenerateResonanceError(PolefitError, ValueError):
    """Complex pair without a resonance peak (imag^2 <= real^2)."""


class PoleAtOriginError(PolefitError, ValueError):
    """Real-pole observability factor is undefined for a pole at s = 0."""


class EmptyModelError(PolefitError, RuntimeError):
    """Pruning removed every pole term."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
