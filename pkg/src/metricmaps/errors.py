"""Exception hierarchy shared by all modules."""


class MetricError(Exception):
    """Base class for every error raised by metricmaps."""


class StructuralError(MetricError, ValueError):
    """Malformed input: wrong shapes, NaN entries, schema violations."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ArgumentError(MetricError, ValueError):
    """An argument is outside the operation's contract."""


class PreconditionError(MetricError):
    """A mathematical precondition (density, admissibility) does not hold."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class DomainError(MetricError):
    """A dilation was applied outside the domain where it is defined."""


class DependencyError(MetricError):
    """A required upstream result (e.g. a tangent-distance estimate) is missing."""
