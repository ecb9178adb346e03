"""Exception types shared across the package."""


class CovkitError(Exception):
    """Base class for all covkit errors."""


class GeometryError(CovkitError, ValueError):
    """Invalid geometric input (malformed polygon, point outside region, ...)."""


class CoincidentAgentsError(GeometryError):
    """Two agent positions closer than the minimum admissible separation."""


class DomainError(CovkitError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class GraphMismatchError(CovkitError, ValueError):
    """Binary graph operation applied to graphs over different vertex sets."""


class QuadratureAccuracyError(CovkitError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the best available estimate in ``estimate``.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class DegenerateMassError(CovkitError, ValueError):
    """Region mass is numerically zero, so a centroid is undefined."""


class ScenarioError(CovkitError, ValueError):
    """Malformed scenario document."""


class RenderError(CovkitError, ValueError):
    """Invalid render request (bad layer set, missing layer inputs, ...)."""


class StepFailureError(CovkitError, RuntimeError):
    """An ascent step could not produce an admissible configuration."""
