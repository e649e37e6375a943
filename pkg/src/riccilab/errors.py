"""Exception types shared across the workbench."""


class RicciLabError(Exception):
    """Base class for all workbench errors."""


class NonPositiveDefinite(RicciLabError):
    """Metric factorization failed: g is not positive-definite at a point."""


class OutOfDomain(RicciLabError):
    """A point (or a derivative stencil around it) left the chart box."""


class UnknownName(RicciLabError, KeyError):
    """Requested metric or soliton instance is not registered."""


class DimensionMismatch(RicciLabError):
    """Identity not admissible for the instance dimension."""


class ShapeMismatch(RicciLabError):
    """Grid field shape does not match the grid."""


class NotNormalized(RicciLabError):
    """Discrete field violates the unit L2 constraint."""


class NegativeMu(RicciLabError):
    """Operation requires mu > 0."""


class NonContracting(RicciLabError):
    """Diameter estimate requires a contracting soliton (mu > 0)."""


class LeftDomain(RicciLabError):
    """Geodesic left the chart; carries the exit arclength."""

    def __init__(self, arclength: float, message: str = ""):
        self.arclength = float(arclength)
        super().__init__(message or f"geodesic left the chart at arclength {arclength:.6g}")


class ConjugatePoint(RicciLabError):
    """Jacobi-field Gram determinant is not positive at the requested radius."""


class EndpointNonzero(RicciLabError):
    """Index-form variation field does not vanish at the endpoints."""


class FlagsUnverified(RicciLabError):
    """Declared comparison-function flags failed the sampled verification."""


class NonPositiveField(RicciLabError):
    """Potential recovery requires a strictly positive field."""
