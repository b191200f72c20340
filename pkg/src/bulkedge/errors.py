"""Exception hierarchy shared by all bulkedge modules."""


class BulkEdgeError(Exception):
    """Base class for every error raised by the package."""


class DomainError(BulkEdgeError, ValueError):
    """An input lies outside the domain of the requested operation."""


class FormatError(BulkEdgeError, ValueError):
    """A file, JSON payload or sample set has the wrong layout."""


class NotInvertibleError(BulkEdgeError):
    """A symbol (or a matrix pencil) is singular where it must be invertible."""


class SpectrumOnContourError(NotInvertibleError):
    """An eigenvalue (or root) sits on the integration contour."""


class ResolutionError(BulkEdgeError):
    """A discretisation (samples, quadrature nodes, grid) is too coarse."""


class RankJumpError(BulkEdgeError):
    """The rank of a projector family is not constant over a parameter grid."""


class ChartError(BulkEdgeError):
    """No Moebius chart with an invertible leading coefficient was found."""


class ConsistencyError(BulkEdgeError):
    """Two independent routes to the same integer disagree."""


class ConvergenceError(BulkEdgeError):
    """An iterative refinement hit its cap before stabilising."""


class GapError(BulkEdgeError):
    """The gap contour meets the spectrum of the model (or the gap is not resolved)."""
