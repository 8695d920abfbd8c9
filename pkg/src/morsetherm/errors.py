"""Exception types shared across the package."""


class DslSyntaxError(SyntaxError):
    """Malformed potential-expression source. Carries a 1-based line:column."""

    def __init__(self, message, line, column):
        super().__init__(f"{message} at {line}:{column}")
        self.line = line
        self.column = column


class CoordinateIndexError(IndexError):
    """Coordinate reference q[j] with j outside [0, N)."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} at {line}:{column}"
        super().__init__(message)
        self.line = line
        self.column = column


class UnknownIdentifierError(NameError):
    """Unknown function name or unbound parameter."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} at {line}:{column}"
        super().__init__(message)
        self.line = line
        self.column = column


class DomainError(ValueError):
    """Point lies outside the model's sampling box."""


class NonFiniteError(ArithmeticError):
    """Potential evaluation overflowed or produced a non-finite value."""


class NotCriticalError(ValueError):
    """Classification requested at a point whose gradient is too large."""


class CutoffExceededError(ValueError):
    """Catalog queried above the level it was built to."""


class SingleLevelError(ValueError):
    """Fewer than two distinct critical values: no level gap to measure."""


class EdgeIndexError(ValueError):
    """Index k in {0, N}: the generic quadric integral does not apply."""


class DimensionTooSmallError(ValueError):
    """Dimension too small for the requested slice integral."""


class BoxTooSmallError(RuntimeError):
    """Sub-level samples found on the box boundary shell."""


class HTooSmallError(RuntimeError):
    """Shell halfwidth too small: no samples landed in the shell."""


class NearCriticalError(ValueError):
    """Gradient below the floor: the curvature integrand is singular here."""


class OverlapDetectedError(RuntimeError):
    """Two neighborhood cylinders share sampled points."""


class ZeroVolumeError(ValueError):
    """No sub-level hits: log-volume undefined."""


class NoisyEstimateError(RuntimeError):
    """Relative Monte Carlo error too large for a well-conditioned log."""


class GridTooCoarseError(RuntimeError):
    """Half-grid comparison shows the stencil output is noise-dominated."""


class ConfigError(ValueError):
    """Invalid or unknown job-configuration entries."""


class IncompleteCatalogWarning(UserWarning):
    """Catalog may be missing critical points needed by the requested level."""


class OverlapWarning(UserWarning):
    """Cylinder overlap could not be removed by shrinking the wall parameter."""
