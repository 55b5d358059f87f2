"""Exception types raised across the package."""


class GeohmmError(Exception):
    """Base class for package errors."""


class GeometryError(GeohmmError, ValueError):
    """Invalid manifold point, tangent vector, or mismatched manifold kinds."""


class ConvergenceError(GeohmmError, RuntimeError):
    """An iterative routine hit its iteration cap before meeting tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateFitError(GeohmmError, RuntimeError):
    """Dispersion root not bracketed; ``gaussian`` holds the clamped fit."""

    def __init__(self, message, gaussian=None):
        super().__init__(message)
        self.gaussian = gaussian


class ComponentCollapseError(GeohmmError, RuntimeError):
    """A mixture component lost all its mass or its dispersion hit the floor."""

    def __init__(self, message, component):
        super().__init__(message)
        self.component = component


class StageError(GeohmmError, RuntimeError):
    """Wraps a failure inside a learning pipeline with the stage name."""

    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
