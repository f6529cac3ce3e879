"""Exception types shared across the package."""


class CutDGError(Exception):
    """Base class for all package-specific errors."""


class StructuralError(CutDGError):
    """Mesh or cut-geometry data violates a structural assumption
    (non-manifold face, degenerate surface segment, missing entity)."""


class ConfigurationError(CutDGError):
    """A run configuration is unusable, e.g. the surface misses the
    background box entirely."""


class SolverError(CutDGError):
    """The linear solver failed to reach the requested tolerance."""


class DegenerateMatrixError(CutDGError):
    """All eigenvalues of a matrix fall below the zero threshold."""
