"""Exception hierarchy shared by all modules."""


class ThinHeatError(Exception):
    """Base class for every error raised by the package."""


class GeometryError(ThinHeatError):
    """Problems with the moving curve or its tubular neighbourhood."""


class OutOfTubularNeighborhood(GeometryError):
    """A point lies farther from the curve than the tubular radius allows."""


class NoConvergence(GeometryError):
    """An iterative geometric solve (closest point, radius search) failed."""


class SingularMatrix(GeometryError):
    """The resolvent ``I - d W`` is singular or not positive definite."""


class GridMismatch(GeometryError):
    """A field and a query point refer to different times or grids."""


class DomainError(ThinHeatError):
    """Invalid thin-domain data."""


class InvalidProfile(DomainError):
    """Profiles violate ``g1 - g0 >= c > 0``."""


class EpsilonTooLarge(DomainError):
    """The thin domain would leave the tubular neighbourhood."""


class OutsideDomain(DomainError):
    """A physical point does not belong to the thin domain."""


class SolverError(ThinHeatError):
    """Numerical solver failure."""


class TimeGridMismatch(SolverError):
    """Bulk and limit solutions are stored on different time grids."""


class InvalidTimeStep(SolverError):
    """Non-positive or inconsistent time step."""


class StabilityWarning(UserWarning):
    """Implicit step with a very large diffusion number."""


class Divergence(SolverError):
    """The discrete solution became non-finite."""


class InvalidCoefficients(SolverError):
    """Non-positive coefficient where positivity is required."""


class DerivativeNoise(ThinHeatError):
    """Richardson check on finite-difference residuals failed."""


class SamplingError(ThinHeatError):
    """Sample set could not be generated."""


class DegenerateFit(ThinHeatError):
    """A log-log fit had fewer than two distinct usable points."""


class DiscretizationDominance(ThinHeatError):
    """Scheme error is not separated from the model error by the required factor."""


class ConfigError(ThinHeatError):
    """Malformed experiment configuration."""


class BudgetExceeded(ThinHeatError):
    """An experiment exceeded its wall-clock budget; ``partial`` holds finished rows."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = list(partial or [])
