"""Exception types shared across the package."""


class IdtLabError(Exception):
    """Base class for all idtlab errors."""


class NonIntegrableJumpDensity(IdtLabError):
    """Tabulated jump density fails the min(1, x^2) integrability check."""


class NotSamplable(IdtLabError):
    """The requested triplet supports analytics only, not path sampling."""


class BadStableIndex(IdtLabError):
    """Stable index outside its admissible range."""


class GridCoverage(IdtLabError):
    """Base grid does not cover the times needed by a transform."""


class UnsupportedMeasureSupport(IdtLabError):
    """Measure support is unbounded or otherwise unusable here."""


class JumpsUnavailable(IdtLabError):
    """Ensemble carries no explicit jump records."""


class TruncationTooSmall(IdtLabError):
    """Kernel tail mass beyond the truncation point exceeds tolerance."""


class NotPositiveSemidefinite(IdtLabError):
    """Covariance matrix eigenvalue below the jitter floor."""


class QuadratureFailure(IdtLabError):
    """Numerical integration did not converge."""


class NoClosedForm(IdtLabError):
    """Closed-form expression requested for a kernel that has none."""


class DivergentTransform(IdtLabError):
    """Measure transform diverges under refinement."""


class HorizonExceeded(IdtLabError):
    """Path evaluation requested beyond the recorded horizon."""


class GridMismatch(IdtLabError):
    """Requested time is not a grid point of the ensemble."""


class SampleTooSmall(IdtLabError):
    """Monte Carlo sample count below the minimum for the test."""


class CfTooSmall(IdtLabError):
    """Characteristic-function magnitude below the conditioning floor."""


class ConfigError(IdtLabError):
    """Experiment configuration failed schema validation."""
