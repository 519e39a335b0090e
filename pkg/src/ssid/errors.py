"""Exception types raised across the package.

All runtime failures derive from SsidError so callers (and the CLI) can
distinguish library failures from programming errors.
"""


class SsidError(Exception):
    """Base class for all ssid runtime failures."""


# --- model -----------------------------------------------------------------


class NonConvergence(SsidError):
    """Riccati iteration did not reach the requested residual."""


class NotDetectable(SsidError):
    """Riccati iteration diverged (residual grew monotonically)."""


class EigenFailure(SsidError):
    """Eigenvalue solver did not converge."""


# --- simulate --------------------------------------------------------------


class CholeskyFailure(SsidError):
    """Covariance factorization failed (matrix not positive definite)."""


# --- structmats ------------------------------------------------------------


class InsufficientSamples(SsidError):
    """Trajectory too short for the requested past/future horizons."""


# --- identify --------------------------------------------------------------


class PersistenceFailure(SsidError):
    """Regressor Gram matrix is (numerically) rank deficient."""


class PinvFailure(SsidError):
    """Pseudo-inverse target is rank deficient below the cutoff."""


class RankGapWarning(UserWarning):
    """Singular-value gap at the model order is too small to be reliable."""


# --- bounds ----------------------------------------------------------------


class ScanLimit(SsidError):
    """Sample-size threshold scan exceeded its cap without success."""


class NotDominated(SsidError):
    """Normalization matrix does not dominate the reference matrix."""


class RobustnessViolated(SsidError):
    """Perturbation exceeds a quarter of the n-th singular value."""


# --- metrics ---------------------------------------------------------------


class SvdFailure(SsidError):
    """SVD did not converge."""


class DimensionMismatch(SsidError):
    """Operands have incompatible shapes."""


class MissingDiagnostics(SsidError):
    """Data matrices lack the innovation/state diagnostics required here."""


class SingularGram(SsidError):
    """Output Gram matrix is singular; diagnostic ratios are undefined."""


# --- harness ---------------------------------------------------------------


class ConfigError(SsidError):
    """Experiment configuration failed validation."""
