"""Exception hierarchy shared by all modules."""


class SLZetaError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(SLZetaError):
    """Inputs cannot be interpreted (bad coefficient data, unknown names, schema problems)."""


class MissingDependencyError(SLZetaError):
    """An operation needs data that was not supplied."""


class PreconditionError(SLZetaError):
    """An operation was called outside its domain of validity."""


class IntegrationError(SLZetaError):
    """The ODE integrator could not advance the solution."""

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class NumericalDegeneracyError(SLZetaError):
    """A leading-order detection produced an outcome the theory forbids."""


class DegenerateSeriesError(NumericalDegeneracyError):
    """All characteristic-series coefficients fall below the zero threshold."""


class DegenerateBoundaryError(NumericalDegeneracyError):
    """No non-vanishing Gamma coefficient was found up to the computed order."""


class TruncationError(SLZetaError):
    """Not enough series coefficients were computed for the request."""

    def __init__(self, message, required_order=None):
        super().__init__(message)
        self.required_order = required_order


class RefinementError(SLZetaError):
    """Eigenvalue bracketing failed to isolate a root."""

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class UnboundedBelowError(SLZetaError):
    """The lower spectral floor search did not terminate."""
