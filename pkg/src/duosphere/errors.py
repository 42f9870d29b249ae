"""Exception types shared across the package."""


class DuosphereError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(DuosphereError):
    """A problem parameter violates its admissible range."""


class IntegrationFailureError(DuosphereError):
    """The ODE integrator exhausted its step budget or could not proceed."""


class SymmetryPreconditionError(DuosphereError):
    """Reflection requested without the matching midpoint condition."""


class BracketError(DuosphereError):
    """A root bracket does not actually straddle a sign change."""


class RootRefinementError(DuosphereError):
    """Polynomial root polish failed to converge."""


class ScanIncompleteError(DuosphereError):
    """Band refinement budget exhausted before boundaries were isolated."""


class CatalogIncompleteError(DuosphereError):
    """Nodal catalog build could not certify every requested zero count.

    Carries the partial catalog in ``partial`` and the missing k values in
    ``missing`` so callers can raise alpha_max and retry.
    """

    def __init__(self, message, partial=None, missing=()):
        super().__init__(message)
        self.partial = partial
        self.missing = tuple(missing)


class NewtonNoConvergenceError(DuosphereError):
    """Damped Newton ran out of iterations.

    ``history`` holds the residual norms seen before giving up.
    """

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = tuple(history)


class SeedFailureError(DuosphereError):
    """The first corrector of a continuation branch did not converge."""


class MalformedInputError(DuosphereError):
    """A solution or config file could not be parsed against its schema."""
