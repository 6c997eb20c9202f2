"""Exception types raised by ringscatter.

Invalid arguments raise plain ``ValueError``. Numerical failures raise a
subclass of :class:`NumericalError` so callers (and the CLI) can tell the two
apart.
"""


class NumericalError(ArithmeticError):
    """Base class for numerical failures."""


class NearPoleError(NumericalError):
    """The spectral parameter sits on (or too close to) an eigenvalue."""

    def __init__(self, lam, eigenvalue, distance):
        self.lam = lam
        self.eigenvalue = eigenvalue
        self.distance = distance
        super().__init__(
            f"lambda={lam!r} is within {distance:.3g} of the eigenvalue "
            f"{eigenvalue!r}; use the resonance path (smatrix_at_resonance)"
        )


class NotAnEigenvalueError(NumericalError):
    pass


class ResolutionError(NumericalError):
    """Eigenvalue bracketing grid too coarse to isolate roots."""


class TruncationError(NumericalError):
    """A truncated spectral series cannot reach the requested tolerance."""


class DivergenceError(NumericalError):
    """The weak-coupling series does not converge."""


class AccuracyError(NumericalError):
    """Adaptive quadrature failed to converge."""

    def __init__(self, message, estimate=None, error=None):
        self.estimate = estimate
        self.error = error
        super().__init__(message)


class NearResonanceWarning(RuntimeWarning):
    """Direct matching system is badly conditioned."""
