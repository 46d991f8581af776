"""Exception types raised by the package."""


class GaussmagError(Exception):
    """Base class for all package errors."""


class SingularWidth(GaussmagError):
    """The Hagedorn factor Q is (numerically) singular."""


class UnstableTrap(GaussmagError):
    """Trap parameters give no confined motion (cyclotron frequency too small)."""


class DimensionError(GaussmagError):
    """An operation was called with a state of unsupported dimension."""


class CapabilityError(GaussmagError):
    """The field model lacks a capability the requested average mode needs."""


class EvaluationError(GaussmagError):
    """A function returned non-finite values at quadrature nodes."""


class ImaginaryResidual(GaussmagError):
    """A quantity that must be real carries a large imaginary part."""


class NonFiniteState(GaussmagError):
    """A time step produced NaN or infinite parameters."""


class SymplecticityError(GaussmagError):
    """The pair (Q, P) violates the symplecticity conditions beyond tolerance."""
