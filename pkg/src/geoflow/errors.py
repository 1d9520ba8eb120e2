"""Exception hierarchy shared by every geoflow module."""


class GeoflowError(Exception):
    """Base class for all library errors."""


class UsageError(GeoflowError, ValueError):
    """Bad arguments: mismatched models, invalid parameters."""


class IntegrationError(GeoflowError):
    """A time step failed (Newton or fixed-point non-convergence, overflow)."""

    def __init__(self, message, state=None, h=None, t=None):
        super().__init__(message)
        self.state = state
        self.h = h
        self.t = t


class SingularSetError(GeoflowError):
    """A first integral was evaluated on its singular set."""

    def __init__(self, message, t=None, index=None):
        super().__init__(message)
        self.t = t
        self.index = index


class StencilError(GeoflowError):
    """Non-finite evaluation inside a finite-difference stencil."""


class CapacityError(GeoflowError):
    """A search exceeded its configured bound."""


class NotAnosovError(GeoflowError):
    """Monodromy matrix is not hyperbolic."""


class ReductionError(GeoflowError):
    """Fundamental-domain reduction needed too many generator applications."""


class LinearRegimeError(GeoflowError):
    """Lyapunov companion separated beyond the linear regime; lower renorm_every."""
