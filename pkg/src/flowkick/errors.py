"""Exception hierarchy shared by all flowkick modules."""


class FlowKickError(Exception):
    """Base class for every numerical failure raised by the package."""


class DivergenceError(FlowKickError):
    """The integrated state left the configured norm bound.

    ``t`` and ``state`` hold the last accepted time and state.
    """

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class StiffnessError(FlowKickError):
    """The adaptive step size collapsed below the representable minimum."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class StencilError(FlowKickError):
    """A map evaluation failed at one point of a finite-difference stencil."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class NoFixedPointError(FlowKickError):
    """Newton iteration did not converge; ``last_iterate`` holds its final state."""

    def __init__(self, message, last_iterate=None, residual_norm=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual_norm = residual_norm


class NearBifurcationError(NoFixedPointError):
    """The Newton matrix is numerically singular at the current iterate."""


class UnsupportedDimensionError(FlowKickError, ValueError):
    """Requested operation is only implemented for small state dimensions."""
