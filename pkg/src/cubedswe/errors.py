"""Exception types raised by the solver."""


class CubedSWEError(Exception):
    """Base class for solver errors."""


class OutOfPanel(CubedSWEError):
    """A spherical point does not lie on the requested panel."""


class NonPositiveDepth(CubedSWEError):
    """A fluid depth became zero or negative."""


class NewtonDiverged(CubedSWEError):
    """A sector-angle Newton iteration failed to converge."""


class SingularSystem(CubedSWEError):
    """The 2x2 velocity system of the local evolution operator is singular."""


class PoleSingularity(CubedSWEError):
    """A latitude/longitude operation was requested too close to a pole."""


class NoExactSolution(CubedSWEError):
    """The test case has no closed-form solution at t > 0."""
