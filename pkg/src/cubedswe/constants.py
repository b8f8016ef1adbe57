"""Physical constants for the rotating-sphere shallow water system."""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Gravity, sphere radius, rotation rate and rotation-axis tilt.

    Velocities inside the solver are angular (rad/s); ``g`` and ``R`` carry
    all dimensional content.
    """

    g: float = 9.80616          # m/s^2
    R: float = 6.37122e6        # m
    Omega: float = 7.292e-5     # 1/s
    alpha: float = 0.0          # rad, angle between rotation and polar axes

    def __post_init__(self):
        if self.g <= 0.0 or self.R <= 0.0:
            raise ValueError("g and R must be positive")
        if self.Omega < 0.0:
            raise ValueError("Omega must be non-negative")


EARTH = PhysicalConstants()

SECONDS_PER_DAY = 86400.0
