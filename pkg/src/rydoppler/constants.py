"""Physical constants and unit helpers used throughout the package."""

import math

# Boltzmann constant, J/K (2019 SI exact value)
KB = 1.380649e-23

TWO_PI = 2.0 * math.pi

# Rydberg-state lifetimes used for decay-error estimates, s.
# Literature values for s-orbital states near n = 100 at cryogenic (4 K)
# and room (300 K) environment temperature.
TAU_CRYO_S = 1.2e-3
TAU_ROOM_S = 0.3e-3


def mhz_to_rad(f_mhz: float) -> float:
    """Convert a linear frequency in MHz (the f in Omega = 2*pi*f) to rad/s."""
    return TWO_PI * f_mhz * 1e6


def rad_to_mhz(omega: float) -> float:
    """Convert an angular frequency in rad/s to its linear-frequency value in MHz."""
    return omega / (TWO_PI * 1e6)
