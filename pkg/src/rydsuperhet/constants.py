"""Physical constants (CODATA 2018) and unit helpers.

Frequencies handed to users are cyclic, nu = Omega / 2pi, in MHz. Everything
inside the package is angular, rad/s.
"""
import math

CONSTANTS_VERSION = "CODATA 2018"

HBAR = 1.054571817e-34  # J s
C_LIGHT = 299_792_458.0  # m / s
E_CHARGE = 1.602176634e-19  # C
K_B = 1.380649e-23  # J / K
EPSILON_0 = 8.8541878128e-12  # F / m
A_0 = 5.29177210903e-11  # m

RB87_MASS = 1.4432e-25  # kg
TWO_PI = 2.0 * math.pi

# e * a0 in C m, the dipole unit used in the transition tables.
EA0 = E_CHARGE * A_0


def mhz(nu_mhz):
    """Cyclic MHz -> angular rad/s."""
    return nu_mhz * TWO_PI * 1e6


def to_mhz(omega):
    """Angular rad/s -> cyclic MHz."""
    return omega / (TWO_PI * 1e6)


def to_hz(omega):
    return omega / TWO_PI
