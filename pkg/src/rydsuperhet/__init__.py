"""Rydberg-atom superheterodyne receiver model.

Closed-form first-order harmonics, a truncated Floquet solver and an RK4
time-domain oracle for the driven four-level ladder, with thermal Doppler
averaging and the readouts built on them (response curves, bandwidth,
EIT spectra, calibration and fitting).
"""
from .constants import CONSTANTS_VERSION, mhz, to_mhz
from .doppler import DopplerSpec, averaged_harmonics, doppler_average
from .errors import NumericalError, RydSuperhetError, ValidationError
from .floquet import HarmonicSolution, solve_time_domain, solve_truncated
from .kernels import BACKEND
from .model import AtomSystem, DriveConfig, harmonics_first_order
from .observables import (DetectorModel, ResponseCurve, bandwidth_minus3db, beat_amplitude,
                          eit_spectrum, gain_peak, response_curve, sideband_contributions)

__version__ = "0.1.0"

__all__ = [
    "AtomSystem", "BACKEND", "CONSTANTS_VERSION", "DetectorModel", "DopplerSpec",
    "DriveConfig", "HarmonicSolution", "NumericalError", "ResponseCurve", "RydSuperhetError",
    "ValidationError", "averaged_harmonics", "bandwidth_minus3db", "beat_amplitude",
    "doppler_average", "eit_spectrum", "gain_peak", "harmonics_first_order", "mhz",
    "response_curve", "sideband_contributions", "solve_time_domain", "solve_truncated",
    "to_mhz",
]
