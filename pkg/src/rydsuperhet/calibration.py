"""Conversions among laser power, Rabi frequency, field strength and optical depth."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C_LIGHT, EA0, EPSILON_0, HBAR, TWO_PI
from .doppler import DopplerSpec
from .errors import InsufficientData, ValidationError
from .model import AtomSystem, DriveConfig
from .observables import absorption_per_mhz

#: Local MW frequency of the 51D5/2 -> 52P3/2 transition (rad/s).
LOCAL_MW_FREQUENCY = TWO_PI * 16.0304e9


@dataclass(frozen=True)
class BeamGeometry:
    """Gaussian beam: ``power`` in W, ``waist`` the 1/e^2 intensity radius in m."""

    power: float
    waist: float

    def __post_init__(self):
        if self.power < 0 or not self.waist > 0:
            raise ValidationError("beam needs power >= 0 and waist > 0")

    @property
    def peak_intensity(self) -> float:
        return 2 * self.power / (math.pi * self.waist ** 2)


@dataclass(frozen=True)
class ATCalibration:
    """Through-origin fit of Autler-Townes splitting against sqrt(MW power).

    ``alpha`` is in Hz per sqrt(mW) and ``field_per_sqrt_power`` in V/m per
    sqrt(mW). ``alpha_stderr`` is the one-sigma fit error (0 with two exact
    points or noiseless data).
    """

    alpha: float
    field_per_sqrt_power: float
    alpha_stderr: float = 0.0
    dipole: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValidationError("alpha must be positive")

    @property
    def covariance(self) -> float:
        return self.alpha_stderr ** 2

    def field(self, power_mw):
        """Field amplitude (V/m) for a MW power in mW."""
        return self.field_per_sqrt_power * np.sqrt(power_mw)


def rabi_from_power(beam: BeamGeometry, dipole: float) -> float:
    """Peak Rabi frequency (rad/s) of a Gaussian beam.

    The peak field is sqrt(2 I0 / (eps0 c)) with I0 = 2P/(pi w^2); ``dipole``
    is in units of e a0.
    """
    if not dipole > 0:
        raise ValidationError("dipole must be positive")
    field = math.sqrt(4 * beam.power / (EPSILON_0 * C_LIGHT * math.pi * beam.waist ** 2))
    return field * dipole * EA0 / HBAR


def field_from_rabi(rabi: float, dipole: float):
    """Field amplitude E = hbar Omega / d in V/m (dipole in e a0)."""
    if not dipole > 0:
        raise ValidationError("dipole must be positive")
    return HBAR * rabi / (dipole * EA0)


def rabi_from_field(field: float, dipole: float):
    """Inverse of :func:`field_from_rabi`."""
    if not dipole > 0:
        raise ValidationError("dipole must be positive")
    return field * dipole * EA0 / HBAR


def fit_at_splitting(data, dipole: float = AtomSystem.dipole_mw) -> ATCalibration:
    """Least-squares fit of splitting = alpha * sqrt(power), no intercept.

    ``data`` is a sequence of ``(power_mW, splitting_Hz)``. The splitting is
    the MW Rabi frequency in cyclic units, so the field per sqrt(mW) follows
    from ``dipole`` (e a0).
    """
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError("AT data must be (power_mW, splitting_Hz) pairs")
    if arr.shape[0] < 2:
        raise InsufficientData(f"AT fit needs at least 2 points, got {arr.shape[0]}")
    power, split = arr[:, 0], arr[:, 1]
    if np.any(power <= 0):
        raise ValidationError("AT powers must be positive")
    x = np.sqrt(power)
    sxx = float(np.dot(x, x))
    alpha = float(np.dot(x, split)) / sxx
    resid = split - alpha * x
    dof = x.size - 1
    stderr = math.sqrt(float(np.dot(resid, resid)) / dof / sxx) if dof > 0 else 0.0
    return ATCalibration(alpha, float(field_from_rabi(TWO_PI * alpha, dipole)), stderr, dipole)


def resonant_absorption(atom: AtomSystem, spec: DopplerSpec) -> float:
    """Doppler-averaged Im(rho12/Omega_p) at Delta_p = 0 with no coupling, per cyclic MHz."""
    probe_only = DriveConfig(omega_p=1.0, omega_c=0.0)
    return float(absorption_per_mhz(atom, probe_only, spec, np.zeros(1))[0])


def beta_from_od(atom: AtomSystem, spec: DopplerSpec, od: float) -> float:
    """Scale factor beta such that the Omega_c = 0 resonance has ln T = -od.

    beta multiplies the Doppler-averaged Im(rho12/Omega_p) with Omega_p in
    cyclic MHz, the convention used by :func:`rydsuperhet.observables.eit_spectrum`.
    The atom's dephasing enters the two-level linewidth, so calibrate with the
    same atom used for the spectrum.
    """
    if not od > 0:
        raise ValidationError("od must be positive")
    return od / resonant_absorption(atom, spec)


@dataclass(frozen=True)
class MWGeometry:
    """Propagation angles (rad) of the local and signal MW relative to the probe axis."""

    local_angle: float = 0.0
    signal_angle: float = 0.0
    local_frequency: float = LOCAL_MW_FREQUENCY


def phase_mismatch(geometry: MWGeometry, delta_s: float, cell_length: float) -> float:
    """Longitudinal wave-vector mismatch |dk l| of the six-wave-mixing sidebands.

    The sidebands at omega_p +- delta_s run along the probe, so
    dk = +-[delta_s - (k_L cos(theta_L) - k_S cos(theta_S)) c] / c with
    omega_S = omega_L - delta_s. Both sidebands have the same magnitude.
    """
    if not cell_length > 0:
        raise ValidationError("cell_length must be positive")
    cos_l, cos_s = math.cos(geometry.local_angle), math.cos(geometry.signal_angle)
    # arranged so the collinear case cancels exactly
    dk = delta_s * (1 - cos_s) - geometry.local_frequency * (cos_l - cos_s)
    return abs(dk) / C_LIGHT * cell_length
