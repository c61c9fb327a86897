"""Four-level ladder model: domain types and first-order harmonic coherences.

Levels are |1> ground, |2> intermediate, |3> and |4> the two Rydberg states
coupled by the local and signal microwaves. Only the probe coherences
rho12, rho13, rho14 are tracked (weak-probe reduction).

All rates, detunings and Rabi frequencies are angular (rad/s).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .constants import RB87_MASS, mhz
from .errors import DegenerateDenominator, ValidationError

#: First-order formulas are trusted up to this |Omega_S| / |Omega_L| ratio.
SMALL_SIGNAL_RATIO = 0.1


class FirstOrderValidityWarning(UserWarning):
    """Signal field is too strong for the first-order harmonic formulas."""


@dataclass(frozen=True)
class AtomSystem:
    """Physical description of the ladder.

    Parameters
    ----------
    gamma2 : float
        Decay rate of the intermediate state, rad/s.
    gamma_r : float
        Decay rate of the Rydberg states, rad/s.
    dephasing : float
        Extra coherence relaxation rate (transit, collisions), rad/s.
    dipole_probe, dipole_coupling, dipole_mw : float
        Transition dipole moments in units of e a0.
    lambda_probe, lambda_coupling : float
        Optical wavelengths, m.
    mass : float
        Atomic mass, kg.
    temperature : float
        Vapour temperature, K.
    """

    gamma2: float = mhz(6.07)
    gamma_r: float = mhz(2.4e-3)
    dephasing: float = 0.0
    dipole_probe: float = 2.44
    dipole_coupling: float = 0.012
    dipole_mw: float = 1640.184
    lambda_probe: float = 780e-9
    lambda_coupling: float = 480e-9
    mass: float = RB87_MASS
    temperature: float = 293.0

    def __post_init__(self):
        positive = ("gamma2", "dipole_probe", "dipole_coupling", "dipole_mw",
                    "lambda_probe", "lambda_coupling", "mass", "temperature")
        for name in positive:
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValidationError(f"AtomSystem.{name} must be positive and finite, got {value!r}")
        # gamma_r = 0 is allowed so the decay-free Rydberg limit can be probed.
        for name in ("gamma_r", "dephasing"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ValidationError(f"AtomSystem.{name} must be >= 0, got {value!r}")

    def with_dephasing(self, dephasing: float) -> "AtomSystem":
        return replace(self, dephasing=dephasing)


@dataclass(frozen=True)
class DriveConfig:
    """Field amplitudes and detunings.

    Rabi frequencies may be complex so that microwave phases can be studied;
    detunings are real. ``delta_s`` is the beat detuning omega_L - omega_S.
    """

    omega_p: complex = 0.0
    omega_c: complex = 0.0
    omega_l: complex = 0.0
    omega_s: complex = 0.0
    delta_p: float = 0.0
    delta_c: float = 0.0
    delta_l: float = 0.0
    delta_s: float = 0.0

    @classmethod
    def from_mhz(cls, **kwargs) -> "DriveConfig":
        """Build from cyclic-MHz values (nu = Omega / 2pi)."""
        return cls(**{k: mhz(v) for k, v in kwargs.items()})

    @property
    def small_signal(self) -> bool:
        """True when |Omega_S| <= 0.1 |Omega_L| (or the signal is off)."""
        return abs(self.omega_s) <= SMALL_SIGNAL_RATIO * abs(self.omega_l) or self.omega_s == 0

    def replace(self, **changes) -> "DriveConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class ComplexRates:
    g12: complex
    g13: complex
    g14: complex


@dataclass(frozen=True)
class Harmonics1:
    """Zeroth and first harmonics of rho12 (carrier, +delta_s and -delta_s)."""

    rho0: complex
    rho_plus: complex
    rho_minus: complex


def complex_rates(atom: AtomSystem, drive: DriveConfig) -> ComplexRates:
    gamma = atom.dephasing
    g12 = gamma + atom.gamma2 / 2 + 1j * drive.delta_p
    g13 = gamma + atom.gamma_r / 2 + 1j * (drive.delta_p + drive.delta_c)
    g14 = gamma + atom.gamma_r / 2 + 1j * (drive.delta_p + drive.delta_c - drive.delta_l)
    return ComplexRates(complex(g12), complex(g13), complex(g14))


def g_denominator(rates, omega_c, omega_l):
    """G = g14 |Omega_c|^2 + g12 (4 g13 g14 + |Omega_L|^2).

    ``rates`` is a :class:`ComplexRates` or a ``(g12, g13, g14)`` tuple whose
    members may be numpy arrays.
    """
    g12, g13, g14 = _unpack(rates)
    return g14 * abs(omega_c) ** 2 + g12 * (4 * g13 * g14 + abs(omega_l) ** 2)


def _unpack(rates):
    if isinstance(rates, ComplexRates):
        return rates.g12, rates.g13, rates.g14
    return rates


def first_order_coherences(g12, g13, g14, delta_s, omega_p, omega_c, omega_l, omega_s):
    """Array form of the first-order harmonics.

    Broadcasts over every argument. Returns ``(rho0, rho_plus, rho_minus)``
    and the smallest ``|G|`` encountered relative to its own term scale, so
    callers can reject degenerate inputs.
    """
    oc2 = abs(omega_c) ** 2
    ol2 = abs(omega_l) ** 2
    inner = 4 * g13 * g14 + ol2
    g0 = g14 * oc2 + g12 * inner
    ids = 1j * delta_s
    gp = (g14 + ids) * oc2 + (g12 + ids) * (4 * (g13 + ids) * (g14 + ids) + ol2)
    gm = (g14 - ids) * oc2 + (g12 - ids) * (4 * (g13 - ids) * (g14 - ids) + ol2)

    scale = np.abs(g14) * oc2 + np.abs(g12) * (4 * np.abs(g13 * g14) + ol2) + 1e-300
    degeneracy = np.min(np.abs(g0) / scale)
    for g in (gp, gm):
        degeneracy = min(degeneracy, np.min(np.abs(g) / scale))
    if degeneracy <= 1e-300:
        raise DegenerateDenominator(
            "G vanished: decay-free resonant input has no stationary first-order solution"
        )

    mixing = omega_p * oc2
    rho0 = 0.5j * omega_p * inner / g0
    rho_plus = 0.5j * g14 * mixing * omega_l * np.conj(omega_s) / (g0 * gp)
    rho_minus = 0.5j * (g14 - ids) * mixing * np.conj(omega_l) * omega_s / (g0 * gm)
    return rho0, rho_plus, rho_minus


def harmonics_first_order(atom: AtomSystem, drive: DriveConfig) -> Harmonics1:
    """Closed-form rho12 harmonics at zero atomic velocity.

    Valid for a weak probe and |Omega_S| <= 0.1 |Omega_L|; outside that range a
    :class:`FirstOrderValidityWarning` is issued but the value is still
    returned.
    """
    if not drive.small_signal:
        warnings.warn(
            f"|Omega_S|/|Omega_L| = {abs(drive.omega_s) / max(abs(drive.omega_l), 1e-300):.3g} "
            "exceeds the first-order validity range",
            FirstOrderValidityWarning,
            stacklevel=2,
        )
    r = complex_rates(atom, drive)
    rho0, rp, rm = first_order_coherences(
        r.g12, r.g13, r.g14, drive.delta_s,
        drive.omega_p, drive.omega_c, drive.omega_l, drive.omega_s,
    )
    return Harmonics1(complex(rho0), complex(rp), complex(rm))
