"""Receiver readouts built on the Doppler-averaged harmonics.

Amplitudes are relative: the proportionality constant between the beat
signal and |<rho12^1> - <rho12^-1>*| is not known, so curves are normalised
at a reference beat frequency. Decibels are 20 log10 of amplitude ratios.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import TWO_PI, mhz
from .doppler import DopplerSpec, averaged_harmonics
from .errors import EmptyGrid, NotNormalized, ValidationError
from .model import AtomSystem, DriveConfig

DEFAULT_NORMALIZE_AT = mhz(0.1)

# Im(rho12 / Omega_p) is reported per cyclic MHz so that beta comes out in the
# same units as commonly quoted optical-depth scale factors.
_PER_MHZ = TWO_PI * 1e6


@dataclass(frozen=True)
class DetectorModel:
    """First-order low-pass photodetector with corner ``f3db`` in Hz."""

    f3db: float = 10e6

    def __post_init__(self):
        if not self.f3db > 0:
            raise ValidationError("detector f3db must be positive")

    def magnitude(self, frequency_hz):
        f = np.asarray(frequency_hz, dtype=float)
        return 1.0 / np.sqrt(1.0 + (f / self.f3db) ** 2)

    def attenuation_db(self, frequency_hz):
        return 20 * np.log10(self.magnitude(frequency_hz))


@dataclass(frozen=True)
class ResponseCurve:
    """Beat amplitude versus beat detuning (rad/s).

    ``normalized_at`` is the reference detuning the amplitudes were divided
    by, or None for raw amplitudes. ``detector`` records a detector response
    already multiplied in.
    """

    delta_s: np.ndarray
    amplitude: np.ndarray
    normalized_at: float | None = None
    detector: DetectorModel | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ds = np.asarray(self.delta_s, dtype=float)
        amp = np.asarray(self.amplitude, dtype=float)
        if ds.ndim != 1 or ds.shape != amp.shape:
            raise ValidationError("delta_s and amplitude must be 1-D arrays of equal length")
        if ds.size and np.any(np.diff(ds) <= 0):
            raise ValidationError("delta_s must be strictly increasing")
        if np.any(amp < 0):
            raise ValidationError("amplitudes must be non-negative")
        object.__setattr__(self, "delta_s", ds)
        object.__setattr__(self, "amplitude", amp)

    @property
    def frequency_hz(self) -> np.ndarray:
        return self.delta_s / TWO_PI

    def db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 20 * np.log10(self.amplitude)

    def atomic_db(self) -> np.ndarray:
        """dB with any applied detector response divided back out."""
        out = self.db()
        if self.detector is not None:
            out = out - self._detector_db(self.detector)
        return out

    def _detector_db(self, detector):
        ref = 0.0 if self.normalized_at is None else detector.attenuation_db(self.normalized_at / TWO_PI)
        return detector.attenuation_db(self.frequency_hz) - ref

    def value_at(self, delta_s) -> float:
        """Amplitude interpolated linearly in log-frequency."""
        lo, hi = self.delta_s[0], self.delta_s[-1]
        if not lo <= delta_s <= hi:
            raise ValidationError("requested delta_s lies outside the curve")
        return float(np.interp(np.log(delta_s), np.log(self.delta_s), self.amplitude))


@dataclass(frozen=True)
class EITSpectrum:
    """ln(P_out/P_in) versus coupling detuning (rad/s)."""

    delta_c: np.ndarray
    ln_transmission: np.ndarray
    beta: float
    od: float | None = None

    @property
    def transmission(self):
        return np.exp(self.ln_transmission)


def beat_amplitude(atom: AtomSystem, drive: DriveConfig, spec: DopplerSpec) -> float:
    """|<rho12^1> - <rho12^-1>*| at ``drive.delta_s``."""
    return float(beat_amplitudes(atom, drive, spec, np.array([drive.delta_s]))[0])


def beat_amplitudes(atom, drive, spec, delta_s):
    _, plus, minus = averaged_harmonics(atom, drive, spec, delta_s)
    return np.abs(plus - np.conj(minus))


def sideband_contributions(atom: AtomSystem, drive: DriveConfig, spec: DopplerSpec):
    """``(|<rho12^1>|, |<rho12^-1>|)``: the omega_p + ds and omega_p - ds sidebands."""
    _, plus, minus = averaged_harmonics(atom, drive, spec, np.array([drive.delta_s]))
    return float(abs(plus[0])), float(abs(minus[0]))


def sideband_curves(atom, drive, spec, delta_s):
    _, plus, minus = averaged_harmonics(atom, drive, spec, delta_s)
    return np.abs(plus), np.abs(minus)


def response_curve(atom: AtomSystem, drive: DriveConfig, spec: DopplerSpec, delta_s,
                   detector: DetectorModel | None = None,
                   normalize_at: float | None = DEFAULT_NORMALIZE_AT) -> ResponseCurve:
    """Beat amplitude over a grid of beat detunings.

    With a detector the amplitude is multiplied by the low-pass magnitude.
    With ``normalize_at`` (rad/s; must lie within the grid span) the curve is
    divided by its value there, evaluated exactly rather than interpolated.
    Pass ``normalize_at=None`` for raw amplitudes.
    """
    delta_s = np.asarray(delta_s, dtype=float)
    if delta_s.size == 0:
        raise EmptyGrid("delta_s grid is empty")
    if np.any(np.diff(delta_s) <= 0):
        raise ValidationError("delta_s grid must be strictly increasing")
    if normalize_at is not None and not delta_s[0] <= normalize_at <= delta_s[-1]:
        raise ValidationError("normalize_at lies outside the delta_s grid")

    points = delta_s if normalize_at is None else np.append(delta_s, normalize_at)
    amp = beat_amplitudes(atom, drive, spec, points)
    if detector is not None:
        amp = amp * detector.magnitude(points / TWO_PI)
    if normalize_at is not None:
        ref = amp[-1]
        if not ref > 0:
            raise ValidationError("response vanishes at the normalisation point")
        amp = amp[:-1] / ref
    return ResponseCurve(delta_s, amp, normalize_at, detector)


def _first_crossing(x, y):
    """Interpolated x where y first goes from >= 0 to < 0, or None."""
    below = np.nonzero(y < 0)[0]
    if below.size == 0:
        return None
    i = below[0]
    if i == 0:
        return float(x[0])
    x0, x1, y0, y1 = x[i - 1], x[i], y[i - 1], y[i]
    return float(x0 + (x1 - x0) * y0 / (y0 - y1))


def bandwidth_minus3db(curve: ResponseCurve, detector: DetectorModel | None = None):
    """Lowest frequency (Hz) where the response drops through -3 dB.

    When the curve carries a detector (or one is passed explicitly) the
    threshold becomes -3 dB plus that detector's attenuation, relative to the
    normalisation point, which recovers the atomic bandwidth. The crossing is
    interpolated linearly in (log f, dB). Returns None when the curve stays
    above the threshold over the whole grid.
    """
    if curve.normalized_at is None:
        raise NotNormalized("bandwidth needs a normalised response curve")
    if detector is None:
        detector = curve.detector
    threshold = np.full(curve.delta_s.shape, -3.0)
    if detector is not None:
        threshold = threshold + curve._detector_db(detector)
    margin = curve.db() - threshold
    logf = _first_crossing(np.log(curve.frequency_hz), margin)
    return None if logf is None else float(np.exp(logf))


def gain_peak(curve: ResponseCurve, threshold_db: float | None = 0.0):
    """Highest interior local maximum of the atomic response, in (Hz, dB).

    Only maxima above ``threshold_db`` count; ``threshold_db=None`` accepts
    any interior local maximum (a response peak that may sit below 0 dB).
    Returns None when there is none.
    """
    db = curve.atomic_db()
    if db.size < 3:
        return None
    interior = np.nonzero((db[1:-1] > db[:-2]) & (db[1:-1] >= db[2:]))[0] + 1
    if threshold_db is not None:
        interior = interior[db[interior] > threshold_db]
    if interior.size == 0:
        return None
    k = interior[np.argmax(db[interior])]
    return float(curve.frequency_hz[k]), float(db[k])


def absorption_per_mhz(atom: AtomSystem, drive: DriveConfig, spec: DopplerSpec, delta_c):
    """<Im(rho12^0 / Omega_p)> along a coupling-detuning scan, per cyclic MHz."""
    if drive.omega_p == 0:
        drive = drive.replace(omega_p=1.0)
    delta_c = np.asarray(delta_c, dtype=float)
    rho0, _, _ = averaged_harmonics(atom, drive.replace(omega_s=0.0), spec,
                                    np.zeros(delta_c.size), delta_c=delta_c)
    return (rho0 / drive.omega_p).imag * _PER_MHZ


def eit_spectrum(atom: AtomSystem, drive: DriveConfig, spec: DopplerSpec, delta_c,
                 beta: float, od: float | None = None) -> EITSpectrum:
    """Probe log-transmission ln(P_out/P_in) = -beta <Im(rho12^0/Omega_p)>.

    ``beta`` multiplies the absorption expressed per cyclic MHz (see
    :func:`rydsuperhet.calibration.beta_from_od`). The template normally has
    Omega_L = Omega_S = 0; a non-zero local field gives the Autler-Townes
    split spectrum.
    """
    delta_c = np.asarray(delta_c, dtype=float)
    if delta_c.size == 0:
        raise EmptyGrid("delta_c grid is empty")
    ln_t = -beta * absorption_per_mhz(atom, drive, spec, delta_c)
    return EITSpectrum(delta_c, ln_t, beta, od)
