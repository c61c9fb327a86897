"""EIT fitting, local-MW optimisation, parameter sweeps and sensitivity."""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .calibration import BeamGeometry, rabi_from_power
from .constants import TWO_PI, mhz
from .doppler import DopplerSpec
from .errors import (BadGuess, InsufficientData, NoInteriorMax, NotConverged,
                     ValidationError, ZeroSlope)
from .floquet import solve_truncated
from .model import SMALL_SIGNAL_RATIO, AtomSystem, DriveConfig, FirstOrderValidityWarning
from .observables import (DEFAULT_NORMALIZE_AT, DetectorModel, ResponseCurve,
                          absorption_per_mhz, beat_amplitude, response_curve)


DEFAULT_GAMMA_GUESS = mhz(2.0)
#: Fitted coupling Rabi frequencies run at roughly this fraction of the peak value.
EFFECTIVE_RABI_FRACTION = 0.7
DEFAULT_COUPLING_WAIST = 100.24e-6
DEFAULT_ALPHA_S = 13.22e6


@dataclass(frozen=True)
class FitResult:
    gamma: float
    omega_c: float
    scale: float
    residual_norm: float
    iterations: int
    converged: bool
    stderr: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "gamma_MHz": self.gamma / mhz(1),
            "omega_c_MHz": self.omega_c / mhz(1),
            "scale": self.scale,
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "stderr": {"gamma_MHz": self.stderr.get("gamma", math.nan) / mhz(1),
                       "omega_c_MHz": self.stderr.get("omega_c", math.nan) / mhz(1),
                       "scale": self.stderr.get("scale", math.nan)},
        }


def default_guess(coupling_power: float, atom: AtomSystem = AtomSystem(),
                  waist: float = DEFAULT_COUPLING_WAIST):
    """Starting ``(gamma, omega_c)`` for :func:`fit_eit` from the coupling power (W)."""
    peak = rabi_from_power(BeamGeometry(coupling_power, waist), atom.dipole_coupling)
    return DEFAULT_GAMMA_GUESS, EFFECTIVE_RABI_FRACTION * peak


def eit_model(atom, drive, spec, delta_c, gamma, omega_c, scale):
    """ln-transmission model used by :func:`fit_eit`."""
    a = atom.with_dephasing(gamma)
    d = drive.replace(omega_c=omega_c, omega_l=0.0, omega_s=0.0)
    return -scale * absorption_per_mhz(a, d, spec, delta_c)


def _jacobian(residual, p, r):
    J = np.empty((r.size, p.size))
    for j in range(p.size):
        h = 1e-7 * max(abs(p[j]), 1.0)
        q = p.copy()
        q[j] += h
        J[:, j] = (residual(q) - r) / h
    return J


def _lm(residual, p0, max_iter, xtol=1e-8, ftol=1e-12):
    """Levenberg-Marquardt with Marquardt diagonal scaling and forward-difference Jacobian."""
    p = np.array(p0, dtype=float)
    r = residual(p)
    if not np.all(np.isfinite(r)):
        raise BadGuess("model residual is not finite at the initial guess")
    cost = float(r @ r)
    lam = 1e-3
    J = None
    for it in range(1, max_iter + 1):
        if J is None:
            J = _jacobian(residual, p, r)
        JtJ = J.T @ J
        g = J.T @ r
        step = None
        while lam < 1e16:
            M = JtJ + lam * np.diag(np.maximum(np.diag(JtJ), 1e-300))
            try:
                step = np.linalg.solve(M, -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            r_new = residual(p + step)
            cost_new = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else math.inf
            if cost_new < cost:
                break
            lam *= 10
            step = None
        if step is None:
            # no descent direction left at working precision
            return p, r, J, it, True
        small_step = np.linalg.norm(step) <= xtol * (np.linalg.norm(p) + xtol)
        small_change = cost - cost_new <= ftol * max(cost, 1e-300)
        p, r, cost = p + step, r_new, cost_new
        lam = max(lam / 10, 1e-12)
        J = None
        if small_step or small_change:
            return p, r, None, it, True
    return p, r, None, max_iter, False


def fit_eit(data, atom: AtomSystem, spec: DopplerSpec, initial_guess=None,
            drive: DriveConfig | None = None, max_iter: int = 200) -> FitResult:
    """Fit (gamma, Omega_c, scale) to a measured EIT spectrum.

    ``data`` holds ``(delta_c [rad/s], ln_transmission)`` pairs. ``initial_guess``
    is ``(gamma, omega_c)`` or ``(gamma, omega_c, scale)``; without it gamma
    starts at 2 MHz and Omega_c at a quarter of the scan span. When no scale is given
    it is initialised by linear least squares at the guessed rates.
    gamma and Omega_c are fitted in log space so they stay positive.
    """
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError("EIT data must be (delta_c, ln_transmission) pairs")
    if arr.shape[0] < 10:
        raise InsufficientData(f"EIT fit needs at least 10 points, got {arr.shape[0]}")
    order = np.argsort(arr[:, 0])
    dc, y = arr[order, 0], arr[order, 1]
    if drive is None:
        drive = DriveConfig(omega_p=1.0)
    if initial_guess is None:
        initial_guess = (DEFAULT_GAMMA_GUESS, 0.25 * (dc[-1] - dc[0]))
    gamma0, omega_c0 = initial_guess[0], initial_guess[1]
    if not (gamma0 > 0 and omega_c0 > 0):
        raise BadGuess("initial gamma and omega_c must be positive")
    if len(initial_guess) > 2:
        scale0 = float(initial_guess[2])
    else:
        shape = eit_model(atom, drive, spec, dc, gamma0, omega_c0, 1.0)
        denom = float(shape @ shape)
        if not denom > 0 or not math.isfinite(denom):
            raise BadGuess("model is flat at the initial guess")
        scale0 = float(shape @ y) / denom

    def residual(p):
        return eit_model(atom, drive, spec, dc, math.exp(p[0]), math.exp(p[1]), p[2]) - y

    p, r, J, iterations, converged = _lm(residual, [math.log(gamma0), math.log(omega_c0), scale0],
                                        max_iter)
    if not converged:
        raise NotConverged(f"EIT fit did not converge in {max_iter} iterations")
    gamma, omega_c, scale = math.exp(p[0]), math.exp(p[1]), float(p[2])
    stderr = _standard_errors(residual, p, r, J)
    stderr = {"gamma": gamma * stderr[0], "omega_c": omega_c * stderr[1], "scale": stderr[2]}
    return FitResult(gamma, omega_c, scale, float(np.linalg.norm(r)), iterations, True, stderr)


def _standard_errors(residual, p, r, J):
    if J is None:
        J = _jacobian(residual, p, r)
    dof = max(r.size - p.size, 1)
    s2 = float(r @ r) / dof
    try:
        cov = s2 * np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        return np.full(p.size, math.nan)
    return np.sqrt(np.maximum(np.diag(cov), 0.0))


def _amplitude_at(atom, drive, spec, delta_s, omega_l):
    return beat_amplitude(atom, drive.replace(omega_l=omega_l, delta_s=delta_s), spec)


def optimize_local_mw(atom: AtomSystem, drive: DriveConfig, spec: DopplerSpec,
                      delta_s: float = DEFAULT_NORMALIZE_AT, bracket=(mhz(0.1), mhz(1000.0)),
                      scan_points: int = 61, rtol: float = 1e-4):
    """Local-MW Rabi frequency maximising the beat amplitude at ``delta_s``.

    A log-spaced scan over ``bracket`` locates the best sample, then
    golden-section search on log Omega_L refines it between the neighbouring
    samples until the bracket ratio is within ``1 + rtol``.
    Returns ``(omega_l_opt, peak_amplitude)``.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (0 < lo < hi):
        raise ValidationError("bracket must be positive and increasing")
    if hi / lo < 100:
        raise ValidationError("bracket must span at least two decades")
    xs = np.linspace(math.log(lo), math.log(hi), scan_points)
    amps = np.array([_amplitude_at(atom, drive, spec, delta_s, math.exp(x)) for x in xs])
    k = int(np.argmax(amps))
    if k == 0 or k == scan_points - 1:
        raise NoInteriorMax(
            f"beat amplitude peaks at the bracket edge ({math.exp(xs[k]) / mhz(1):.4g} MHz)"
        )

    def f(x):
        return _amplitude_at(atom, drive, spec, delta_s, math.exp(x))

    a, b = xs[k - 1], xs[k + 1]
    invphi = (math.sqrt(5) - 1) / 2
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    tol = math.log1p(rtol)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return math.exp(x), f(x)


@dataclass(frozen=True)
class SweepPoint:
    gamma: float
    omega_c: float
    omega_l: float
    peak_amplitude: float
    curve: ResponseCurve


def sweep_response(atom: AtomSystem, spec: DopplerSpec, sweep, delta_s_grid,
                   drive: DriveConfig | None = None, optimize_at: float = DEFAULT_NORMALIZE_AT,
                   bracket=(mhz(0.1), mhz(1000.0)), detector: DetectorModel | None = None,
                   normalize_at: float | None = DEFAULT_NORMALIZE_AT, workers: int = 1):
    """Response curves over ``(gamma, omega_c)`` pairs, re-optimising Omega_L each time.

    Points are independent; with ``workers > 1`` they run on a thread pool and
    results come back in input order.
    """
    if drive is None:
        drive = DriveConfig.from_mhz(omega_p=0.5, omega_s=0.01)

    def one(point):
        gamma, omega_c = point
        a = atom.with_dephasing(gamma)
        d = drive.replace(omega_c=omega_c)
        omega_l, peak = optimize_local_mw(a, d, spec, optimize_at, bracket)
        curve = response_curve(a, d.replace(omega_l=omega_l), spec, delta_s_grid,
                               detector=detector, normalize_at=normalize_at)
        return SweepPoint(gamma, omega_c, omega_l, peak, curve)

    points = list(sweep)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, points))
    return [one(p) for p in points]


@dataclass(frozen=True)
class SensitivityInput:
    """Inputs for a noise-limited sensitivity estimate.

    ``response_slope`` is readout units per V/m at the normalisation
    frequency, ``noise_density`` readout units per sqrt(Hz).
    """

    response_slope: float
    noise_density: float
    delta_s: float
    response_curve: ResponseCurve

    def __post_init__(self):
        if self.response_slope < 0:
            raise ValidationError("response slope must be non-negative")
        if self.noise_density < 0:
            raise ValidationError("noise density must be non-negative")


def estimate_sensitivity(inp: SensitivityInput) -> float:
    """Field giving SNR = 1 in a 1 Hz bandwidth, in V/m per sqrt(Hz).

    The slope is corrected by the normalised response at ``delta_s``.
    """
    curve = inp.response_curve
    if curve.normalized_at is None:
        raise ValidationError("sensitivity needs a normalised response curve")
    effective = inp.response_slope * curve.value_at(inp.delta_s)
    if effective == 0:
        raise ZeroSlope("effective response slope is zero")
    return inp.noise_density / effective


def _truncated_amplitude(atom, drive, spec, order):
    v, w = spec.velocity_grid()
    keep = w > 1e-14 * w.max()
    plus = minus = 0j
    for vi, wi in zip(v[keep], w[keep] / w[keep].sum()):
        shifted = drive.replace(delta_p=drive.delta_p - spec.kp * vi,
                                delta_c=drive.delta_c + spec.signed_kc * vi)
        sol = solve_truncated(atom, shifted, order)
        plus += wi * sol.rho12(1)
        minus += wi * sol.rho12(-1)
    return abs(plus - minus.conjugate())


def linearity_check(atom: AtomSystem, drive: DriveConfig, spec: DopplerSpec, powers,
                    alpha: float = DEFAULT_ALPHA_S, solver: str = "first-order",
                    order: int = 4) -> float:
    """Log-log slope of readout power against signal-MW power.

    ``powers`` are signal-MW powers in mW, mapped to Omega_S = 2 pi alpha sqrt(P)
    with ``alpha`` in Hz per sqrt(mW). The readout is the squared beat
    amplitude. ``solver`` is ``"first-order"`` or ``"truncated"`` (harmonic
    balance at ``order``, which captures saturation).
    """
    p = np.asarray(powers, dtype=float)
    if p.size < 5:
        raise InsufficientData(f"linearity check needs at least 5 powers, got {p.size}")
    if np.any(p <= 0):
        raise ValidationError("powers must be positive")
    if 10 * math.log10(p.max() / p.min()) < 20:
        raise ValidationError("powers must span at least 20 dB")
    omega_s = TWO_PI * alpha * np.sqrt(p)
    if solver == "first-order":
        if omega_s.max() > SMALL_SIGNAL_RATIO * abs(drive.omega_l):
            warnings.warn("signal powers leave the small-signal regime", FirstOrderValidityWarning,
                          stacklevel=2)
        amps = [beat_amplitude(atom, drive.replace(omega_s=s), spec) for s in omega_s]
    elif solver == "truncated":
        amps = [_truncated_amplitude(atom, drive.replace(omega_s=s), spec, order) for s in omega_s]
    else:
        raise ValidationError(f"unknown solver {solver!r}")
    readout = np.square(amps)
    slope, _ = np.polyfit(np.log10(p), np.log10(readout), 1)
    return float(slope)
