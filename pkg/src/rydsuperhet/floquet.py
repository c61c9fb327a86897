"""Harmonic-balance and time-domain solvers for the driven coherence system.

The reduced coherences X = (rho12, rho13, rho14) obey

    dX/dt = (A + Omega_S* B1 e^{i ds t} + Omega_S B-1 e^{-i ds t}) X + C

and the stationary periodic solution is expanded as X(t) = sum_n X_n e^{i n ds t}.
:func:`solve_truncated` solves the coupled harmonic equations directly;
:func:`solve_time_domain` integrates the ODE and projects, serving as an
independent check on both the block solver and the closed forms.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import NotConverged, SingularSystem, ValidationError
from .model import AtomSystem, DriveConfig, complex_rates

log = logging.getLogger(__name__)

#: Transient attenuation targeted by the automatic cycle count (e^-23 ~ 1e-10).
_TRANSIENT_EFOLDS = 23.0
#: Target h * |lambda_max| for the automatic RK4 step.
_STEP_STIFFNESS = 0.1


@dataclass(frozen=True)
class HarmonicSolution:
    """Harmonic vectors X_n = (rho12^n, rho13^n, rho14^n) for n in [-order, order]."""

    order: int
    harmonics: dict
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.harmonics) != 2 * self.order + 1:
            raise ValidationError("harmonics must hold exactly 2*order+1 entries")

    def rho12(self, n: int) -> complex:
        return complex(self.harmonics[n][0])

    def as_array(self) -> np.ndarray:
        """Stack as shape ``(2*order+1, 3)``, row k holding n = k - order."""
        return np.array([self.harmonics[n] for n in range(-self.order, self.order + 1)])


def coherence_matrices(atom: AtomSystem, drive: DriveConfig):
    """Return ``(A, B1, B_minus1, C)`` of the reduced coherence equations."""
    r = complex_rates(atom, drive)
    oc, ol = complex(drive.omega_c), complex(drive.omega_l)
    A = np.array([
        [-r.g12, 0.5j * oc.conjugate(), 0],
        [0.5j * oc, -r.g13, 0.5j * ol],
        [0, 0.5j * ol.conjugate(), -r.g14],
    ], dtype=complex)
    B1 = np.zeros((3, 3), dtype=complex)
    B1[2, 1] = 0.5j
    Bm1 = np.zeros((3, 3), dtype=complex)
    Bm1[1, 2] = 0.5j
    C = np.array([0.5j * drive.omega_p, 0, 0], dtype=complex)
    return A, B1, Bm1, C


def solve_truncated(atom: AtomSystem, drive: DriveConfig, order: int) -> HarmonicSolution:
    """Stationary harmonics with X_n = 0 imposed for |n| > order.

    The recursion

        (A - i n ds I) X_n + Omega_S* B1 X_{n-1} + Omega_S B-1 X_{n+1} + C delta_{n,0} = 0

    is assembled as one block-tridiagonal system of 2*order+1 blocks of size 3
    and solved by block elimination.
    """
    if int(order) != order or order < 1:
        raise ValidationError(f"order must be an integer >= 1, got {order!r}")
    order = int(order)
    A, B1, Bm1, C = coherence_matrices(atom, drive)
    size = 2 * order + 1
    ns = np.arange(-order, order + 1)
    diag = A[None, :, :] - 1j * drive.delta_s * ns[:, None, None] * np.eye(3)[None]
    lower = np.broadcast_to(np.conj(drive.omega_s) * B1, (size, 3, 3)).copy()
    upper = np.broadcast_to(drive.omega_s * Bm1, (size, 3, 3)).copy()
    lower[0] = 0
    upper[-1] = 0
    rhs = np.zeros((size, 3), dtype=complex)
    rhs[order] = -C
    x, ok = kernels.block_tridiag_solve(diag, lower, upper, rhs)
    if not ok or not np.all(np.isfinite(x)):
        raise SingularSystem("harmonic block system is singular (decay-free degenerate input?)")
    return HarmonicSolution(order, {int(n): x[k] for k, n in enumerate(ns)})


def _auto_cycles(A, delta_s):
    slowest = float(np.min(-np.linalg.eigvals(A).real))
    if slowest <= 0:
        raise ValidationError("homogeneous system does not decay; no periodic steady state")
    return max(50, math.ceil(_TRANSIENT_EFOLDS * delta_s / (2 * math.pi * slowest)))


def _auto_steps(A, drive):
    fastest = float(np.max(np.abs(np.linalg.eigvals(A)))) + abs(drive.omega_s) + abs(drive.delta_s)
    period = 2 * math.pi / drive.delta_s
    return max(400, math.ceil(period * fastest / _STEP_STIFFNESS))


def solve_time_domain(atom: AtomSystem, drive: DriveConfig, cycles: int | None = None,
                      steps_per_cycle: int | None = None, max_order: int = 2,
                      tol: float = 1e-6) -> HarmonicSolution:
    """Integrate from X(0) = 0 with fixed-step RK4 and project onto harmonics.

    Parameters
    ----------
    cycles : int, optional
        Beat periods to integrate. By default enough for the slowest decay
        mode of A to shrink by e^-23, and never fewer than 50.
    steps_per_cycle : int, optional
        RK4 steps per period. By default at least 400, raised until
        ``h * |lambda_max| <= 0.1`` so the step resolves the fastest mode.
    max_order : int
        Highest harmonic extracted.
    tol : float
        Maximum relative change of the harmonics between the last two periods.

    Raises
    ------
    NotConverged
        When the last two periods disagree by more than ``tol``.
    """
    if not drive.delta_s > 0:
        raise ValidationError("time-domain integration needs delta_s > 0")
    A, B1, Bm1, C = coherence_matrices(atom, drive)
    auto_cycles = cycles is None
    if auto_cycles:
        cycles = _auto_cycles(A, drive.delta_s)
    if steps_per_cycle is None:
        steps_per_cycle = _auto_steps(A, drive)
    if cycles < 2:
        raise ValidationError("need at least two cycles to test convergence")
    attempts = 4 if auto_cycles else 1
    for attempt in range(attempts):
        last, prev = kernels.rk4_harmonics(
            A, np.conj(drive.omega_s) * B1, drive.omega_s * Bm1, C,
            float(drive.delta_s), int(steps_per_cycle), int(cycles), int(max_order),
        )
        change = _period_change(last, prev, max_order)
        if change <= tol:
            break
        if attempt < attempts - 1:
            cycles *= 2
    diagnostics = {"cycles": int(cycles), "steps_per_cycle": int(steps_per_cycle),
                   "period_change": change}
    if not change <= tol:
        raise NotConverged(
            f"harmonics changed by {change:.3g} (> {tol:g}) over the last period "
            f"after {cycles} cycles; increase cycles"
        )
    log.debug("time-domain solve: %s", diagnostics)
    ns = range(-max_order, max_order + 1)
    return HarmonicSolution(max_order, {n: last[k] for k, n in enumerate(ns)}, diagnostics)


def _period_change(last, prev, max_order):
    """Largest relative change between two period projections.

    Harmonics |n| <= 1 always count; higher ones only once they exceed 1e-6 of
    the carrier, below which they sit at round-off level.
    """
    carrier = np.linalg.norm(last[max_order])
    change = 0.0
    for k in range(last.shape[0]):
        n = k - max_order
        size = np.linalg.norm(last[k])
        if size == 0 or (abs(n) > 1 and size < 1e-6 * carrier):
            continue
        change = max(change, np.linalg.norm(last[k] - prev[k]) / size)
    return change


def truncation_study(atom: AtomSystem, drive: DriveConfig, orders=(1, 2, 3, 4, 6, 8)):
    """Order-to-order change of rho12^{+-1}; logs a warning if it grows >10x.

    Returns a list of ``(order, relative_change)`` pairs, the change measured
    against the previous order in the list.
    """
    out = []
    prev = None
    prev_change = None
    for order in orders:
        sol = solve_truncated(atom, drive, order)
        cur = np.array([sol.rho12(1), sol.rho12(-1)])
        if prev is not None:
            change = float(np.max(np.abs(cur - prev) / np.maximum(np.abs(cur), 1e-300)))
            if prev_change is not None and prev_change > 0 and change > 10 * prev_change:
                log.warning("truncation change grew from %.3g to %.3g at order %d",
                            prev_change, change, order)
            out.append((order, change))
            prev_change = change
        prev = cur
    return out
