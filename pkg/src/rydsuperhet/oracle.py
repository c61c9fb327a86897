"""Three-way cross-check of the closed form, harmonic balance and RK4 solvers.

Each randomized point is solved three ways and the rho12 harmonics
n = -1, 0, +1 are compared pairwise. Relative deviation is |a - b| / |b|,
maximised over the three harmonics.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .constants import mhz
from .errors import ValidationError
from .floquet import solve_time_domain, solve_truncated
from .model import AtomSystem, DriveConfig, FirstOrderValidityWarning, harmonics_first_order

#: Sampling ranges in cyclic MHz.
RANGES = {
    "gamma": (0.5, 4.0),
    "omega_p": (0.1, 6.0),
    "omega_c": (1.0, 40.0),
    "omega_l": (1.0, 40.0),
    "delta_s": (0.1, 20.0),
    "detuning": (-5.0, 5.0),
}

PAIRS = ("closed_vs_truncated", "truncated_vs_time", "closed_vs_time", "closed_vs_order1")


@dataclass(frozen=True)
class OraclePoint:
    atom: AtomSystem
    drive: DriveConfig

    def describe(self):
        d = self.drive
        return {
            "gamma_MHz": self.atom.dephasing / mhz(1),
            **{k: getattr(d, k) / mhz(1) for k in
               ("omega_p", "omega_c", "omega_l", "omega_s", "delta_p", "delta_c", "delta_l",
                "delta_s")},
        }


@dataclass
class OracleReport:
    n_points: int
    seed: int
    order: int
    max_signal_ratio: float
    deviations: dict
    worst_points: dict
    elapsed: float
    per_point: list = field(default_factory=list, repr=False)

    def max_deviation(self, pairs=("closed_vs_truncated", "truncated_vs_time", "closed_vs_time")):
        return max(self.deviations[p] for p in pairs)

    def as_dict(self):
        return {
            "n_points": self.n_points,
            "seed": self.seed,
            "order": self.order,
            "max_signal_ratio": self.max_signal_ratio,
            "max_deviation": self.deviations,
            "worst_points": self.worst_points,
            "elapsed_s": self.elapsed,
        }


def random_points(n, seed, max_signal_ratio=0.1, min_signal_ratio=1e-4):
    """``n`` reproducible parameter points.

    Rates and Rabi frequencies are log-uniform over :data:`RANGES`; detunings
    are uniform. The ratio Omega_S/Omega_L is log-uniform over
    ``[min_signal_ratio, max_signal_ratio]``.
    """
    if n < 1:
        raise ValidationError("oracle check needs at least one point")
    if not 0 < min_signal_ratio <= max_signal_ratio:
        raise ValidationError("need 0 < min_signal_ratio <= max_signal_ratio")
    rng = np.random.default_rng(seed)

    def logu(key):
        lo, hi = RANGES[key]
        return mhz(math.exp(rng.uniform(math.log(lo), math.log(hi))))

    out = []
    for _ in range(n):
        atom = AtomSystem().with_dephasing(logu("gamma"))
        omega_l = logu("omega_l")
        ratio = math.exp(rng.uniform(math.log(min_signal_ratio), math.log(max_signal_ratio)))
        drive = DriveConfig(
            omega_p=logu("omega_p"),
            omega_c=logu("omega_c"),
            omega_l=omega_l,
            omega_s=ratio * omega_l,
            delta_s=logu("delta_s"),
            delta_p=mhz(rng.uniform(*RANGES["detuning"])),
            delta_c=mhz(rng.uniform(*RANGES["detuning"])),
            delta_l=mhz(rng.uniform(*RANGES["detuning"])),
        )
        out.append(OraclePoint(atom, drive))
    return out


def _rel(a, b):
    return float(np.max(np.abs(a - b) / np.abs(b)))


def compare_point(point: OraclePoint, order: int = 3):
    """Pairwise deviations at one point, keyed as in :data:`PAIRS`."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FirstOrderValidityWarning)
        h = harmonics_first_order(point.atom, point.drive)
    closed = np.array([h.rho_minus, h.rho0, h.rho_plus])
    trunc = solve_truncated(point.atom, point.drive, order)
    trunc = np.array([trunc.rho12(n) for n in (-1, 0, 1)])
    first = solve_truncated(point.atom, point.drive, 1)
    first = np.array([first.rho12(n) for n in (-1, 0, 1)])
    td = solve_time_domain(point.atom, point.drive, max_order=order)
    td = np.array([td.rho12(n) for n in (-1, 0, 1)])
    return {
        "closed_vs_truncated": _rel(closed, trunc),
        "truncated_vs_time": _rel(trunc, td),
        "closed_vs_time": _rel(closed, td),
        "closed_vs_order1": _rel(closed, first),
    }


def oracle_check(n_points: int = 100, seed: int = 0, order: int = 3,
                 max_signal_ratio: float = 0.1, min_signal_ratio: float = 1e-4) -> OracleReport:
    """Run :func:`compare_point` on ``n_points`` seeded random points."""
    if order < 3:
        raise ValidationError("the truncated leg needs order >= 3")
    start = time.perf_counter()
    points = random_points(n_points, seed, max_signal_ratio, min_signal_ratio)
    worst = {p: 0.0 for p in PAIRS}
    worst_at = {p: None for p in PAIRS}
    rows = []
    for pt in points:
        dev = compare_point(pt, order)
        rows.append(dev)
        for p in PAIRS:
            if dev[p] >= worst[p]:
                worst[p], worst_at[p] = dev[p], pt.describe()
    return OracleReport(n_points, seed, order, max_signal_ratio, worst, worst_at,
                        time.perf_counter() - start, rows)
