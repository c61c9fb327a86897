"""Time the compiled and pure-Python kernels on representative workloads.

    python benchmarks/bench_kernels.py [--repeat N]

Each workload goes through the public API with ``rydsuperhet.kernels``
pointed at one backend at a time, and results are checked to agree.
"""
import argparse
import timeit

import numpy as np

from rydsuperhet import kernels
from rydsuperhet.constants import mhz
from rydsuperhet.doppler import DopplerSpec, averaged_harmonics
from rydsuperhet.floquet import solve_time_domain, solve_truncated
from rydsuperhet.model import AtomSystem, DriveConfig

ATOM = AtomSystem().with_dephasing(mhz(2.76))
SPEC = DopplerSpec.from_atom(ATOM)
DRIVE = DriveConfig.from_mhz(omega_p=0.5, omega_c=17.12, omega_l=14.08, omega_s=0.01)
GRID = mhz(np.geomspace(0.01, 100, 100))
OSC = DriveConfig.from_mhz(omega_p=0.8, omega_c=17.12, omega_l=5.0, omega_s=0.5, delta_s=3.0)

WORKLOADS = {
    "doppler 100 x 4096": lambda: averaged_harmonics(ATOM, DRIVE, SPEC, GRID)[1],
    "truncated order 8": lambda: np.array(
        [solve_truncated(ATOM, OSC, 8).rho12(n) for n in (-1, 0, 1)]),
    "rk4 time domain": lambda: np.array(
        [solve_time_domain(ATOM, OSC, max_order=3).rho12(n) for n in (-1, 0, 1)]),
}
NAMES = ("doppler_first_order", "block_tridiag_solve", "rk4_harmonics")


def use(module):
    for name in NAMES:
        setattr(kernels, name, getattr(module, name))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    backends = kernels.available_backends()
    print(f"{'workload':<22}" + "".join(f"{b:>12}" for b in backends) + "     speedup")
    for label, fn in WORKLOADS.items():
        times, values = [], []
        for module in backends.values():
            use(module)
            values.append(fn())
            times.append(min(timeit.repeat(fn, number=1, repeat=args.repeat)))
        for v in values[1:]:
            np.testing.assert_allclose(v, values[0], rtol=1e-9)
        speed = f"{times[-1] / times[0]:10.1f}x" if len(times) > 1 else ""
        print(f"{label:<22}" + "".join(f"{t * 1e3:10.2f}ms" for t in times) + speed)


if __name__ == "__main__":
    main()
