import pytest

from rydsuperhet.constants import mhz
from rydsuperhet.doppler import DopplerSpec
from rydsuperhet.model import AtomSystem, DriveConfig

#: (coupling power W, gamma MHz, fitted Omega_c MHz, calculated Omega_c MHz)
TABLE_ROWS = [
    (0.536, 2.76, 17.12, 23.95),
    (0.250, 2.13, 11.53, 16.35),
    (0.1247, 1.75, 8.09, 11.55),
    (0.0624, 1.52, 5.73, 8.17),
    (0.0312, 1.31, 4.15, 5.78),
]


@pytest.fixture(scope="session")
def atom():
    return AtomSystem()


@pytest.fixture(scope="session")
def strong_atom():
    return AtomSystem().with_dephasing(mhz(2.76))


@pytest.fixture(scope="session")
def spec(atom):
    return DopplerSpec.from_atom(atom)


@pytest.fixture
def test_drive():
    """Generic off-resonant point used across solver tests."""
    return DriveConfig.from_mhz(omega_p=0.8, omega_c=17.12, omega_l=5.0, omega_s=0.05,
                                delta_p=0.7, delta_c=-1.3, delta_l=0.4, delta_s=3.0)


#: Acceptance results in run order: (criterion id, passed, detail).
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{cid:<4} {'PASS' if passed else 'FAIL'}  {detail}")
