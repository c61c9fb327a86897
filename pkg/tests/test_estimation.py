import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rydsuperhet.calibration import beta_from_od
from rydsuperhet.constants import mhz
from rydsuperhet.errors import (BadGuess, InsufficientData, NoInteriorMax, NotConverged,
                                ValidationError, ZeroSlope)
from rydsuperhet.estimation import (SensitivityInput, default_guess, eit_model,
                                    estimate_sensitivity, fit_eit, linearity_check,
                                    optimize_local_mw, sweep_response)
from rydsuperhet.model import DriveConfig, FirstOrderValidityWarning
from rydsuperhet.observables import ResponseCurve, beat_amplitude, response_curve

DC = mhz(np.linspace(-40, 40, 161))
PROBE = DriveConfig(omega_p=1.0)


@pytest.fixture(scope="module")
def synthetic(atom, spec):
    beta = beta_from_od(atom, spec, 1.16)
    return eit_model(atom, PROBE, spec, DC, mhz(2.76), mhz(17.12), beta), beta


@pytest.fixture
def mw_drive():
    return DriveConfig.from_mhz(omega_p=0.5, omega_c=17.12, omega_s=0.01)


def test_fit_noiseless_round_trip(atom, spec, synthetic):
    y, beta = synthetic
    fit = fit_eit(np.column_stack([DC, y]), atom, spec, default_guess(0.536, atom))
    assert fit.converged
    assert fit.gamma == pytest.approx(mhz(2.76), rel=1e-3)
    assert fit.omega_c == pytest.approx(mhz(17.12), rel=1e-3)
    assert fit.scale == pytest.approx(beta, rel=1e-3)
    assert fit.iterations <= 200


def test_fit_noisy_round_trip(atom, spec, synthetic):
    y, _ = synthetic
    rng = np.random.default_rng(11)
    noisy = y + 0.01 * rng.standard_normal(y.size)
    fit = fit_eit(np.column_stack([DC, noisy]), atom, spec, default_guess(0.536, atom))
    assert fit.gamma == pytest.approx(mhz(2.76), rel=0.05)
    assert fit.omega_c == pytest.approx(mhz(17.12), rel=0.05)
    for key in ("gamma", "omega_c", "scale"):
        assert 0 < fit.stderr[key] < math.inf
    assert abs(fit.omega_c - mhz(17.12)) < 5 * fit.stderr["omega_c"]


def test_fit_accepts_unsorted_data(atom, spec, synthetic):
    y, _ = synthetic
    data = np.column_stack([DC, y])[::-1]
    fit = fit_eit(data, atom, spec, (mhz(2.0), mhz(12.0)))
    assert fit.omega_c == pytest.approx(mhz(17.12), rel=1e-3)


def test_fit_errors(atom, spec, synthetic):
    y, _ = synthetic
    data = np.column_stack([DC, y])
    with pytest.raises(InsufficientData):
        fit_eit(data[:9], atom, spec)
    bad = data.copy()
    bad[3, 1] = np.nan
    with pytest.raises(BadGuess):
        fit_eit(bad, atom, spec, (mhz(2.0), mhz(12.0)))
    with pytest.raises(BadGuess):
        fit_eit(data, atom, spec, (-1.0, mhz(12.0)))
    with pytest.raises(NotConverged):
        fit_eit(data, atom, spec, (mhz(0.3), mhz(3.0)), max_iter=1)


def test_default_guess(atom):
    gamma, omega_c = default_guess(0.536, atom)
    assert gamma == pytest.approx(mhz(2.0))
    assert omega_c == pytest.approx(0.7 * mhz(24.561), rel=1e-4)


def test_local_optimum_matches_dense_scan(strong_atom, spec, mw_drive):
    omega_l, peak = optimize_local_mw(strong_atom, mw_drive, spec, mhz(0.1))
    grid = mhz(np.geomspace(0.1, 1000, 1000))
    amps = [beat_amplitude(strong_atom, mw_drive.replace(omega_l=x, delta_s=mhz(0.1)), spec)
            for x in grid]
    best = int(np.argmax(amps))
    assert omega_l == pytest.approx(grid[best], rel=0.01)
    assert peak >= amps[best] * (1 - 1e-9)


def test_local_optimum_bracket_invariant(strong_atom, spec, mw_drive):
    a, _ = optimize_local_mw(strong_atom, mw_drive, spec, mhz(0.1), (mhz(0.1), mhz(1000)))
    b, _ = optimize_local_mw(strong_atom, mw_drive, spec, mhz(0.1), (mhz(1.0), mhz(200)))
    assert a == pytest.approx(b, rel=2e-4)


def test_amplitude_vanishes_at_extremes(strong_atom, spec, mw_drive):
    def amp(ol):
        return beat_amplitude(strong_atom, mw_drive.replace(omega_l=mhz(ol), delta_s=mhz(0.1)),
                              spec)

    peak = amp(14.08)
    assert amp(1e-4) < 1e-3 * peak
    assert amp(1e5) < 1e-3 * peak


def test_local_optimum_errors(strong_atom, spec, mw_drive):
    with pytest.raises(NoInteriorMax):
        optimize_local_mw(strong_atom, mw_drive, spec, mhz(0.1), (mhz(1e-4), mhz(0.1)))
    with pytest.raises(ValidationError):
        optimize_local_mw(strong_atom, mw_drive, spec, mhz(0.1), (mhz(1.0), mhz(50)))
    with pytest.raises(ValidationError):
        optimize_local_mw(strong_atom, mw_drive, spec, mhz(0.1), (mhz(10.0), mhz(1.0)))


def test_single_point_sweep_is_direct(atom, spec, mw_drive):
    grid = mhz(np.geomspace(0.05, 50, 60))
    [point] = sweep_response(atom, spec, [(mhz(2.76), mhz(17.12))], grid, drive=mw_drive)
    a = atom.with_dephasing(mhz(2.76))
    omega_l, _ = optimize_local_mw(a, mw_drive, spec)
    direct = response_curve(a, mw_drive.replace(omega_l=omega_l), spec, grid)
    assert point.omega_l == omega_l
    np.testing.assert_array_equal(point.curve.amplitude, direct.amplitude)


def test_threaded_sweep_matches_serial(atom, spec, mw_drive):
    grid = mhz(np.geomspace(0.05, 50, 30))
    pts = [(mhz(g), mhz(c)) for g, c in ((2.76, 17.12), (1.31, 4.15), (2.0, 8.0))]
    serial = sweep_response(atom, spec, pts, grid, drive=mw_drive)
    threaded = sweep_response(atom, spec, pts, grid, drive=mw_drive, workers=3)
    for s, t in zip(serial, threaded):
        assert (s.gamma, s.omega_c, s.omega_l) == (t.gamma, t.omega_c, t.omega_l)
        np.testing.assert_array_equal(s.curve.amplitude, t.curve.amplitude)


def _flat_curve(level=1.0):
    grid = mhz(np.geomspace(0.01, 100, 50))
    return ResponseCurve(grid, np.full(grid.size, level), normalized_at=grid[0])


def test_sensitivity_unit_case():
    assert estimate_sensitivity(SensitivityInput(1.0, 1.0, mhz(2.0), _flat_curve())) == 1.0


def test_sensitivity_reciprocal_in_response():
    full = estimate_sensitivity(SensitivityInput(2.0, 3.0, mhz(2.0), _flat_curve(1.0)))
    half = estimate_sensitivity(SensitivityInput(2.0, 3.0, mhz(2.0), _flat_curve(0.5)))
    assert half == pytest.approx(2 * full, rel=1e-15)


@given(k=st.floats(1e-6, 1e6), slope=st.floats(1e-3, 1e3), noise=st.floats(0, 1e3))
def test_sensitivity_homogeneous(k, slope, noise):
    curve = _flat_curve(0.7)
    a = estimate_sensitivity(SensitivityInput(slope, noise, mhz(2.0), curve))
    b = estimate_sensitivity(SensitivityInput(k * slope, k * noise, mhz(2.0), curve))
    assert b == pytest.approx(a, rel=1e-12, abs=1e-300)


def test_sensitivity_errors():
    with pytest.raises(ZeroSlope):
        estimate_sensitivity(SensitivityInput(0.0, 1.0, mhz(2.0), _flat_curve()))
    with pytest.raises(ValidationError):
        SensitivityInput(-1.0, 1.0, mhz(2.0), _flat_curve())
    with pytest.raises(ValidationError):
        SensitivityInput(1.0, -1.0, mhz(2.0), _flat_curve())
    raw = ResponseCurve(_flat_curve().delta_s, _flat_curve().amplitude)
    with pytest.raises(ValidationError):
        estimate_sensitivity(SensitivityInput(1.0, 1.0, mhz(2.0), raw))
    with pytest.raises(ValidationError):
        estimate_sensitivity(SensitivityInput(1.0, 1.0, mhz(500.0), _flat_curve()))


@pytest.fixture
def lin_drive():
    return DriveConfig.from_mhz(omega_p=0.5, omega_c=17.12, omega_l=14.08, delta_s=0.1)


def test_linearity_first_order(strong_atom, spec, lin_drive):
    powers = np.logspace(-6, -3, 7)
    alpha = 14.08e6 / math.sqrt(powers.max()) * 0.1
    assert linearity_check(strong_atom, lin_drive, spec, powers, alpha=alpha) == \
        pytest.approx(1.0, abs=1e-3)


def test_linearity_saturates(strong_atom, lin_drive):
    from rydsuperhet.doppler import DopplerSpec

    spec = DopplerSpec.from_atom(strong_atom, nodes=1024)
    powers = np.logspace(-2, 0, 5)
    alpha = 14.08e6 / math.sqrt(powers.max())
    assert linearity_check(strong_atom, lin_drive, spec, powers, alpha=alpha,
                           solver="truncated") < 0.97


def test_linearity_errors(strong_atom, spec, lin_drive):
    with pytest.raises(InsufficientData):
        linearity_check(strong_atom, lin_drive, spec, [1e-3])
    with pytest.raises(ValidationError):
        linearity_check(strong_atom, lin_drive, spec, np.linspace(1, 2, 5))
    with pytest.raises(ValidationError):
        linearity_check(strong_atom, lin_drive, spec, np.logspace(-3, 0, 5), solver="magic")
    with pytest.warns(FirstOrderValidityWarning):
        linearity_check(strong_atom, lin_drive, spec, np.logspace(-3, 0, 5))
