import numpy as np
import pytest
from hypothesis import given, strategies as st

from scalesteer.calibration import (ScaleCalibration, _pool_adjacent_violators, fit_calibration,
                                    parabolic_offset, scale_centroid)
from scalesteer.detector import _fit_default, default_calibration
from scalesteer.multipliers import bspline_spec


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=40))
def test_pav_monotone_and_mean_preserving(y):
    z = _pool_adjacent_violators(y)
    assert len(z) == len(y)
    assert np.all(np.diff(z) >= -1e-12)
    assert np.sum(z) == pytest.approx(np.sum(y), abs=1e-8)


def test_pav_known():
    np.testing.assert_allclose(_pool_adjacent_violators([1, 3, 2, 4]), [1, 2.5, 2.5, 4])


@given(a=st.floats(-3, 3), b=st.floats(-3, 3), v=st.floats(-0.45, 0.45))
def test_parabolic_offset_exact(a, b, v):
    f = lambda x: -(1.0 + abs(a)) * (x - v) ** 2 + b
    assert parabolic_offset(f(-1), f(0), f(1)) == pytest.approx(v, abs=1e-9)


def test_scale_centroid():
    assert scale_centroid([0, 1, 0]) == 1.0
    assert scale_centroid([1, 0, 1]) == 1.0
    assert scale_centroid([0, 0, 0]) == 0.0


def _synthetic(period=2.0, slope=1.0, n=40):
    ell = np.linspace(-0.2, 1.6, n)
    s = np.repeat([2, 3], n // 2)
    r = 2.0 ** (ell + s)
    z = np.mod(slope * ell + 0.3, period)
    return fit_calibration("t", period, s, z, r, ell + s), ell, s, r, z


def test_linear_reading_is_inverted():
    tab, ell, s, r, z = _synthetic()
    np.testing.assert_allclose(tab.radius(z, s), r, rtol=1e-9)
    assert tab.slope == pytest.approx(1.0)


def test_cycle_choice_and_hint():
    tab, *_ = _synthetic(period=0.5)
    # half-octave period: readings repeat, the hint selects the cycle
    z = np.mod(0.3 + 1.2, 0.5)
    assert tab.log_radius(z, 3, hint=1.2) == pytest.approx(4.2)
    assert tab.log_radius(z, 3, hint=0.2) == pytest.approx(3.2)


def test_default_cycle_from_scale_interval():
    # table covering 0.46 of a 0.5-octave cycle at every scale, as in a narrow sweep
    ell = np.linspace(3.0, 3.46, 7)
    period = 0.5
    for s in (0, 2):
        z = np.mod(ell + 0.1 * np.sin(3 * ell), period)
        tab = fit_calibration("t", period, np.full(7, s), z, 2.0 ** (ell + s), ell + s)
        np.testing.assert_allclose(tab.log_radius(z, s), ell + s, atol=1e-12)
        # an uncalibrated scale borrows the nearest range, shifted by its octave
        np.testing.assert_allclose(tab.log_radius(z, s + 1), ell + s + 1, atol=1e-12)
        lo, hi = tab.scale_interval(s + 3)
        assert (lo, hi) == (pytest.approx(ell[0]), pytest.approx(ell[-1]))


def test_csv_round_trip():
    tab, ell, s, r, z = _synthetic()
    back = ScaleCalibration.from_csv(tab.to_csv())
    np.testing.assert_allclose(back.reading, tab.reading, atol=1e-12)
    np.testing.assert_allclose(back.ell, tab.ell, atol=1e-12)
    assert back.kind == "t" and back.period == 2.0


def test_errors():
    with pytest.raises(ValueError, match="positive"):
        fit_calibration("t", 2.0, [0, 0, 0], [0, 0.1, 0.2], [1, -1, 2], [0, 0, 0])
    with pytest.raises(ValueError, match="three"):
        fit_calibration("t", 2.0, [0, 0], [0, 0.1], [1, 2], [0, 0])
    with pytest.raises(ValueError, match="sparse"):
        fit_calibration("t", 2.0, [0, 0, 0], [0, 0.1, 0.2], [1, 1.1, 4.0], [0, 0, 0])


def test_shipped_table_matches_fit():
    shipped = default_calibration()
    fitted = _fit_default(bspline_spec(), 0.125)
    np.testing.assert_allclose(shipped.reading, fitted.reading, atol=1e-12)
    np.testing.assert_allclose(shipped.ell, fitted.ell, atol=1e-12)
