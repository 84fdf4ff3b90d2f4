import numpy as np
import pytest
from hypothesis import given, strategies as st

from scalesteer.frame import (MeyerProfile, analyze, build_filter_bank, eval_G, frequency_grid,
                              max_scales, synthesize)
from scalesteer.multipliers import MultiplierBank, bspline_spec


# -- the window -------------------------------------------------------------

def test_G_endpoints_and_symmetry():
    g = np.linspace(-1.5, 1.5, 301)
    assert eval_G(-1.0) == pytest.approx(0.0, abs=1e-15)
    assert eval_G(1.0) == np.pi / 2
    np.testing.assert_allclose(eval_G(g) + eval_G(-g), np.pi / 2, atol=1e-14)
    assert np.all(np.diff(eval_G(g)) >= -1e-15)


def test_G_smooth_at_knots():
    # three vanishing derivatives at +-1: the polynomial hugs its flat ends
    for knot, flat in [(-1.0, 0.0), (1.0, np.pi / 2)]:
        d = 1e-2
        side = knot + d if knot < 0 else knot - d
        assert abs(eval_G(side) - flat) < 40 * d ** 4


@pytest.mark.parametrize("eps", [0.05, 0.125, 0.5, 1.0])
def test_partition_of_unity(eps):
    h = MeyerProfile(eps)
    rho = np.geomspace(np.pi / 1024, np.pi, 4000)
    np.testing.assert_allclose(h.octave_sum(rho), 1.0, atol=1e-12)


def test_support():
    h = MeyerProfile(0.125)
    lo, hi = h.support
    assert lo == pytest.approx(np.pi * 4 ** -1.125)
    assert h(lo * 0.999) == 0.0 and h(hi) == 0.0 and h(hi * 1.001) == 0.0
    assert h(0.5 * (lo + hi)) > 0


def test_profile_rejects_bad_input():
    with pytest.raises(ValueError):
        MeyerProfile(0.0)
    with pytest.raises(ValueError):
        MeyerProfile(0.1)(-1.0)


def test_frequency_grid():
    rp, r2 = frequency_grid(8)
    assert r2[0, 0] == 0 and r2[0, 4] == pytest.approx(np.pi)
    rinf, _ = frequency_grid(8, np.inf)
    assert rinf[4, 4] == pytest.approx(np.pi)
    with pytest.raises(ValueError):
        frequency_grid(8, 3)


@pytest.mark.parametrize("n,J", [(128, 4), (256, 5), (512, 6)])
def test_max_scales(n, J):
    assert max_scales(n) == J
    build_filter_bank(n, J)


# -- frame ------------------------------------------------------------------

def test_bank_unity(bank64):
    assert bank64.unity_defect() < 1e-12


@pytest.mark.parametrize("mult", [None, "bspline"])
def test_perfect_reconstruction(bank64, rng, mult):
    mb = None if mult is None else MultiplierBank(bspline_spec())
    f = rng.standard_normal((64, 64))
    p = analyze(f, bank64, mb)
    g = synthesize(p, bank64, mb)
    assert np.linalg.norm(g - f) / np.linalg.norm(f) < 1e-10
    assert abs(p.energy() - np.mean(f ** 2)) / np.mean(f ** 2) < 1e-10


def test_real_family_gives_real_coefficients(bank64, rng):
    p = analyze(rng.standard_normal((64, 64)), bank64, MultiplierBank(bspline_spec()))
    assert not np.iscomplexobj(p.channels)
    assert p.channels.shape == (3, 9, 64, 64)


def test_synthesize_checks_keys(bank64, rng):
    p = analyze(rng.standard_normal((64, 64)), bank64)
    with pytest.raises(ValueError):
        synthesize(p, bank64, MultiplierBank(bspline_spec()))
    with pytest.raises(ValueError):
        analyze(np.zeros((32, 32)), bank64)


@given(dy=st.integers(-64, 64), dx=st.integers(-64, 64), seed=st.integers(0, 2 ** 16))
def test_shift_equivariance(bank64, dy, dx, seed):
    f = np.random.default_rng(seed).standard_normal((64, 64))
    mb = MultiplierBank(bspline_spec())
    a = analyze(f, bank64, mb).channels
    b = analyze(np.roll(f, (dy, dx), axis=(0, 1)), bank64, mb).channels
    np.testing.assert_allclose(np.roll(a, (dy, dx), axis=(-2, -1)), b, atol=1e-10)


@given(c=st.floats(-50, 50).filter(lambda v: abs(v) > 1e-3), seed=st.integers(0, 2 ** 16))
def test_linearity(bank64, c, seed):
    f = np.random.default_rng(seed).standard_normal((64, 64))
    a = analyze(f, bank64).channels
    b = analyze(c * f, bank64).channels
    np.testing.assert_allclose(b, c * a, atol=1e-10 * abs(c))


def test_dc_goes_to_lowpass(bank64):
    p = analyze(np.full((64, 64), 3.0), bank64)
    assert np.abs(p.channels).max() < 1e-12 and np.abs(p.highpass).max() < 1e-12
    np.testing.assert_allclose(p.lowpass, 3.0)
