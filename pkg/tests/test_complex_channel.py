import numpy as np
import pytest
from hypothesis import given, strategies as st

from scalesteer.complex_channel import (ComplexMultiplier, ComplexWaveletSpec, adapted_kappa,
                                        build_complex_wavelet, calibrate_phase_radius,
                                        phase_radius, phase_to_radius, polar_coefficients)
from scalesteer.frame import analyze, build_filter_bank, synthesize
from scalesteer.multipliers import admissibility_defect
from scalesteer.simdata import NARROW_SWEEP_RADII, radius_sweep

SPEC = ComplexWaveletSpec()


def test_profile_at_phase_zero():
    # |omega| = 1/kappa lies outside the window for the default kappa; check the phase
    ph = SPEC.phase(np.array([1.0 / SPEC.kappa]))[0]
    assert abs(np.exp(1j * ph) - 1.0) < 1e-9
    spec = ComplexWaveletSpec(kappa=1.0 / 1.5)
    c, s = build_complex_wavelet(spec, np.array([1.5]))
    assert c[0] == pytest.approx(spec.window(1.5)) and s[0] == pytest.approx(0.0, abs=1e-12)


def test_squared_sum_is_window():
    rho = np.linspace(0, np.pi, 5001)
    c, s = build_complex_wavelet(SPEC, rho)
    np.testing.assert_allclose(c ** 2 + s ** 2, SPEC.window(rho) ** 2, atol=1e-14)


@given(n=st.integers(-3, 3))
def test_kappa_cyclicity(n):
    other = ComplexWaveletSpec(kappa=SPEC.kappa * 2.0 ** (2 * np.pi * n / SPEC.omega0))
    rho = np.geomspace(0.1, np.pi, 257)
    a, b = build_complex_wavelet(SPEC, rho), build_complex_wavelet(other, rho)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_complex_channel_keeps_frame_tight(bank64, rng):
    w = 2 * np.pi * np.fft.fftfreq(64)
    assert admissibility_defect(ComplexMultiplier(SPEC), np.hypot(w[:, None], w[None])) < 1e-12
    f = rng.standard_normal((64, 64))
    p = analyze(f, bank64, ComplexMultiplier(SPEC))
    assert np.iscomplexobj(p.channels)
    g = synthesize(p, bank64, ComplexMultiplier(SPEC))
    assert np.linalg.norm(g - f) / np.linalg.norm(f) < 1e-10
    assert abs(p.energy() - np.mean(f ** 2)) < 1e-10 * np.mean(f ** 2)


def test_polar_lossless_and_modulus_invariance(bank64, rng):
    f = rng.standard_normal((64, 64))
    pm = polar_coefficients(f, bank64, SPEC)
    direct = analyze(f, bank64, ComplexMultiplier(SPEC)).channels[:, 0]
    np.testing.assert_allclose(pm.coefficients(), direct, atol=1e-12)
    assert np.all(pm.amplitude >= 0) and np.all((pm.phase >= 0) & (pm.phase < 2 * np.pi))
    other = polar_coefficients(f, bank64, ComplexWaveletSpec(kappa=3.3))
    assert np.max(np.abs(other.amplitude - pm.amplitude)) < 1e-10


def test_adapted_kappa():
    assert adapted_kappa(0.0, SPEC) == SPEC.kappa
    top = adapted_kappa(np.nextafter(2 * np.pi, 0), SPEC)
    assert top < SPEC.kappa * 2 ** (2 * np.pi / SPEC.omega0)
    assert adapted_kappa(SPEC.omega0 * 0.1, SPEC) == pytest.approx(SPEC.kappa * 2 ** 0.1)


def _phase_at_center(img, bank, s):
    pm = polar_coefficients(img, bank, SPEC)
    c = bank.size // 2
    return pm.phase[s, c, c]


@pytest.mark.parametrize("r,s", [(4.5, 1), (9.0, 2)])
def test_octave_covariance(r, s):
    # exact in the continuum; on the grid it holds away from the coarsest band
    bank = build_filter_bank(512, 6)
    _, (a, b) = radius_sweep(radii=(r, 2 * r), size=512)
    d = _phase_at_center(a, bank, s) - _phase_at_center(b, bank, s + 1)
    assert abs(np.angle(np.exp(1j * d))) < 0.05


@given(t=st.floats(0, 0.499), seed=st.integers(0, 1000))
def test_multiplier_dilation_shifts_phase(bank64, t, seed):
    # scaling the complex multiplier by 2^t turns every coefficient by -omega0 t
    f = np.random.default_rng(seed).standard_normal((64, 64))
    a = analyze(f, bank64, ComplexMultiplier(SPEC)).channels
    b = analyze(f, bank64, ComplexMultiplier(SPEC, 2.0 ** t)).channels
    np.testing.assert_allclose(b, a * np.exp(-1j * SPEC.omega0 * t), atol=1e-10)


def test_disk_phase_monotone_in_radius():
    # the window does not dilate with the disk, so the phase moves monotonically
    # but not at the rate omega0; the radius map is calibrated for this reason
    bank = build_filter_bank(256, 5)
    ts = np.linspace(0, SPEC.cycle, 11)
    _, imgs = radius_sweep(radii=tuple(10 * 2 ** ts), size=256)
    ph = np.unwrap([_phase_at_center(im, bank, 2) for im in imgs])
    assert np.all(np.diff(ph) > 0)


@pytest.fixture(scope="module")
def sweep_table():
    bank = build_filter_bank(128, 4)
    _, imgs = radius_sweep(radii=NARROW_SWEEP_RADII, size=128)
    return bank, imgs, calibrate_phase_radius(imgs, NARROW_SWEEP_RADII, bank)


def test_closed_loop_on_sweep(sweep_table):
    bank, imgs, tab = sweep_table
    est = np.array([phase_radius(im, bank, tab)[0] for im in imgs])
    assert np.mean(np.abs(est - NARROW_SWEEP_RADII)) < 0.25
    assert 0.5 < tab.slope < 2.0


def test_phase_to_radius_matches_table(sweep_table):
    bank, imgs, tab = sweep_table
    s, z, r, _ = tab.samples[3]
    assert phase_to_radius(z * SPEC.omega0, s, tab) == pytest.approx(r, rel=1e-9)


def test_sparse_sweep_rejected():
    bank = build_filter_bank(128, 4)
    radii = (8.0, 12.0, 17.0)
    _, imgs = radius_sweep(radii=radii, size=128)
    with pytest.raises(ValueError, match="sparse"):
        calibrate_phase_radius(imgs, radii, bank)
