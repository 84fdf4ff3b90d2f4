import numpy as np
import pytest
from hypothesis import given, strategies as st

from scalesteer.simdata import (Disk, FbmParams, GroundTruthScene, gen_fbm, gen_scene,
                                max_overlap, radius_sweep, render_disks)


def test_scene_deterministic():
    a, ia = gen_scene(7, 256, 8, (8, 30), bg_std=2.0)
    b, ib = gen_scene(7, 256, 8, (8, 30), bg_std=2.0)
    assert a == b and np.array_equal(ia, ib)


def test_background_does_not_move_disks():
    a, _ = gen_scene(3, 256, 8, (8, 30), bg_std=0.0)
    b, _ = gen_scene(3, 256, 8, (8, 30), bg_std=5.0)
    assert a.disks == b.disks


def test_blank_scene():
    sc, img = gen_scene(0, 64, 0)
    assert sc.disks == () and not img.any()


@given(seed=st.integers(0, 10 ** 6))
def test_overlap_invariant_brute_force(seed):
    sc, _ = gen_scene(seed, 256, 10, (8, 30), overlap_limit=4.0)
    for i, p in enumerate(sc.disks):
        for q in sc.disks[i + 1:]:
            assert p.radius + q.radius - np.hypot(p.x - q.x, p.y - q.y) <= 4.0 + 1e-9
        assert p.radius <= p.x <= 256 - p.radius and p.radius <= p.y <= 256 - p.radius
    assert max_overlap(sc.disks) <= 4.0 + 1e-9


def test_placement_failure():
    with pytest.raises(RuntimeError, match="could not place"):
        gen_scene(0, 64, 40, (10, 12), overlap_limit=0.0, max_attempts=500)
    with pytest.raises(ValueError):
        gen_scene(0, 64, 1, (10, 40))


@given(r=st.floats(8, 40), x=st.floats(40, 88), y=st.floats(40, 88))
def test_disk_area(r, x, y):
    img = render_disks(128, [Disk(x, y, r)])
    assert img.sum() == pytest.approx(np.pi * r * r, rel=0.005)
    assert img.max() <= 1.0 + 1e-12


def test_fbm_moments_and_slope():
    f = gen_fbm(FbmParams(3.0, 2.0, 5), 256)
    assert f.mean() == pytest.approx(0.0, abs=1e-12)
    assert f.std() == pytest.approx(2.0, rel=1e-12)
    P = np.abs(np.fft.fft2(f)) ** 2
    w = np.fft.fftfreq(256)
    rho = np.hypot(w[:, None], w[None, :])
    bins = np.geomspace(0.02, 0.4, 12)
    idx = np.digitize(rho, bins)
    pr = np.array([P[idx == k].mean() for k in range(1, len(bins))])
    rc = np.sqrt(bins[1:] * bins[:-1])
    slope = np.polyfit(np.log(rc), np.log(pr), 1)[0]
    assert slope == pytest.approx(-3.0, rel=0.05)


def test_fbm_isotropy():
    # spectral power in four angular sectors, averaged over ten 512^2 fields
    w = np.fft.fftfreq(512)
    ang = np.arctan2(w[:, None], w[None, :]) % np.pi
    rho = np.hypot(w[:, None], w[None, :])
    band = (rho > 0.02) & (rho < 0.45)
    sect = np.zeros(4)
    for seed in range(10):
        P = np.abs(np.fft.fft2(gen_fbm(FbmParams(3.0, 1.0, seed), 512))) ** 2
        for k in range(4):
            m = band & (ang >= k * np.pi / 4) & (ang < (k + 1) * np.pi / 4)
            sect[k] += np.mean(P[m] * rho[m] ** 3)     # whiten the power law
    assert np.max(np.abs(sect / sect.mean() - 1.0)) < 0.10


def test_fbm_std_8():
    assert gen_fbm(FbmParams(3.0, 8.0, 1), 512).std() == pytest.approx(8.0, rel=0.01)


def test_fbm_params_validation():
    with pytest.raises(ValueError):
        FbmParams(exponent=0.0)
    with pytest.raises(ValueError):
        FbmParams(std=-1.0)
    assert not gen_fbm(FbmParams(std=0.0), 32).any()


def test_scene_dict_round_trip():
    sc, _ = gen_scene(2, 128, 4, (8, 20), bg_std=1.0)
    assert GroundTruthScene.from_dict(sc.to_dict()) == sc
    assert sc.centers.shape == (4, 2) and sc.radii.shape == (4,)


def test_radius_sweep_matches_renderer():
    scenes, imgs = radius_sweep(radii=(8.0,), size=128)
    assert np.array_equal(imgs[0], render_disks(128, [Disk(64.0, 64.0, 8.0)]))
    assert len(radius_sweep()[1]) == 16


def test_radius_sweep_layout():
    scenes, imgs = radius_sweep(radii=(8.0, 9.0), size=64)
    assert len(imgs) == 2 and scenes[0].disks[0].x == 32.0
    assert imgs[1].sum() > imgs[0].sum()
