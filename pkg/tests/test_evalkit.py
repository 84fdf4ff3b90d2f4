import numpy as np
import pytest
from hypothesis import given, strategies as st

from scalesteer.detector import Detection
from scalesteer.evalkit import (brute_force_match, default_log_sigmas, evaluate, jaccard,
                                log_baseline, match, rmse, rows_to_csv, summarize, svg_line_plot)
from scalesteer.simdata import Disk, gen_scene, render_disks

pts = st.lists(st.tuples(st.floats(0, 30), st.floats(0, 30)), min_size=0, max_size=7)


def _det(x, y, r=5.0):
    return Detection(x, y, r, 1.0, 0, 0.0)


def test_identical_sets():
    t = [Disk(1, 2, 3), Disk(10, 10, 4)]
    m = match([_det(1, 2), _det(10, 10)], t)
    assert m.n_tp == 2 and m.total_distance == 0 and jaccard(m) == 1.0


def test_gate_rule():
    m = match([_det(6, 0)], [Disk(0, 0, 5)])
    assert (m.n_tp, m.n_fp, m.n_fn) == (0, 1, 1)
    m = match([_det(5, 0)], [Disk(0, 0, 5)])
    assert m.n_tp == 1


@given(d=pts, t=pts, gate=st.floats(1, 15))
def test_hungarian_equals_brute_force(d, t, gate):
    m = match(np.array(d).reshape(-1, 2), np.array(t).reshape(-1, 2), gate)
    n, total = brute_force_match(np.array(d).reshape(-1, 2), np.array(t).reshape(-1, 2), gate)
    assert m.n_tp == n
    assert m.total_distance == pytest.approx(total, abs=1e-9)


@given(d=pts, t=pts, sx=st.floats(-100, 100), sy=st.floats(-100, 100))
def test_translation_invariance(d, t, sx, sy):
    d, t = np.array(d).reshape(-1, 2), np.array(t).reshape(-1, 2)
    a = match(d, t)
    b = match(d + [sx, sy], t + [sx, sy])
    assert a.n_tp == b.n_tp
    assert a.total_distance == pytest.approx(b.total_distance, abs=1e-6)


@given(d=pts, t=pts)
def test_jaccard_symmetric_and_bounded(d, t):
    d, t = np.array(d).reshape(-1, 2), np.array(t).reshape(-1, 2)
    j1, j2 = jaccard(match(d, t)), jaccard(match(t, d))
    assert 0.0 <= j1 <= 1.0 and j1 == pytest.approx(j2)


def test_jaccard_hand_cases():
    truths = [Disk(20.0 * i, 0, 5) for i in range(10)]
    dets = [_det(20.0 * i, 0) for i in range(8)] + [_det(500, 500), _det(600, 600)]
    assert jaccard(match(dets, truths)) == pytest.approx(8 / 12)
    assert jaccard(match([], truths)) == 0.0
    assert jaccard(match([], [])) == 1.0


def test_rmse_hand_cases():
    t = [Disk(10, 10, 6)]
    d = [_det(13, 14, 7)]
    m = match(d, t)
    assert rmse(m, d, t) == pytest.approx((5.0, 1.0))
    assert rmse(match([], t), [], t) == (None, None)
    # an extra false positive leaves the RMSE alone
    d2 = d + [_det(300, 300, 40)]
    assert rmse(match(d2, t), d2, t) == pytest.approx((5.0, 1.0))


def test_match_rejects_nonfinite():
    with pytest.raises(ValueError):
        match(np.array([[np.nan, 0.0]]), np.zeros((1, 2)))


def test_log_blank_and_single_disk():
    assert log_baseline(np.zeros((128, 128))) == []
    for r in (10.0, 20.0):
        img = render_disks(128, [Disk(64, 64, r)])
        sig = np.asarray(default_log_sigmas())
        d = log_baseline(img, sig)[0]
        assert np.hypot(d.x - 64, d.y - 64) < 1.0
        # nearest sigma step to r / sqrt 2, within one step
        k = int(np.argmin(np.abs(sig - r / np.sqrt(2))))
        assert abs(d.scale - k) <= 1


def test_log_noiseless_scene():
    sc, img = gen_scene(0, 512, 20)
    dets = log_baseline(img, threshold=0.5)
    assert jaccard(match(dets, sc.disks)) >= 0.6


def test_report_and_summary():
    t = [Disk(10, 10, 6)]
    r1 = evaluate([_det(10, 10, 6)], t, "a.png", "m", 12.5, bg_std=0.0)
    r2 = evaluate([], t, "b.png", "m", None, bg_std=2.0)
    text = rows_to_csv([r1, r2])
    lines = text.strip().split("\n")
    assert lines[0] == "image,method,jaccard,rmse_pos,rmse_radius,n_tp,n_fp,n_fn,wall_ms"
    assert lines[2].endswith(",,0,0,1,")
    s = summarize([r1, r2])
    assert [g["bg_std"] for g in s["groups"]] == [0.0, 2.0]
    assert s["groups"][1]["rmse_pos"] is None and s["groups"][0]["jaccard"] == 1.0


def test_svg_plot():
    svg = svg_line_plot({"a": ([0, 1, 2], [1.0, 0.5, 0.2]), "b<": ([0, 2], [0.3, 0.1])},
                        xlabel="x", ylabel="y")
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert "b&lt;" in svg and svg.count("<polyline") == 2
