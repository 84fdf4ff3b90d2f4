"""Spot detection with a scale-steerable multichannel wavelet frame.

Pipeline: analysis with the multiplier-extended frame, per-scale thresholding
and non-maximum suppression of the channel energy, continuous scale refinement
by steering, then ranking. Radii come from a calibration table that maps the
steered log-dilation ``t*`` at scale s to pixels.

With verification on (the default) each spot must also show an intensity
step across its rim. The rim fit picks the reading cycle, drives cross-scale
suppression, and chooses the scale whose steered reading gives the final
radius.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import ndimage

from .calibration import ScaleCalibration, fit_calibration, parabolic_offset, scale_centroid
from .frame import FilterBank, MeyerProfile, WaveletPyramid, analyze, build_filter_bank, max_scales
from .multipliers import (MultiplierBank, TrigMultiplierSpec, argmax_scale, bspline_spec,
                          response_polynomial)

__all__ = [
    "DetectorConfig",
    "Candidate",
    "Detection",
    "energy_map",
    "energy_maps",
    "candidates",
    "refine",
    "detect",
    "rank_measures",
    "suppress_across_scales",
    "edge_contrast",
    "calibrate_steered_radius",
    "steered_radius",
    "default_calibration",
    "calibration_sweep",
    "DEFAULT_CALIBRATION_RADII",
]

RANKINGS = ("response", "contrast", "snr")
THRESHOLD_MODES = ("relative", "global", "absolute")

# geometric sweep spanning two octaves; the shipped table is fit on it
DEFAULT_CALIBRATION_RADII = tuple(np.round(2.0 ** np.linspace(np.log2(6.0), np.log2(24.0), 65), 10))
CALIBRATION_GRID = 256
CALIBRATION_SCALES = 5
_SHIPPED = "calibration_bspline_eps0.125.csv"


@dataclass(frozen=True)
class DetectorConfig:
    """Free parameters of the detector.

    Parameters
    ----------
    spec : TrigMultiplierSpec
        Multiplier family; default is the 9-channel B-spline family.
    scales : (int, int) or None
        Inclusive scale range searched for candidates. None uses every scale.
    n_scales : int or None
        Number of frame scales J; None takes the most the grid allows.
    threshold : float
        tau. In ``relative`` mode a pixel must reach ``tau * max`` of its own
        scale's energy, in ``global`` mode of the maximum over all searched
        scales; in ``absolute`` mode tau is an energy level.
    nms_radius : int
        Half-width of the square suppression window, pixels.
    max_detections : int or None
        Keep at most this many after ranking.
    ranking : {"response", "contrast", "snr"}
    epsilon : float
        Meyer window parameter of the frame.
    verify_level : float
        Edge verification: a detection survives only if the intensity step
        across its estimated rim reaches this fraction of the largest step
        among the candidates. 0 disables the check.
    edge_width : float
        Width in pixels of the inner and outer rim bands used by the check.
    radius_range : (float, float) or None
        Keep only spots whose rim radius lies in this interval, with 5%
        slack. Needs verification on; otherwise the steered radius is
        tested without slack. None accepts any radius.
    """

    spec: TrigMultiplierSpec = field(default_factory=bspline_spec)
    scales: tuple | None = None
    n_scales: int | None = None
    threshold: float = 0.1
    threshold_mode: str = "relative"
    nms_radius: int = 5
    max_detections: int | None = None
    ranking: str = "response"
    epsilon: float = 0.125
    verify_level: float = 0.6
    edge_width: float = 3.0
    radius_range: tuple | None = None

    def __post_init__(self):
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ValueError(f"threshold_mode must be one of {THRESHOLD_MODES}")
        if self.threshold_mode == "absolute":
            if self.threshold < 0:
                raise ValueError("absolute threshold must be non-negative")
        elif not 0.0 <= self.threshold < 1.0:
            raise ValueError(f"threshold must lie in [0, 1), got {self.threshold}")
        if int(self.nms_radius) != self.nms_radius or self.nms_radius < 1:
            raise ValueError(f"nms_radius must be an integer >= 1, got {self.nms_radius}")
        if self.ranking not in RANKINGS:
            raise ValueError(f"ranking must be one of {RANKINGS}, got {self.ranking!r}")
        if not 0.0 <= self.verify_level < 1.0:
            raise ValueError(f"verify_level must lie in [0, 1), got {self.verify_level}")
        if self.edge_width <= 0:
            raise ValueError("edge_width must be positive")
        if self.radius_range is not None:
            lo, hi = self.radius_range
            if not 0 < lo <= hi:
                raise ValueError(f"bad radius_range {self.radius_range}")
        if self.max_detections is not None and self.max_detections < 0:
            raise ValueError("max_detections must be non-negative")
        if self.scales is not None:
            lo, hi = self.scales
            if not 0 <= lo <= hi:
                raise ValueError(f"bad scale range {self.scales}")
            if self.n_scales is not None and hi >= self.n_scales:
                raise ValueError(f"scale range {self.scales} exceeds J = {self.n_scales}")

    def resolve_scales(self, size: int) -> tuple[int, tuple[int, int]]:
        """``(J, (s_min, s_max))`` for an image of side ``size``."""
        J = self.n_scales if self.n_scales is not None else max_scales(size, MeyerProfile(self.epsilon))
        lo, hi = (0, J - 1) if self.scales is None else self.scales
        if hi >= J:
            raise ValueError(f"scale range ({lo}, {hi}) exceeds the {J} scales of a {size}-pixel grid")
        return J, (int(lo), int(hi))


@dataclass(frozen=True)
class Candidate:
    s: int
    row: int
    col: int
    energy: float


@dataclass(frozen=True)
class Detection:
    x: float          # column, pixels
    y: float          # row, pixels
    radius: float
    score: float
    scale: int
    t_star: float
    response: float = 0.0

    def as_row(self) -> tuple:
        return (self.x, self.y, self.radius, self.score, self.scale, self.t_star)


# ---------------------------------------------------------------------------
# steps 1-2: energy and candidates


def energy_map(pyramid: WaveletPyramid, s: int) -> np.ndarray:
    """``E(s, k) = sqrt(sum_n |w_n(s, k)|^2)``."""
    w = pyramid.at_scale(s)
    return np.sqrt(np.sum(np.abs(w) ** 2, axis=0))


def energy_maps(pyramid: WaveletPyramid) -> np.ndarray:
    """Energy of every scale, shape (J, H, W)."""
    return np.sqrt(np.sum(np.abs(pyramid.channels) ** 2, axis=1))


def _periodic_sep(a, b, n):
    d = np.abs(a - b)
    return np.minimum(d, n - d)


def _greedy_nms(order, rows, cols, radius, shape):
    # keep in the given order; drop anything inside a kept window (periodic)
    kept = []
    kr = np.empty(0, dtype=int)
    kc = np.empty(0, dtype=int)
    for i in order:
        if kr.size:
            near = ((_periodic_sep(kr, rows[i], shape[0]) <= radius)
                    & (_periodic_sep(kc, cols[i], shape[1]) <= radius))
            if near.any():
                continue
        kept.append(i)
        kr = np.append(kr, rows[i])
        kc = np.append(kc, cols[i])
    return kept


def candidates(maps, config: DetectorConfig, scales=None) -> list[Candidate]:
    """Thresholded local maxima of each energy map.

    Parameters
    ----------
    maps : ndarray, shape (S, H, W)
        Energy maps of the searched scales.
    config : DetectorConfig
    scales : sequence of int, optional
        Scale index of each map, default ``0..S-1``.

    Returns
    -------
    list of Candidate
        Ordered by descending energy, ties broken row-major (scale, row, col).
        Within one scale, candidates are separated by more than
        ``config.nms_radius`` in the periodic Chebyshev distance.
    """
    maps = np.asarray(maps, dtype=float)
    if maps.ndim == 2:
        maps = maps[None]
    scales = list(range(maps.shape[0])) if scales is None else list(scales)
    R = int(config.nms_radius)
    top = float(maps.max()) if maps.size else 0.0
    out = []
    for E, s in zip(maps, scales):
        if config.threshold_mode == "relative":
            level = config.threshold * E.max()
        elif config.threshold_mode == "global":
            level = config.threshold * top
        else:
            level = config.threshold
        peak = ndimage.maximum_filter(E, size=2 * R + 1, mode="wrap")
        mask = (E == peak) & (E >= level) & (E > 0)
        rows, cols = np.nonzero(mask)
        vals = E[rows, cols]
        order = np.lexsort((cols, rows, -vals))
        for i in _greedy_nms(order, rows, cols, R, E.shape):
            out.append(Candidate(int(s), int(rows[i]), int(cols[i]), float(vals[i])))
    out.sort(key=lambda c: (-c.energy, c.s, c.row, c.col))
    return out


# ---------------------------------------------------------------------------
# step 3: steering refinement


def _subpixel(E, row, col):
    n0, n1 = E.shape
    dy = parabolic_offset(E[(row - 1) % n0, col], E[row, col], E[(row + 1) % n0, col])
    dx = parabolic_offset(E[row, (col - 1) % n1], E[row, col], E[row, (col + 1) % n1])
    return float(np.mod(col + dx, n1)), float(np.mod(row + dy, n0))


def _pyramid_dilation(pyramid: WaveletPyramid) -> float:
    key = pyramid.multiplier_key
    return float(key[1]) if key is not None else 1.0


def _refine_batch(cands, pyramid, spec, calibration, maps):
    if not cands:
        return []
    idx = np.array([pyramid.scale_index(c.s) for c in cands])
    rows = np.array([c.row for c in cands])
    cols = np.array([c.col for c in cands])
    w = pyramid.channels[idx, :, rows, cols].T                 # (n, K)
    t, r = argmax_scale(response_polynomial(w, spec))
    t = np.mod(t + np.log2(_pyramid_dilation(pyramid)), spec.sigma)
    s = np.array([pyramid.scales[i] for i in idx])
    # the 2-octave period exceeds the spread of log2(r) - s at a disk's best
    # scale, so the scale index alone fixes the cycle
    radius = calibration.radius(t, s)
    live = np.any(w != 0, axis=0)
    out = []
    for k, c in enumerate(cands):
        if not live[k]:
            out.append(None)
            continue
        x, y = _subpixel(maps[idx[k]], c.row, c.col)
        out.append(Detection(x, y, float(radius[k]), float(r[k]), int(s[k]), float(t[k]), float(r[k])))
    return out


def refine(candidate: Candidate, pyramid: WaveletPyramid, spec: TrigMultiplierSpec,
           calibration: ScaleCalibration, maps=None) -> Detection | None:
    """Steer the channel vector at a candidate to its best log-dilation.

    A pyramid analyzed (or steered) with the family dilated by ``a`` yields
    ``t*`` relative to ``a``; adding ``log2 a`` refers it back to the
    undilated family, so the result does not depend on ``a``.

    Returns None when every channel is zero at the candidate.
    """
    if maps is None:
        maps = energy_maps(pyramid)
    return _refine_batch([candidate], pyramid, spec, calibration, maps)[0]


def suppress_across_scales(dets, radius: int, shape, key=None) -> list:
    """Greedy cross-scale suppression inside the square window.

    The detection with the larger ``key`` (default: steered response) wins.
    Keys equal to 9 significant digits fall back to the response, then to
    row-major order. Survivors keep that order.
    """
    if not dets:
        return []
    rows = np.array([d.y for d in dets])
    cols = np.array([d.x for d in dets])
    resp = np.array([d.response for d in dets], dtype=float)
    if key is None:
        order = np.lexsort((cols, rows, -resp))
    else:
        # rim radii are binned, so equal keys are common; response breaks the tie
        key = np.asarray(key, dtype=float)
        top = np.max(np.abs(key))
        key = np.round(key / top, 9) if top > 0 else key
        order = np.lexsort((cols, rows, -resp, -key))
    kept = set(_greedy_nms(order, rows, cols, radius, shape))
    return [dets[i] for i in order if i in kept]


# ---------------------------------------------------------------------------
# step 4: ranking


def _patch(img, y, x, half):
    n0, n1 = img.shape
    rr = np.arange(int(np.floor(y)) - half, int(np.floor(y)) + half + 2)
    cc = np.arange(int(np.floor(x)) - half, int(np.floor(x)) + half + 2)
    dist = np.hypot(rr[:, None] - y, cc[None, :] - x)
    return img[np.ix_(rr % n0, cc % n1)], dist


_EDGE_BIN = 0.25
_RANGE_MARGIN = 0.05    # slack on radius_range for rim-fit error
_RIM_TOL = 0.15         # relative rim search around a radius
_REREAD_TOL = 0.05      # reading must agree with the rim fit this closely


def edge_contrast(image, dets, width: float = 3.0, sectors: int = 8,
                  radius_tol: float = 0.15, n_radii: int = 13, return_radius: bool = False):
    """Intensity step across the rim, required in every direction.

    The step is the mean over ``(r - width, r]`` minus the mean over
    ``(r, r + width]`` around the detection's centre (periodic wrap), taken
    separately in ``sectors`` equal angular sectors and summarized by the
    lower quartile. The rim radius is searched within ``radius_tol`` of the
    detection's radius and the best value returned.

    A bright disk of amplitude A with the right centre gives about A in every
    sector. A small ring straddling the edge of a larger spot steps down on
    one side only and scores near 0.

    With ``return_radius`` the best rim radius of each detection is returned
    as a second array.
    """
    img = np.asarray(image, dtype=float)
    n0, n1 = img.shape
    out = np.zeros(len(dets))
    best_r = np.array([d.radius for d in dets], dtype=float)
    # lower quartile across sectors, as np.quantile's linear rule computes it
    pos = 0.25 * (sectors - 1)
    qi, qt = int(np.floor(pos)), pos - np.floor(pos)
    qj = min(qi + 1, sectors - 1)
    for i, d in enumerate(dets):
        r = min(d.radius, n0 / 4.0)
        radii = r * np.linspace(1 - radius_tol, 1 + radius_tol, n_radii)
        half = int(np.ceil(radii[-1] + width)) + 1
        y0, x0 = int(np.floor(d.y)) - half, int(np.floor(d.x)) - half
        dy = np.arange(y0, y0 + 2 * half + 2) - d.y
        dx = np.arange(x0, x0 + 2 * half + 2) - d.x
        if 0 <= y0 and y0 + 2 * half + 2 <= n0 and 0 <= x0 and x0 + 2 * half + 2 <= n1:
            patch = img[y0:y0 + 2 * half + 2, x0:x0 + 2 * half + 2]
        else:
            rows = np.arange(y0, y0 + 2 * half + 2) % n0
            cols = np.arange(x0, x0 + 2 * half + 2) % n1
            patch = img[np.ix_(rows, cols)]
        nb = int(np.ceil((radii[-1] + width) / _EDGE_BIN)) + 2
        # bin k holds distances in ((k-1) h, k h]; cumulative index k+1 ends at k h
        k0 = np.clip(np.round((radii - width) / _EDGE_BIN).astype(int), 0, nb - 1) + 1
        k1 = np.round(radii / _EDGE_BIN).astype(int) + 1
        k2 = np.minimum(np.round((radii + width) / _EDGE_BIN).astype(int) + 1, nb - 1)
        b = np.minimum(np.ceil(np.hypot(dy[:, None], dx[None, :]) / _EDGE_BIN).astype(int), nb - 1)
        # only bins k0.min() .. k2.max()-1 enter the sums
        keep = (b >= k0[0]) & (b < k2[-1])
        yy, xx = np.nonzero(keep)
        ang = np.arctan2(dy[yy], dx[xx])
        sec = np.minimum(((ang + np.pi) / (2 * np.pi) * sectors).astype(int), sectors - 1)
        key = sec * nb + b[yy, xx]
        S = np.bincount(key, patch[yy, xx], sectors * nb).reshape(sectors, nb)
        C = np.bincount(key, minlength=sectors * nb).reshape(sectors, nb).astype(float)
        S = np.concatenate([np.zeros((sectors, 1)), np.cumsum(S, axis=1)], axis=1)
        C = np.concatenate([np.zeros((sectors, 1)), np.cumsum(C, axis=1)], axis=1)
        ci, co = C[:, k1] - C[:, k0], C[:, k2] - C[:, k1]
        if np.any(ci == 0) or np.any(co == 0):
            continue
        step = np.sort((S[:, k1] - S[:, k0]) / ci - (S[:, k2] - S[:, k1]) / co, axis=0)
        a, c = step[qi], step[qj]
        q = c - (c - a) * (1 - qt) if qt >= 0.5 else a + (c - a) * qt
        j = int(np.argmax(q))
        out[i], best_r[i] = float(q[j]), float(radii[j])
    return (out, best_r) if return_radius else out


def _verify(img, dets, calibration, config):
    """Pick the reading cycle whose rim is sharpest; return (dets, rim steps).

    Readings repeat every ``sigma`` octaves, so a detection could equally be
    ``4**k`` times larger at ``sigma = 2``. Neighbouring spots bias the
    coarse scales, and the scale index alone then picks the wrong cycle.
    """
    period = 2.0 ** calibration.period
    lo, hi = config.radius_range or (0.0, np.inf)
    lo, hi = lo * (1 - _RANGE_MARGIN), hi * (1 + _RANGE_MARGIN)
    alts, owner = [], []
    for i, d in enumerate(dets):
        for k in (-1, 0, 1):
            r = d.radius * period ** k
            # other cycles are scored only if their rim search can reach the range
            reach = r * (1 + _RIM_TOL) >= lo and r * (1 - _RIM_TOL) <= hi
            if k == 0 or (1.0 <= r <= img.shape[0] / 4.0 and reach):
                alts.append(replace(d, radius=float(r)))
                owner.append(i)
    e, rim = edge_contrast(img, alts, config.edge_width, radius_tol=_RIM_TOL, return_radius=True)
    owner = np.asarray(owner)
    best_d, best_e, best_r = [], [], []
    for i in range(len(dets)):
        idx = np.nonzero(owner == i)[0]
        j = idx[np.argmax(e[idx])]
        # the range applies to the rim fit, which is sharper than the reading
        if lo <= rim[j] <= hi:
            best_d.append(alts[j])
            best_e.append(float(e[j]))
            best_r.append(float(rim[j]))
    return best_d, np.array(best_e), np.array(best_r)


def _reread(dets, rims, pyramid, spec, calibration, scales):
    """Re-read each radius at the strongest scale that agrees with its rim.

    A reading taken away from the scales the table covers is extrapolated;
    scaled by a cycle it can still pass verification but be off by 15%. The
    rim fit (a few percent) brackets the size; among the scales whose
    reading lands within ``_REREAD_TOL`` of it, the one with the most energy
    at the pixel gives the radius. With no agreeing scale the reading
    nearest the rim is used.
    """
    if not dets:
        return dets
    scales = np.asarray(list(scales))
    idx = np.array([pyramid.scale_index(int(v)) for v in scales])
    n0, n1 = pyramid.channels.shape[-2:]
    rows = np.array([int(round(d.y)) % n0 for d in dets])
    cols = np.array([int(round(d.x)) % n1 for d in dets])
    w = pyramid.channels[idx][:, :, rows, cols]                 # (S, K, n)
    energy = np.sqrt(np.sum(w ** 2, axis=1))                    # (S, n)
    t, _ = argmax_scale(response_polynomial(w.transpose(1, 0, 2).reshape(w.shape[1], -1), spec))
    t = np.mod(t + np.log2(_pyramid_dilation(pyramid)), spec.sigma).reshape(len(scales), -1)
    lr = np.log2(np.asarray(rims, dtype=float))
    est = calibration.radius(t, scales[:, None], hint=lr[None, :] - scales[:, None])
    off = np.abs(np.log2(est) - lr[None, :])
    agree = off <= np.log2(1.0 + _REREAD_TOL)
    pick = np.where(agree.any(axis=0), np.argmax(np.where(agree, energy, -1.0), axis=0),
                    np.argmin(off, axis=0))
    k = np.arange(len(dets))
    return [replace(d, radius=float(est[pick[i], i]), scale=int(scales[pick[i]]),
                    t_star=float(t[pick[i], i])) for i, d in zip(k, dets)]


def rank_measures(image, dets, kind: str) -> np.ndarray:
    """Score of each detection under ``kind``.

    ``contrast`` is mean(disk) - mean(annulus) with the annulus from r to
    1.5 r; ``snr`` divides that by the annulus std. Distances are periodic.
    """
    if kind not in RANKINGS:
        raise ValueError(f"ranking must be one of {RANKINGS}, got {kind!r}")
    if kind == "response":
        return np.array([d.response for d in dets], dtype=float)
    img = np.asarray(image, dtype=float)
    n0 = img.shape[0]
    out = []
    for d in dets:
        patch, dist = _patch(img, d.y, d.x, int(np.ceil(1.5 * min(d.radius, n0 / 4.0))) + 1)
        inner = patch[dist <= d.radius]
        ring = patch[(dist > d.radius) & (dist <= 1.5 * d.radius)]
        if inner.size == 0 or ring.size == 0:
            out.append(0.0)
            continue
        c = inner.mean() - ring.mean()
        if kind == "contrast":
            out.append(float(c))
        else:
            sd = ring.std()
            out.append(float(c / sd) if sd > 0 else (np.inf if c > 0 else 0.0))
    return np.array(out, dtype=float)


# ---------------------------------------------------------------------------
# calibration


def calibration_sweep(radii=DEFAULT_CALIBRATION_RADII, size: int = CALIBRATION_GRID):
    """Centred noiseless disks used to fit radius tables."""
    from .simdata import radius_sweep
    _, images = radius_sweep(0, radii, size)
    return images


def calibrate_steered_radius(images, radii, bank: FilterBank, spec: TrigMultiplierSpec | None = None,
                             centers=None, min_rel_energy: float = 1.0) -> ScaleCalibration:
    """Fit the ``(s, t*) -> radius`` table from centred noiseless disks.

    Each disk contributes the reading at every scale whose energy at the
    centre reaches ``min_rel_energy`` times the largest; 1 keeps only the
    best scale. Readings are log-dilations in [0, sigma).
    """
    if spec is None:
        spec = bspline_spec()
    if not 0 < min_rel_energy <= 1:
        raise ValueError("min_rel_energy must lie in (0, 1]")
    mb = MultiplierBank(spec)
    S, Z, R, C = [], [], [], []
    for i, img in enumerate(images):
        row, col = (bank.size // 2, bank.size // 2) if centers is None else centers[i]
        pyr = analyze(img, bank, mb)
        w = pyr.channels[:, :, int(row), int(col)]
        E = np.sqrt(np.sum(w ** 2, axis=1))
        t, _ = argmax_scale(response_polynomial(w.T, spec))
        cen = float(scale_centroid(E))
        for k in np.nonzero(E >= min_rel_energy * E.max())[0]:
            S.append(int(k)); Z.append(float(t[k])); R.append(float(radii[i])); C.append(cen)
    return fit_calibration("multichannel", float(spec.sigma), S, Z, R, C)


def steered_radius(image, bank: FilterBank, calibration: ScaleCalibration,
                   spec: TrigMultiplierSpec | None = None, center=None):
    """Radius of a spot centred at ``center`` (row, col), read at its best scale.

    Returns (radius, scale, t_star). The reading cycle comes from the scale
    index, as in :func:`detect`.
    """
    if spec is None:
        spec = bspline_spec()
    row, col = (bank.size // 2, bank.size // 2) if center is None else center
    pyr = analyze(image, bank, MultiplierBank(spec))
    w = pyr.channels[:, :, int(row), int(col)]
    E = np.sqrt(np.sum(w ** 2, axis=1))
    k = int(np.argmax(E))
    t, _ = argmax_scale(response_polynomial(w[k][:, None], spec))
    t = float(t[0])
    return float(calibration.radius(t, k)), k, t


@lru_cache(maxsize=8)
def _fit_default(spec: TrigMultiplierSpec, epsilon: float) -> ScaleCalibration:
    bank = build_filter_bank(CALIBRATION_GRID, CALIBRATION_SCALES, MeyerProfile(epsilon))
    return calibrate_steered_radius(calibration_sweep(), DEFAULT_CALIBRATION_RADII, bank, spec)


@lru_cache(maxsize=1)
def _load_shipped() -> ScaleCalibration | None:
    try:
        text = resources.files("scalesteer").joinpath("data", _SHIPPED).read_text()
    except (FileNotFoundError, OSError):
        return None
    return ScaleCalibration.from_csv(text)


def default_calibration(spec: TrigMultiplierSpec | None = None, epsilon: float = 0.125,
                        use_shipped: bool = True) -> ScaleCalibration:
    """Radius table for ``(spec, epsilon)``.

    The B-spline family at epsilon 0.125 loads the table shipped with the
    package; other pairs are fit once per process on the default sweep.
    """
    if spec is None:
        spec = bspline_spec()
    if use_shipped and spec == bspline_spec() and epsilon == 0.125:
        tab = _load_shipped()
        if tab is not None:
            return tab
    return _fit_default(spec, float(epsilon))


# ---------------------------------------------------------------------------
# pipeline


@lru_cache(maxsize=8)
def _bank(size: int, J: int, epsilon: float) -> FilterBank:
    return build_filter_bank(size, J, MeyerProfile(epsilon))


def detect(image, config: DetectorConfig | None = None,
           calibration: ScaleCalibration | None = None) -> list[Detection]:
    """Detect bright round spots.

    Parameters
    ----------
    image : ndarray, shape (N, N)
        Square image with even side, treated as periodic.
    config : DetectorConfig, optional
    calibration : ScaleCalibration, optional
        Defaults to :func:`default_calibration` for the config's spec.

    Returns
    -------
    list of Detection
        Sorted by descending score, ties broken by (row, col).
    """
    if config is None:
        config = DetectorConfig()
    img = np.asarray(image, dtype=float)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise ValueError(f"expected a square 2-D image, got shape {img.shape}")
    if calibration is None:
        calibration = default_calibration(config.spec, config.epsilon)
    J, (lo, hi) = config.resolve_scales(img.shape[0])
    bank = _bank(img.shape[0], J, float(config.epsilon))
    pyr = analyze(img, bank, MultiplierBank(config.spec))
    maps = energy_maps(pyr)
    cands = candidates(maps[lo:hi + 1], config, scales=range(lo, hi + 1))
    # bright spots only: a dark blob never makes the steered response positive
    dets = [d for d in _refine_batch(cands, pyr, config.spec, calibration, maps)
            if d is not None and d.response > 0]
    if config.verify_level > 0 and dets:
        dets, edge, rims = _verify(img, dets, calibration, config)
    if config.verify_level > 0 and dets:
        emax = edge.max()
        keyed = {id(d): (e, r) for d, e, r in zip(dets, edge, rims)}
        dets = suppress_across_scales(dets, config.nms_radius, img.shape, key=edge)
        dets = [d for d in dets if keyed[id(d)][0] > 0 and keyed[id(d)][0] >= config.verify_level * emax]
        dets = _reread(dets, [keyed[id(d)][1] for d in dets], pyr, config.spec, calibration,
                       range(lo, hi + 1))
    elif config.verify_level == 0:
        if config.radius_range is not None:
            lo, hi = config.radius_range
            dets = [d for d in dets if lo <= d.radius <= hi]
        dets = suppress_across_scales(dets, config.nms_radius, img.shape)
    scores = rank_measures(img, dets, config.ranking)
    dets = [replace(d, score=float(sc)) for d, sc in zip(dets, scores)]
    dets.sort(key=lambda d: (-d.score, d.y, d.x))
    if config.max_detections is not None:
        dets = dets[:config.max_detections]
    return dets
