"""Map a cyclic log-scale reading to a radius.

Both radius estimators read a quantity that is periodic in log-scale: the
phase of the complex wavelet (period ``2 pi / omega0`` octaves) or the steered
log-dilation ``t*`` of the multichannel family (period ``sigma`` octaves). The
filters at scale s are dilations of those at scale 0, so the reading depends
only on ``ell = log2(radius) - s``. A table of (ell, unwrapped reading) pairs
measured on noiseless disks is enough for every scale. By default the cycle
is the one that lands inside the log-radius range the table saw at that
scale, so the scale index alone decides it.
When the period is short an optional hint helps: the energy-weighted scale
centroid gives a rough log-radius that picks the cycle.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

__all__ = ["ScaleCalibration", "fit_calibration", "parabolic_offset", "scale_centroid"]


def parabolic_offset(y_prev, y_mid, y_next):
    """Vertex offset in [-0.5, 0.5] of the parabola through three equispaced samples."""
    y_prev, y_mid, y_next = (np.asarray(v, dtype=float) for v in (y_prev, y_mid, y_next))
    denom = y_prev - 2.0 * y_mid + y_next
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.where(denom < 0, 0.5 * (y_prev - y_next) / denom, 0.0)
    return np.clip(off, -0.5, 0.5)


def scale_centroid(energy, axis=0):
    """Energy-weighted mean scale index, ``sum s E_s^2 / sum E_s^2``."""
    e2 = np.asarray(energy, dtype=float) ** 2
    shape = [1] * e2.ndim
    shape[axis] = -1
    s = np.arange(e2.shape[axis]).reshape(shape)
    tot = e2.sum(axis=axis)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(tot > 0, (s * e2).sum(axis=axis) / tot, 0.0)


@dataclass(frozen=True, eq=False)
class ScaleCalibration:
    """Monotone piecewise-linear map from unwrapped reading to ``log2(r) - s``.

    ``reading`` is in octaves (phase divided by omega0, or t*). Outside the
    measured range the map is extended linearly with the least-squares slope.
    """

    kind: str
    period: float
    reading: np.ndarray = field(repr=False)
    ell: np.ndarray = field(repr=False)
    hint_coef: tuple = (0.0, 1.0)
    samples: tuple = field(default=(), repr=False)

    @property
    def slope(self) -> float:
        """Fitted d(reading)/d(log2 r); close to 1 for a covariant estimator."""
        return float(np.polyfit(self.ell, self.reading, 1)[0])

    def _ell_of(self, z):
        z = np.asarray(z, dtype=float)
        inv = 1.0 / self.slope
        lo, hi = self.reading[0], self.reading[-1]
        out = np.interp(z, self.reading, self.ell)
        out = np.where(z < lo, self.ell[0] + (z - lo) * inv, out)
        return np.where(z > hi, self.ell[-1] + (z - hi) * inv, out)

    def log_radius(self, reading, s, hint=None):
        """``log2`` radius for a wrapped reading at scale s.

        ``hint`` is the energy-based estimate of ``log2(r) - s``; the cycle whose
        value lands closest to it wins. Without a hint the cycle landing inside
        :meth:`scale_interval` wins.
        """
        z = np.mod(np.asarray(reading, dtype=float), self.period)
        base = np.floor((self.reading[0] - z) / self.period)
        ks = np.arange(-2, 4)
        cands = self._ell_of(z[..., None] + (base[..., None] + ks) * self.period)
        if hint is None:
            lo, hi = self.scale_interval(s)
            lo, hi = np.asarray(lo)[..., None], np.asarray(hi)[..., None]
            # outside distance first; the midpoint breaks ties inside
            cost = np.maximum(np.maximum(lo - cands, cands - hi), 0.0)
            cost = cost + 1e-6 * np.abs(cands - 0.5 * (lo + hi))
        else:
            cost = np.abs(cands - np.asarray(hint, dtype=float)[..., None])
        pick = np.argmin(cost, axis=-1)
        ell = np.take_along_axis(cands, pick[..., None], axis=-1)[..., 0]
        return np.asarray(s, dtype=float) + ell

    def radius(self, reading, s, hint=None):
        return 2.0 ** self.log_radius(reading, s, hint)

    def scale_interval(self, s):
        """``(lo, hi)`` range of ``log2(r) - s`` the table saw at scale s.

        Scales absent from the table take the range of the nearest calibrated
        scale, which assumes covariance across octaves. With no stored
        samples the whole table range is used.
        """
        s = np.asarray(s, dtype=float)
        if not self.samples:
            return np.full(s.shape, self.ell[0]), np.full(s.shape, self.ell[-1])
        ss = np.array([q[0] for q in self.samples], dtype=float)
        lr = np.log2([q[2] for q in self.samples])
        known = np.unique(ss)
        lo = np.array([lr[ss == k].min() - k for k in known])
        hi = np.array([lr[ss == k].max() - k for k in known])
        near = np.abs(s[..., None] - known).argmin(axis=-1)
        return lo[near], hi[near]

    def hint(self, centroid, s):
        """Rough ``log2(r) - s`` from the scale centroid at the pixel."""
        h0, h1 = self.hint_coef
        return h0 + h1 * np.asarray(centroid, dtype=float) - np.asarray(s, dtype=float)

    def to_csv(self) -> str:
        """Rows (s, beta, radius, centroid); ``beta`` is the wrapped reading in radians."""
        buf = io.StringIO()
        buf.write(f"# kind={self.kind}\n# period={self.period!r}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["s", "beta", "radius", "centroid"])
        for s, z, r, cen in self.samples:
            w.writerow([int(s), repr(float(2 * np.pi * z / self.period)), repr(float(r)),
                        repr(float(cen))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> ScaleCalibration:
        meta = {}
        rows = []
        for line in text.splitlines():
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k] = v
            elif line.strip() and not line.startswith("s,"):
                rows.append([float(v) for v in line.split(",")])
        period = float(meta["period"])
        arr = np.array(rows, dtype=float)
        z = arr[:, 1] * period / (2 * np.pi)
        return fit_calibration(meta["kind"], period, arr[:, 0].astype(int), z, arr[:, 2], arr[:, 3])


def _pool_adjacent_violators(y):
    # non-decreasing least-squares fit
    vals, wts, sizes = [], [], []
    for v in y:
        vals.append(float(v)); wts.append(1.0); sizes.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            w = wts[-2] + wts[-1]
            vals[-2] = (vals[-2] * wts[-2] + vals[-1] * wts[-1]) / w
            wts[-2] = w
            sizes[-2] += sizes[-1]
            del vals[-1], wts[-1], sizes[-1]
    return np.repeat(vals, sizes)


def fit_calibration(kind: str, period: float, scales, readings, radii, centroids) -> ScaleCalibration:
    """Fit the reading -> log-radius table from noiseless calibration disks.

    Parameters
    ----------
    kind : str
        Label stored with the table ("complex" or "multichannel").
    period : float
        Period of the reading in octaves.
    scales, readings, radii, centroids : array_like
        Per disk: scale of the reading, wrapped reading (octaves), true radius
        and the energy-weighted scale centroid at the disk centre.
    """
    s = np.asarray(scales, dtype=int)
    z = np.mod(np.asarray(readings, dtype=float), period)
    r = np.asarray(radii, dtype=float)
    cen = np.asarray(centroids, dtype=float)
    if np.any(r <= 0):
        raise ValueError("calibration radii must be positive")
    ell = np.log2(r) - s
    order = np.lexsort((r, ell))
    ell, zs = ell[order], z[order]
    if ell.size < 3:
        raise ValueError("need at least three calibration disks")
    gaps = np.diff(ell)
    if np.max(gaps) >= 0.5 * period:
        raise ValueError(
            f"calibration sweep too sparse to unwrap: log-radius gap {np.max(gaps):.3g} "
            f"octaves exceeds half the reading period ({0.5 * period:.3g})")
    zu = np.unwrap(zs, period=period)
    zu = _pool_adjacent_violators(zu)
    # strictly increasing for interpolation; ties keep the mean log-radius
    uz, inv = np.unique(zu, return_inverse=True)
    uell = np.bincount(inv, weights=ell) / np.bincount(inv)
    if uz.size < 2:
        raise ValueError("calibration readings do not vary with radius")
    samples = tuple(zip(s[order], zs, r[order], cen[order]))
    if np.ptp(cen) > 0:
        h1, h0 = np.polyfit(cen, np.log2(r), 1)
    else:
        h1, h0 = 0.0, float(np.mean(np.log2(r)))
    return ScaleCalibration(kind, float(period), uz, uell, (float(h0), float(h1)), samples)
