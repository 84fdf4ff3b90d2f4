"""Synthetic test corpora: disk scenes, fBm backgrounds and radius sweeps.

Randomness is derived from one integer seed. The disk layout draws from
``SeedSequence([seed, 0])`` and the background from ``SeedSequence([seed, 1])``,
so scenes that differ only in background strength share disks and texture.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

__all__ = [
    "Disk",
    "FbmParams",
    "GroundTruthScene",
    "render_disks",
    "gen_fbm",
    "gen_scene",
    "radius_sweep",
    "max_overlap",
    "NARROW_SWEEP_RADII",
]

SUPERSAMPLE = 4
NARROW_SWEEP_RADII = tuple(np.round(8.0 + 0.2 * np.arange(16), 10))
_LAYOUT_STREAM, _BACKGROUND_STREAM = 0, 1


@dataclass(frozen=True)
class Disk:
    x: float        # column, pixels
    y: float        # row, pixels
    radius: float
    amplitude: float = 1.0


@dataclass(frozen=True)
class FbmParams:
    """Isotropic fBm with power density ``|omega|**(-exponent)``."""

    exponent: float = 3.0
    std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.exponent <= 0:
            raise ValueError(f"fBm exponent must be positive, got {self.exponent}")
        if self.std < 0:
            raise ValueError("fBm std must be non-negative")


@dataclass(frozen=True)
class GroundTruthScene:
    size: int
    disks: tuple = ()
    background: FbmParams = field(default_factory=FbmParams)
    seed: int = 0
    overlap_limit: float = 10.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["disks"] = [asdict(k) for k in self.disks]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> GroundTruthScene:
        return cls(int(d["size"]), tuple(Disk(**k) for k in d["disks"]),
                   FbmParams(**d["background"]), int(d["seed"]), float(d["overlap_limit"]))

    @property
    def centers(self) -> np.ndarray:
        return np.array([(k.x, k.y) for k in self.disks], dtype=float).reshape(-1, 2)

    @property
    def radii(self) -> np.ndarray:
        return np.array([k.radius for k in self.disks], dtype=float)


def render_disks(size: int, disks) -> np.ndarray:
    """Additive anti-aliased disks; each pixel averages a 4 x 4 subsample grid.

    Pixel (row i, col j) covers ``[i - 1/2, i + 1/2] x [j - 1/2, j + 1/2]``.
    """
    img = np.zeros((size, size))
    sub = (np.arange(SUPERSAMPLE) + 0.5) / SUPERSAMPLE - 0.5
    for d in disks:
        r0 = max(int(np.floor(d.y - d.radius)) - 1, 0)
        r1 = min(int(np.ceil(d.y + d.radius)) + 2, size)
        c0 = max(int(np.floor(d.x - d.radius)) - 1, 0)
        c1 = min(int(np.ceil(d.x + d.radius)) + 2, size)
        ys = (np.arange(r0, r1)[:, None] + sub[None, :]).ravel()
        xs = (np.arange(c0, c1)[:, None] + sub[None, :]).ravel()
        inside = ((ys[:, None] - d.y) ** 2 + (xs[None, :] - d.x) ** 2) <= d.radius ** 2
        cover = inside.reshape(r1 - r0, SUPERSAMPLE, c1 - c0, SUPERSAMPLE).mean(axis=(1, 3))
        img[r0:r1, c0:c1] += d.amplitude * cover
    return img


def gen_fbm(params: FbmParams, size: int) -> np.ndarray:
    """Spectral synthesis of an isotropic fBm field with zero mean and target std.

    White Gaussian noise is shaped in the DFT domain by ``|omega|**(-exponent/2)``
    (DC removed), which keeps the spectrum Hermitian so the field is real.
    """
    if params.std == 0:
        return np.zeros((size, size))
    rng = np.random.default_rng(np.random.SeedSequence([params.seed, _BACKGROUND_STREAM]))
    white = np.fft.fft2(rng.standard_normal((size, size)))
    w = np.fft.fftfreq(size)
    rho = np.hypot(w[:, None], w[None, :])
    shape = np.zeros_like(rho)
    nz = rho > 0
    shape[nz] = rho[nz] ** (-params.exponent / 2.0)
    field_ = np.fft.ifft2(white * shape).real
    field_ -= field_.mean()
    return field_ * (params.std / field_.std())


def max_overlap(disks) -> float:
    """Largest ``r_i + r_j - |c_i - c_j|`` over pairs; -inf with fewer than two disks."""
    if len(disks) < 2:
        return -np.inf
    c = np.array([(k.x, k.y) for k in disks])
    r = np.array([k.radius for k in disks])
    d = np.hypot(c[:, None, 0] - c[None, :, 0], c[:, None, 1] - c[None, :, 1])
    ov = r[:, None] + r[None, :] - d
    np.fill_diagonal(ov, -np.inf)
    return float(ov.max())


def gen_scene(seed: int, size: int = 512, n_disks: int = 20, radius_range=(8.0, 40.0),
              overlap_limit: float = 10.0, bg_std: float = 0.0, bg_exponent: float = 3.0,
              amplitude: float = 1.0, max_attempts: int | None = None):
    """Random disk scene plus optional fBm background.

    Radii are uniform in ``radius_range``; centres are uniform such that the disk
    lies inside the image. Each disk is accepted only if it overlaps every
    earlier disk by at most ``overlap_limit`` pixels.

    Returns
    -------
    scene : GroundTruthScene
    image : ndarray, shape (size, size)
    """
    rmin, rmax = map(float, radius_range)
    if not 0 < rmin <= rmax:
        raise ValueError(f"bad radius range {radius_range}")
    if n_disks and 2 * rmax >= size:
        raise ValueError(f"disks of radius {rmax} do not fit in a {size}-pixel image")
    rng = np.random.default_rng(np.random.SeedSequence([seed, _LAYOUT_STREAM]))
    cap = max_attempts if max_attempts is not None else 2000 * max(n_disks, 1)
    disks: list[Disk] = []
    attempts = 0
    while len(disks) < n_disks:
        if attempts >= cap:
            raise RuntimeError(
                f"could not place {n_disks} disks with overlap <= {overlap_limit} px "
                f"in {size}x{size} after {cap} attempts (placed {len(disks)})")
        attempts += 1
        r = rng.uniform(rmin, rmax)
        x, y = rng.uniform(r, size - r, size=2)
        ok = all(r + k.radius - np.hypot(x - k.x, y - k.y) <= overlap_limit for k in disks)
        if ok:
            disks.append(Disk(float(x), float(y), float(r), float(amplitude)))
    bg = FbmParams(bg_exponent, float(bg_std), int(seed))
    scene = GroundTruthScene(int(size), tuple(disks), bg, int(seed), float(overlap_limit))
    image = render_disks(size, disks) + gen_fbm(bg, size)
    return scene, image


def radius_sweep(seed: int = 0, radii=NARROW_SWEEP_RADII, size: int = 128):
    """One disk per image, centred on pixel ``(size/2, size/2)``.

    The sweep is deterministic; ``seed`` is recorded in each scene only.
    """
    scenes, images = [], []
    c = size / 2.0
    for r in radii:
        disk = Disk(c, c, float(r))
        scenes.append(GroundTruthScene(int(size), (disk,), FbmParams(seed=seed), int(seed)))
        images.append(render_disks(size, [disk]))
    return scenes, images
