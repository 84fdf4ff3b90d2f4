"""Meyer-type radial tight wavelet frame on the discrete 2-D torus.

The frame is undecimated: every scale keeps the full image grid, and analysis
and synthesis are pointwise products in the DFT domain. Two residual masks
(lowpass below the coarsest band, highpass above the finest one) close the
partition of unity so the transform is exactly tight on an N x N grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "eval_G",
    "MeyerProfile",
    "FilterBank",
    "WaveletPyramid",
    "build_filter_bank",
    "frequency_grid",
    "analyze",
    "synthesize",
    "max_scales",
]

_G_SCALE = 35.0 * np.pi / 64.0


def eval_G(gamma):
    """Smooth monotone step from 0 (gamma < -1) to pi/2 (gamma >= 1).

    The middle piece is a degree-7 polynomial with three vanishing derivatives
    at both ends, and ``G(gamma) + G(-gamma) = pi/2``.
    """
    g = np.asarray(gamma, dtype=float)
    g2 = g * g
    poly = _G_SCALE * (g * (1.0 + g2 * (-1.0 + g2 * (0.6 - g2 / 7.0))) + 16.0 / 35.0)
    out = np.where(g < -1.0, 0.0, np.where(g >= 1.0, np.pi / 2, poly))
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class MeyerProfile:
    """Radial Fourier window ``h_eps`` supported on ``[4**(-1-eps) pi, pi]``.

    Parameters
    ----------
    epsilon : float
        Smoothing parameter in (0, 1]. Small values approach the indicator of
        ``[pi/4, pi]``; larger values give smoother, better localized atoms.
    """

    epsilon: float = 0.125

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")

    @property
    def support(self) -> tuple[float, float]:
        return (np.pi * 4.0 ** (-1.0 - self.epsilon), np.pi)

    def H(self, x):
        e = self.epsilon
        return eval_G((x + 1.0) / e) - np.pi / 2 + eval_G((x - 1.0) / e)

    def log_argument(self, rho):
        """Octave coordinate fed to ``H``; dilation by 2 shifts it by exactly 1."""
        return (1.0 + self.epsilon) + np.log2(rho) - np.log2(np.pi)

    def __call__(self, rho):
        r = np.asarray(rho, dtype=float)
        if np.any(r < 0):
            raise ValueError("rho must be non-negative")
        out = np.zeros(r.shape)
        lo, hi = self.support
        inside = (r > lo) & (r < hi)
        if np.any(inside):
            x = self.log_argument(r[inside])
            out[inside] = np.cos(self.H(x)) / np.sqrt(2.0)
        if out.ndim == 0:
            return float(out)
        return out

    def octave_sum(self, rho, q_range=None):
        """``sum_q h(2**q rho)**2`` over every octave that meets the support."""
        r = np.asarray(rho, dtype=float)
        if q_range is None:
            lo, hi = self.support
            rmin = np.min(r[r > 0]) if np.any(r > 0) else 1.0
            rmax = max(np.max(r), 1e-300)
            q_range = range(int(np.floor(np.log2(lo / rmax))) - 1,
                            int(np.ceil(np.log2(hi / rmin))) + 2)
        return sum(self(2.0 ** q * r) ** 2 for q in q_range)


def frequency_grid(n: int, p_norm=2):
    """Radial frequency on the ``fft2`` grid of an n x n image.

    Returns ``(rho_p, rho_2)``: the radius in the requested l_p norm (used by
    the window) and the Euclidean radius (used by radial multipliers).
    """
    w = 2.0 * np.pi * np.fft.fftfreq(n)
    wy, wx = np.meshgrid(w, w, indexing="ij")
    rho2 = np.sqrt(wx * wx + wy * wy)
    if p_norm == 2:
        rhop = rho2
    elif p_norm in (np.inf, "inf"):
        rhop = np.maximum(np.abs(wx), np.abs(wy))
    else:
        raise ValueError(f"p_norm must be 2 or inf, got {p_norm!r}")
    return rhop, rho2


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Radial bandpass masks ``h(2**s rho)`` for s = 0..J-1 plus residuals.

    ``bandpass`` has shape (J, N, N) on the unshifted ``fft2`` grid. ``rho``
    holds the Euclidean frequency radius, needed to evaluate multipliers on
    the same grid.
    """

    size: int
    n_scales: int
    profile: MeyerProfile
    p_norm: object
    bandpass: np.ndarray = field(repr=False)
    lowpass: np.ndarray = field(repr=False)
    highpass: np.ndarray = field(repr=False)
    rho: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.size, self.size)

    @property
    def key(self) -> tuple:
        p = "inf" if self.p_norm in (np.inf, "inf") else int(self.p_norm)
        return ("meyer", self.size, self.n_scales, float(self.profile.epsilon), p)

    def unity_defect(self) -> float:
        total = self.lowpass ** 2 + self.highpass ** 2 + np.sum(self.bandpass ** 2, axis=0)
        return float(np.max(np.abs(total - 1.0)))


def max_scales(size: int, profile: MeyerProfile | None = None) -> int:
    """Largest J accepted by :func:`build_filter_bank` for this grid."""
    if profile is None:
        profile = MeyerProfile()
    lo, _ = profile.support
    J = 1
    while lo / 2.0 ** J > 2.0 * np.pi / size:
        J += 1
    return J


def build_filter_bank(size: int, n_scales: int, profile: MeyerProfile | None = None,
                      p_norm=2) -> FilterBank:
    """Discretize the isotropic Meyer frame on an ``size x size`` DFT grid.

    Parameters
    ----------
    size : int
        Image side length in pixels; even and at least 32.
    n_scales : int
        Number of dyadic bandpass scales J. The coarsest band's lower support
        edge ``4**(-1-eps) pi / 2**(J-1)`` must stay above the grid spacing
        ``2 pi / size``.
    profile : MeyerProfile, optional
        Radial window, default ``MeyerProfile(0.125)``.
    p_norm : {2, inf}
        Norm used for the radial argument of the window.

    Returns
    -------
    FilterBank
        Masks whose squares sum to one at every grid point.
    """
    if profile is None:
        profile = MeyerProfile()
    size = int(size)
    if size < 32 or size % 2:
        raise ValueError(f"grid size must be even and >= 32, got {size}")
    if n_scales < 1:
        raise ValueError("need at least one scale")
    lo, _ = profile.support
    if lo / 2.0 ** (n_scales - 1) <= 2.0 * np.pi / size:
        raise ValueError(
            f"{n_scales} scales too many for a {size}-point grid: coarsest band "
            f"edge {lo / 2.0 ** (n_scales - 1):.4g} rad/px is below the frequency "
            f"resolution {2 * np.pi / size:.4g}")

    rhop, rho2 = frequency_grid(size, p_norm)
    bands = np.stack([profile(2.0 ** s * rhop) for s in range(n_scales)])

    # Lowpass collects every octave below the coarsest band: sum_{q>=J} h(2^q rho)^2.
    lp2 = np.zeros_like(rhop)
    nz = rhop > 0
    q_top = int(np.ceil(np.log2(np.pi / np.min(rhop[nz])))) + 1
    for q in range(n_scales, q_top + 1):
        lp2 += profile(2.0 ** q * rhop) ** 2
    lp2[~nz] = 1.0
    lowpass = np.sqrt(np.clip(lp2, 0.0, 1.0))
    highpass = np.sqrt(np.clip(1.0 - lp2 - np.sum(bands ** 2, axis=0), 0.0, 1.0))

    return FilterBank(size, int(n_scales), profile, p_norm, _frozen(bands),
                      _frozen(lowpass), _frozen(highpass), _frozen(rho2))


@dataclass(frozen=True, eq=False)
class WaveletPyramid:
    """Undecimated coefficients of one image.

    ``channels[i, n]`` is the raster of scale ``scales[i]`` and multiplier
    channel ``n``. Rasters are real when every analysis filter is real and
    radially symmetric, complex otherwise.
    """

    scales: tuple
    channels: np.ndarray = field(repr=False)
    lowpass: np.ndarray = field(repr=False)
    highpass: np.ndarray = field(repr=False)
    bank_key: tuple = ()
    multiplier_key: tuple | None = None

    @property
    def n_channels(self) -> int:
        return self.channels.shape[1]

    def scale_index(self, s: int) -> int:
        try:
            return self.scales.index(s)
        except ValueError:
            raise KeyError(f"scale {s} not in pyramid (have {self.scales})") from None

    def at_scale(self, s: int) -> np.ndarray:
        return self.channels[self.scale_index(s)]

    def energy(self) -> float:
        """Sum over rasters of the mean squared modulus."""
        tot = np.mean(np.abs(self.lowpass) ** 2) + np.mean(np.abs(self.highpass) ** 2)
        return float(tot + np.sum(np.mean(np.abs(self.channels) ** 2, axis=(-2, -1))))

    def with_channels(self, channels, multiplier_key) -> WaveletPyramid:
        return WaveletPyramid(self.scales, _frozen(channels), self.lowpass,
                              self.highpass, self.bank_key, multiplier_key)


_FILTER_CACHE: dict = {}    # last (bank, family) only; 512^2 x 9 x 6 is ~110 MB


def _scale_filters(bank: FilterBank, multipliers, s: int) -> np.ndarray:
    """Analysis filters of scale s, shape (n_channels, N, N)."""
    mask = bank.bandpass[s]
    if multipliers is None:
        return mask[None]
    key = (bank.key, multipliers.key, s)
    filt = _FILTER_CACHE.get(key)
    if filt is None:
        if any(k[:2] != key[:2] for k in _FILTER_CACHE):
            _FILTER_CACHE.clear()
        filt = mask[None] * multipliers.at_scale(bank.rho, s)
        filt.flags.writeable = False
        _FILTER_CACHE[key] = filt
    return filt


def _is_real_family(multipliers) -> bool:
    return multipliers is None or multipliers.is_real


def analyze(image, bank: FilterBank, multipliers=None) -> WaveletPyramid:
    """Tight-frame analysis of a real image.

    Channel ``(s, n)`` is the inverse DFT of ``DFT(image) * mask_s * conj(M_n)``
    where ``M_n`` is evaluated at ``2**s`` times the grid frequency, so each
    scale carries a dilated copy of the same multiplier family.

    Parameters
    ----------
    image : ndarray, shape (N, N)
    bank : FilterBank
    multipliers : MultiplierBank or ComplexMultiplier, optional
        Admissible family extending the frame. Without it each scale has a
        single channel.
    """
    f = np.asarray(image, dtype=float)
    if f.shape != bank.shape:
        raise ValueError(f"image shape {f.shape} does not match bank {bank.shape}")
    real = _is_real_family(multipliers)
    F = np.fft.fft2(f)
    chans = []
    for s in range(bank.n_scales):
        filt = _scale_filters(bank, multipliers, s)
        out = np.fft.ifft2(F[None] * np.conj(filt), axes=(-2, -1))
        chans.append(out.real if real else out)
    lowpass = np.fft.ifft2(F * bank.lowpass).real
    highpass = np.fft.ifft2(F * bank.highpass).real
    mkey = None if multipliers is None else multipliers.key
    return WaveletPyramid(tuple(range(bank.n_scales)), _frozen(np.stack(chans)),
                          _frozen(lowpass), _frozen(highpass), bank.key, mkey)


def synthesize(pyramid: WaveletPyramid, bank: FilterBank, multipliers=None) -> np.ndarray:
    """Self-dual reconstruction; inverts ``analyze`` for a matching bank."""
    mkey = None if multipliers is None else multipliers.key
    if pyramid.bank_key != bank.key:
        raise ValueError(f"pyramid built with bank {pyramid.bank_key}, got {bank.key}")
    if pyramid.multiplier_key != mkey:
        raise ValueError(f"pyramid built with multipliers {pyramid.multiplier_key}, got {mkey}")
    acc = np.fft.fft2(pyramid.lowpass) * bank.lowpass
    acc += np.fft.fft2(pyramid.highpass) * bank.highpass
    for i, s in enumerate(pyramid.scales):
        filt = _scale_filters(bank, multipliers, s)
        W = np.fft.fft2(pyramid.channels[i], axes=(-2, -1))
        acc += np.sum(W * filt, axis=0)
    return np.fft.ifft2(acc).real
