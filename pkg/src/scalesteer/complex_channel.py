"""Single complex multiplier ``exp(j omega0 log2(kappa |omega|))`` and its phase.

The cosine and sine parts form an admissible pair, so the complex channel
keeps the frame tight. The phase of a coefficient shifts linearly with the
log-scale of the structure under the window, which gives a radius reading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import ScaleCalibration, fit_calibration, scale_centroid
from .frame import FilterBank, MeyerProfile, analyze

__all__ = [
    "ComplexWaveletSpec",
    "ComplexMultiplier",
    "PolarCoefficientMap",
    "build_complex_wavelet",
    "polar_coefficients",
    "adapted_kappa",
    "calibrate_phase_radius",
    "phase_to_radius",
    "phase_radius",
    "center_readings",
]


@dataclass(frozen=True)
class ComplexWaveletSpec:
    """Parameters of the complex wavelet.

    ``kappa`` only matters through the phase origin ``omega0 * log2(kappa)``
    modulo 2 pi; that origin is canonicalized (rounded to 1e-12 rad) so kappas
    differing by a factor ``2**(2 pi n / omega0)`` evaluate identically.
    ``amplitude`` scales the window in ``build_complex_wavelet``; plots of the
    single wavelet often use ``2**-0.5``, the tight pyramid always uses 1.
    """

    omega0: float = 4.0 * np.pi
    kappa: float = 2.0 ** 5 / np.pi
    window: MeyerProfile = MeyerProfile()
    amplitude: float = 1.0

    def __post_init__(self):
        if self.omega0 <= 0 or self.kappa <= 0:
            raise ValueError("omega0 and kappa must be positive")

    @property
    def cycle(self) -> float:
        """Octaves per phase cycle, ``2 pi / omega0``."""
        return 2.0 * np.pi / self.omega0

    @property
    def phase_origin(self) -> float:
        ph = np.mod(self.omega0 * np.log2(self.kappa), 2.0 * np.pi)
        ph = round(float(ph), 12)
        return 0.0 if ph >= round(2.0 * np.pi, 12) else ph

    def phase(self, rho):
        """``omega0 log2(kappa rho)`` with the canonical origin; 0 at rho = 0."""
        r = np.asarray(rho, dtype=float)
        with np.errstate(divide="ignore"):
            lg = np.where(r > 0, np.log2(np.where(r > 0, r, 1.0)), 0.0)
        return self.phase_origin + self.omega0 * lg


@dataclass(frozen=True)
class ComplexMultiplier:
    """One-channel admissible family for the pyramid, ``|M| = 1`` off the origin."""

    spec: ComplexWaveletSpec = ComplexWaveletSpec()
    dilation: float = 1.0

    @property
    def key(self) -> tuple:
        return (("complex", float(self.spec.omega0), self.spec.phase_origin,
                 float(self.spec.window.epsilon)), float(self.dilation))

    @property
    def is_real(self) -> bool:
        return False

    @property
    def n_channels(self) -> int:
        return 1

    def evaluate(self, rho):
        r = self.dilation * np.asarray(rho, dtype=float)
        return (np.exp(1j * self.spec.phase(r)) * (r > 0))[None]

    def at_scale(self, rho, s: int):
        return self.evaluate(2.0 ** s * np.asarray(rho, dtype=float))


def build_complex_wavelet(spec: ComplexWaveletSpec, rho):
    """Fourier profiles ``(psi_cos, psi_sin)`` at radial frequencies rho."""
    rho = np.asarray(rho, dtype=float)
    h = spec.amplitude * spec.window(rho)
    ph = spec.phase(rho)
    return h * np.cos(ph), h * np.sin(ph)


@dataclass(frozen=True, eq=False)
class PolarCoefficientMap:
    """``amplitude * exp(1j * phase)`` equals the complex coefficient, per scale."""

    scales: tuple
    amplitude: np.ndarray
    phase: np.ndarray

    def coefficients(self) -> np.ndarray:
        return self.amplitude * np.exp(1j * self.phase)


def polar_coefficients(image, bank: FilterBank, spec: ComplexWaveletSpec | None = None,
                       pyramid=None) -> PolarCoefficientMap:
    """Amplitude and phase in [0, 2 pi) of the complex analysis coefficients."""
    if spec is None:
        spec = ComplexWaveletSpec()
    if pyramid is None:
        pyramid = analyze(image, bank, ComplexMultiplier(spec))
    w = pyramid.channels[:, 0]
    amp = np.abs(w)
    ph = np.mod(np.angle(w), 2.0 * np.pi)
    ph = np.where(ph >= 2.0 * np.pi, 0.0, ph)
    return PolarCoefficientMap(pyramid.scales, amp, ph)


def adapted_kappa(beta, spec: ComplexWaveletSpec):
    """``2**(beta / omega0) * kappa``: the kappa whose cosine wavelet best matches."""
    return 2.0 ** (np.asarray(beta, dtype=float) / spec.omega0) * spec.kappa


def center_readings(energy, reading, period, s_allowed=None):
    """Best scale, wrapped reading there, and energy centroid at one pixel.

    ``energy`` and ``reading`` are per-scale sequences at a pixel.
    """
    e = np.asarray(energy, dtype=float)
    idx = np.arange(e.size) if s_allowed is None else np.asarray(s_allowed)
    k = int(idx[np.argmax(e[idx])])
    return k, float(np.mod(reading[k], period)), float(scale_centroid(e))


def calibrate_phase_radius(images, radii, bank: FilterBank, spec: ComplexWaveletSpec | None = None,
                           centers=None) -> ScaleCalibration:
    """Fit the phase -> radius table from centred noiseless disks.

    ``centers`` defaults to the image centre ``(N/2, N/2)`` as (row, col).
    The table stores the phase in octaves (``beta / omega0``) against
    ``log2(radius) - s``; see :mod:`scalesteer.calibration`.
    """
    if spec is None:
        spec = ComplexWaveletSpec()
    mult = ComplexMultiplier(spec)
    s_list, z_list, c_list = [], [], []
    for i, img in enumerate(images):
        row, col = (bank.size // 2, bank.size // 2) if centers is None else centers[i]
        pyr = analyze(img, bank, mult)
        w = pyr.channels[:, 0, int(row), int(col)]
        beta = np.mod(np.angle(w), 2 * np.pi)
        s, z, cen = center_readings(np.abs(w), beta / spec.omega0, spec.cycle)
        s_list.append(s); z_list.append(z); c_list.append(cen)
    return fit_calibration("complex", spec.cycle, s_list, z_list, radii, c_list)


def phase_to_radius(beta, s, table: ScaleCalibration, spec: ComplexWaveletSpec | None = None,
                    centroid=None):
    """Radius in pixels from the wrapped phase at scale s.

    ``centroid`` is the energy-weighted scale centroid at the pixel; it picks
    the phase cycle. Without it the table's per-scale default picks the cycle,
    which is exact when the table spans less than one cycle.
    """
    if spec is None:
        spec = ComplexWaveletSpec()
    hint = None if centroid is None else table.hint(centroid, s)
    return table.radius(np.asarray(beta, dtype=float) / spec.omega0, s, hint)


def phase_radius(image, bank: FilterBank, table: ScaleCalibration,
                 spec: ComplexWaveletSpec | None = None, center=None, use_centroid: bool = False):
    """Radius of a spot centred at ``center`` (row, col) from the complex channel.

    The phase is read at the scale of largest modulus and its cycle is fixed
    by that scale index alone. ``use_centroid`` adds the energy-centroid cue
    (see :func:`phase_to_radius`), which removes most cycle slips on clean
    data. Returns (radius, scale, beta).
    """
    if spec is None:
        spec = ComplexWaveletSpec()
    row, col = (bank.size // 2, bank.size // 2) if center is None else center
    pyr = analyze(image, bank, ComplexMultiplier(spec))
    w = pyr.channels[:, 0, int(row), int(col)]
    k = int(np.argmax(np.abs(w)))
    beta = float(np.mod(np.angle(w[k]), 2 * np.pi))
    cen = float(scale_centroid(np.abs(w))) if use_centroid else None
    return float(phase_to_radius(beta, k, table, spec, cen)), k, beta
