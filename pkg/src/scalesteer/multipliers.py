"""Admissible radial Fourier multipliers whose span is closed under dilation.

A multiplier family is a set of functions of ``x = log2 |omega|``; dilating
the frequency by ``a`` shifts ``x`` by ``log2 a``. For trigonometric families
that shift acts on the channel vector as a fixed matrix, so coefficients of a
dilated family are a matrix product away from the ones already computed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .frame import MeyerProfile

__all__ = [
    "TrigMultiplierSpec",
    "QuadratureSpec",
    "MultiplierBank",
    "make_spec",
    "bspline_spec",
    "sincos_spec",
    "eval_bank",
    "admissibility_defect",
    "SteeringOperator",
    "steering_matrix",
    "steer_coefficients",
    "steer_pyramid",
    "ResponsePolynomial",
    "response_polynomial",
    "argmax_scale",
    "PseudoDilation",
    "pseudo_dilate",
    "quality_metric",
    "quality_sweep",
    "DEFAULT_EPS_PRIME",
]

DEFAULT_EPS_PRIME = 0.45
_NORM_TOL = 1e-12


def _log2_abs(rho):
    r = np.asarray(rho, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(r > 0, np.log2(np.where(r > 0, r, 1.0)), 0.0), r > 0


@dataclass(frozen=True)
class TrigMultiplierSpec:
    """Channels ``M_n(omega) = m(log2(rho_n |omega|))``, n = 1..n_max.

    ``m(x) = alpha_0 / sqrt(n_max) + sum_l sqrt(2/n_max) alpha_l cos(2 pi l x / sigma)``
    and ``rho_n = 2**(sigma n / n_max)``: every channel is the same profile
    shifted by ``sigma / n_max`` octaves.
    """

    alpha: tuple
    sigma: float = 2.0
    n_max: int = 9

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if len(self.alpha) == 0:
            raise ValueError("alpha must have at least one entry")
        problems = []
        norm2 = float(np.sum(np.square(self.alpha)))
        if abs(norm2 - 1.0) > _NORM_TOL:
            problems.append(f"sum(alpha**2) = {norm2!r} != 1")
        if self.n_max < 2 * self.l_max + 1:
            problems.append(f"n_max = {self.n_max} < 2*l_max+1 = {2 * self.l_max + 1}")
        if problems:
            raise ValueError("inadmissible multiplier spec: " + "; ".join(problems))

    @property
    def l_max(self) -> int:
        return len(self.alpha) - 1

    @property
    def n_channels(self) -> int:
        return self.n_max

    @property
    def key(self) -> tuple:
        return ("trig", self.alpha, float(self.sigma), int(self.n_max))

    @property
    def rho_n(self) -> np.ndarray:
        n = np.arange(1, self.n_max + 1)
        return 2.0 ** (self.sigma * n / self.n_max)

    @property
    def shifts(self) -> np.ndarray:
        """``log2 rho_n``: octave offset of each channel."""
        return self.sigma * np.arange(1, self.n_max + 1) / self.n_max

    def profile(self, x):
        """The generating trigonometric polynomial ``m`` at octave coordinate x."""
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.alpha[0] / np.sqrt(self.n_max))
        c = np.sqrt(2.0 / self.n_max)
        for l in range(1, self.l_max + 1):
            out = out + c * self.alpha[l] * np.cos(2.0 * np.pi * l * x / self.sigma)
        return out

    def channels(self, x):
        """All channel values at octave coordinate(s) x, shape (n_max, *x.shape)."""
        x = np.asarray(x, dtype=float)
        return np.stack([self.profile(x + d) for d in self.shifts])

    # steering factorization  M(a omega) = U D_a B(omega)

    def harmonics(self) -> np.ndarray:
        """``l = -l_max..l_max``."""
        return np.arange(-self.l_max, self.l_max + 1)

    def steering_basis(self) -> np.ndarray:
        l = self.harmonics()
        phase = 2.0 * np.pi * np.outer(self.shifts, l) / self.sigma
        return np.exp(1j * phase) / np.sqrt(self.n_max)

    def dilation_phases(self, a) -> np.ndarray:
        return np.exp(2j * np.pi * self.harmonics() * np.log2(a) / self.sigma)

    def harmonic_weights(self, x) -> np.ndarray:
        """The vector B at octave coordinate(s) x, shape (2 l_max + 1, *x.shape)."""
        x = np.asarray(x, dtype=float)
        l = self.harmonics()
        b = np.array([self.alpha[abs(k)] / (np.sqrt(2.0) if k else 1.0) for k in l])
        ph = np.exp(2j * np.pi * np.multiply.outer(l, x) / self.sigma)
        return b.reshape((-1,) + (1,) * x.ndim) * ph

    def steering_matrix(self, a: float, a_prime: float) -> np.ndarray:
        return _trig_steering(self, float(a_prime) / float(a))


@dataclass(frozen=True)
class QuadratureSpec:
    """The family ``{alpha_0} U {alpha_l cos(2 pi l x/sigma), alpha_l sin(2 pi l x/sigma)}``.

    With ``alpha = (0, 1)`` this is the sine/cosine pair. Zero-weight
    harmonics are dropped so the pair really has two channels.
    """

    alpha: tuple
    sigma: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        norm2 = float(np.sum(np.square(self.alpha)))
        if abs(norm2 - 1.0) > _NORM_TOL:
            raise ValueError(f"inadmissible multiplier spec: sum(alpha**2) = {norm2!r} != 1")

    @property
    def l_max(self) -> int:
        return len(self.alpha) - 1

    @property
    def _layout(self):
        out = [(0, "c")] if self.alpha[0] != 0 else []
        for l in range(1, self.l_max + 1):
            if self.alpha[l] != 0:
                out += [(l, "c"), (l, "s")]
        return out

    @property
    def n_channels(self) -> int:
        return len(self._layout)

    @property
    def key(self) -> tuple:
        return ("quadrature", self.alpha, float(self.sigma))

    def channels(self, x):
        x = np.asarray(x, dtype=float)
        rows = []
        for l, kind in self._layout:
            arg = 2.0 * np.pi * l * x / self.sigma
            rows.append(self.alpha[l] * (np.cos(arg) if kind == "c" else np.sin(arg)))
        return np.stack(rows)

    def steering_matrix(self, a: float, a_prime: float) -> np.ndarray:
        # angle-addition: every harmonic pair rotates by its own phase
        t = np.log2(float(a_prime) / float(a))
        lay = self._layout
        T = np.eye(len(lay))
        i = 0
        while i < len(lay):
            l, _ = lay[i]
            if l == 0:
                i += 1
                continue
            phi = 2.0 * np.pi * l * t / self.sigma
            c, s = np.cos(phi), np.sin(phi)
            T[i:i + 2, i:i + 2] = [[c, -s], [s, c]]
            i += 2
        return T


def make_spec(alpha, sigma: float = 2.0, n_max: int | None = None) -> TrigMultiplierSpec:
    """Validated trigonometric multiplier spec; ``n_max`` defaults to ``2 l_max + 1``."""
    if n_max is None:
        n_max = 2 * len(alpha) - 1
    return TrigMultiplierSpec(tuple(alpha), sigma, int(n_max))


def bspline_spec() -> TrigMultiplierSpec:
    """Nine-channel family from cubic B-spline samples, sigma = 2."""
    r2 = np.sqrt(2.0)
    alpha = np.sqrt(4685.0) / 14055.0 * np.array([125.0, 101 * r2, 53 * r2, 16 * r2, 2 * r2])
    return TrigMultiplierSpec(tuple(alpha), 2.0, 9)


def sincos_spec(sigma: float = 2.0) -> QuadratureSpec:
    return QuadratureSpec((0.0, 1.0), sigma)


@dataclass(frozen=True)
class MultiplierBank:
    """A multiplier family dilated by ``dilation``: channel n is ``M_n(dilation * omega)``.

    ``at_scale`` adds the per-scale factor ``2**s`` used by the pyramid.
    """

    spec: object
    dilation: float = 1.0

    def __post_init__(self):
        if not self.dilation > 0:
            raise ValueError(f"dilation must be positive, got {self.dilation}")

    @property
    def key(self) -> tuple:
        return (self.spec.key, float(self.dilation))

    @property
    def is_real(self) -> bool:
        return True

    @property
    def n_channels(self) -> int:
        return self.spec.n_channels

    def evaluate(self, rho):
        x, nz = _log2_abs(self.dilation * np.asarray(rho, dtype=float))
        return self.spec.channels(x) * nz

    def at_scale(self, rho, s: int):
        return self.evaluate(2.0 ** s * np.asarray(rho, dtype=float))


def eval_bank(spec, frequencies) -> np.ndarray:
    """Channel values ``M_n(|omega|)`` at radial frequencies; zero at the origin."""
    return MultiplierBank(spec).evaluate(np.abs(np.asarray(frequencies, dtype=float)))


def admissibility_defect(spec, grid) -> float:
    """``sup |sum_n |M_n|^2 - 1|`` over the non-zero points of a radial grid."""
    rho = np.abs(np.asarray(grid, dtype=float))
    if hasattr(spec, "evaluate"):
        vals = spec.evaluate(rho)
    elif hasattr(spec, "channels"):
        vals = eval_bank(spec, rho)
    else:
        vals = np.asarray(spec(rho))
    total = np.sum(np.abs(vals) ** 2, axis=0)
    nz = rho > 0
    return float(np.max(np.abs(total[nz] - 1.0))) if np.any(nz) else 0.0


# ---------------------------------------------------------------------------
# steering


@dataclass(frozen=True, eq=False)
class SteeringOperator:
    """``M(a omega) = U D_a B(omega)`` for a trigonometric spec."""

    spec: TrigMultiplierSpec
    U: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        U = self.spec.steering_basis()
        U.setflags(write=False)
        object.__setattr__(self, "U", U)

    def D(self, a) -> np.ndarray:
        return np.diag(self.spec.dilation_phases(a))

    def B(self, rho):
        x, _ = _log2_abs(rho)
        return self.spec.harmonic_weights(x)

    def matrix(self, a: float, a_prime: float) -> np.ndarray:
        return _trig_steering(self.spec, float(a_prime) / float(a))


@lru_cache(maxsize=256)
def _trig_steering(spec: TrigMultiplierSpec, ratio: float) -> np.ndarray:
    U = spec.steering_basis()
    T = (U * spec.dilation_phases(ratio)) @ U.conj().T
    resid = np.max(np.abs(T.imag))
    if resid > 1e-10:
        raise FloatingPointError(f"steering matrix not real (|Im| = {resid:.2e})")
    T = np.ascontiguousarray(T.real)
    T.setflags(write=False)
    return T


def steering_matrix(spec, a: float, a_prime: float) -> np.ndarray:
    """Matrix ``T`` with ``T @ M(a omega) = M(a_prime omega)`` for every omega.

    For the shifted trigonometric family this is ``U D_{a'/a} U^*`` with the
    conjugate transpose, real up to rounding.
    """
    if not (a > 0 and a_prime > 0):
        raise ValueError(f"dilations must be positive, got a={a}, a'={a_prime}")
    return spec.steering_matrix(a, a_prime)


def steer_coefficients(T, channels) -> np.ndarray:
    """Apply T along the channel axis.

    ``channels`` is (n, H, W) for one scale or (J, n, H, W) for a stack.
    """
    T = np.asarray(T)
    c = np.asarray(channels)
    if c.ndim < 3 or c.shape[-3] != T.shape[1]:
        raise ValueError(f"channel axis of {c.shape} does not match T {T.shape}")
    return np.einsum("nm,...mhw->...nhw", T, c)


def steer_pyramid(pyramid, spec, a: float, a_prime: float):
    """Re-express a pyramid analyzed with ``M(a .)`` in the family ``M(a' .)``."""
    src = MultiplierBank(spec, a)
    if pyramid.multiplier_key != src.key:
        raise ValueError(f"pyramid multipliers {pyramid.multiplier_key} are not {src.key}")
    T = steering_matrix(spec, a, a_prime)
    return pyramid.with_channels(steer_coefficients(T, pyramid.channels),
                                 MultiplierBank(spec, a_prime).key)


# ---------------------------------------------------------------------------
# continuous-scale response


@dataclass(frozen=True, eq=False)
class ResponsePolynomial:
    """``r(t) = Re sum_l c_l exp(2 pi j l t / sigma)``, one per trailing index of ``c``.

    r(t) is ``sqrt(n_max)`` times the coefficient of the channel whose
    multiplier is ``m(log2 |omega| + t)``: the steered response at log-dilation t.
    """

    coeffs: np.ndarray
    sigma: float

    @property
    def harmonics(self) -> np.ndarray:
        L = (self.coeffs.shape[0] - 1) // 2
        return np.arange(-L, L + 1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        E = np.exp(2j * np.pi * np.multiply.outer(t, self.harmonics) / self.sigma)
        return np.tensordot(E, self.coeffs, axes=([-1], [0])).real

    def derivatives(self, t):
        """First and second derivative at t (same trailing shape as coeffs)."""
        w = 2j * np.pi * self.harmonics / self.sigma
        E = np.exp(np.multiply.outer(np.asarray(t, float), w))
        d1 = np.tensordot(E * w, self.coeffs, axes=([-1], [0])).real
        d2 = np.tensordot(E * w * w, self.coeffs, axes=([-1], [0])).real
        return d1, d2


def response_polynomial(coeff_vector, spec: TrigMultiplierSpec) -> ResponsePolynomial:
    """Response polynomial of channel coefficients; ``coeff_vector`` is (n_max, ...)."""
    w = np.asarray(coeff_vector)
    if w.shape[0] != spec.n_max:
        raise ValueError(f"expected {spec.n_max} channel values, got {w.shape[0]}")
    U = spec.steering_basis()
    c = np.tensordot(U.conj().T, w, axes=([1], [0]))
    return ResponsePolynomial(c, float(spec.sigma))


def _pointwise(coeffs, sigma, t, derivs=False):
    # column p of coeffs evaluated at t[p]
    L = (coeffs.shape[0] - 1) // 2
    w = 2j * np.pi * np.arange(-L, L + 1) / sigma
    E = np.exp(np.outer(t, w)) * coeffs.T
    if not derivs:
        return E.sum(axis=1).real
    return (E * w).sum(axis=1).real, (E * w * w).sum(axis=1).real


def argmax_scale(poly: ResponsePolynomial, samples: int = 1024):
    """Log-dilation ``t*`` in [0, sigma) maximizing r, and ``r(t*)``.

    Dense sampling picks the bracket (ties go to the smallest t), then a
    parabolic step and Newton iterations on the exact polynomial refine it.
    Works elementwise when the polynomial carries trailing pixel axes.
    """
    sigma = poly.sigma
    c = poly.coeffs
    flat = c.reshape(c.shape[0], -1)
    P = ResponsePolynomial(flat, sigma)
    grid = np.arange(samples) * (sigma / samples)
    vals = P(grid)                                   # (samples, npix)
    k = np.argmax(vals, axis=0)
    cols = np.arange(flat.shape[1])
    y0 = vals[(k - 1) % samples, cols]
    y1 = vals[k, cols]
    y2 = vals[(k + 1) % samples, cols]
    denom = y0 - 2.0 * y1 + y2
    h = sigma / samples
    with np.errstate(divide="ignore", invalid="ignore"):
        off = np.where(denom < 0, 0.5 * (y0 - y2) / denom, 0.0)
    t = grid[k] + np.clip(off, -1.0, 1.0) * h
    for _ in range(3):
        d1, d2 = _pointwise(flat, sigma, t, derivs=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(d2 < 0, -d1 / d2, 0.0)
        t = t + np.clip(step, -h, h)
    t = np.mod(t, sigma)
    r = _pointwise(flat, sigma, t)
    flat_zero = np.all(flat == 0, axis=0) | (np.ptp(vals, axis=0) == 0)
    t = np.where(flat_zero, 0.0, t)
    r = np.where(np.all(flat == 0, axis=0), 0.0, np.where(flat_zero, vals[0], r))
    shape = c.shape[1:]
    if shape == ():
        return float(t[0]), float(r[0])
    return t.reshape(shape), r.reshape(shape)


# ---------------------------------------------------------------------------
# pseudo-dilation and its quality


@dataclass(frozen=True)
class PseudoDilation:
    """``psi_a`` with Fourier profile ``M_0(a rho) h(2**q_a rho)``."""

    spec: TrigMultiplierSpec
    window: MeyerProfile
    a: float
    channel: int          # 1-based index of M_0 in the family
    peak: float           # p0, location of the maximum of h * M_0
    q: int

    def multiplier(self, rho):
        x, nz = _log2_abs(rho)
        return self.spec.profile(x + self.spec.shifts[self.channel - 1]) * nz

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self.multiplier(self.a * rho) * self.window(2.0 ** self.q * rho)

    def reference(self, rho):
        """Fourier profile of the truly dilated wavelet, ``psi_hat(a rho)``."""
        rho = np.asarray(rho, dtype=float)
        return self.multiplier(self.a * rho) * self.window(self.a * rho)


def _check_eps_prime(window: MeyerProfile, eps_prime: float):
    bound = 0.5 * np.pi * (1.0 - 2.0 / 4.0 ** (1.0 + window.epsilon))
    if not (0.0 < eps_prime < bound):
        raise ValueError(f"eps_prime must lie in (0, {bound:.6g}), got {eps_prime}")


def _peak_interval(window: MeyerProfile, eps_prime: float):
    c = window.support[0] + eps_prime
    return c, 2.0 * c


@lru_cache(maxsize=64)
def _select_channel(spec: TrigMultiplierSpec, window: MeyerProfile, eps_prime: float):
    lo_s, hi_s = window.support
    lo, hi = _peak_interval(window, eps_prime)
    rho = np.geomspace(lo_s, hi_s, 4097)
    x = np.log2(rho)
    h = window(rho)
    for n in range(1, spec.n_max + 1):
        shift = spec.shifts[n - 1]
        prof = h * spec.profile(x + shift)
        k = int(np.argmax(prof))
        a, b = rho[max(k - 1, 0)], rho[min(k + 1, rho.size - 1)]
        res = minimize_scalar(lambda r: -(window(r) * spec.profile(np.log2(r) + shift)),
                              bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12})
        p0 = float(res.x) if -res.fun >= prof[k] else float(rho[k])
        if lo < p0 <= hi:
            return n, p0
    raise ValueError("no channel of the family peaks inside the pseudo-scaling interval "
                     f"({lo:.4g}, {hi:.4g}]")


def pseudo_dilate(spec: TrigMultiplierSpec, window: MeyerProfile | None = None,
                  a: float = 1.0, eps_prime: float = DEFAULT_EPS_PRIME) -> PseudoDilation:
    """Approximate dilation of ``psi`` by a through the multiplier, plus a whole-octave window jump.

    ``M_0`` is the lowest-index channel whose windowed profile peaks in
    ``(L + eps', 2(L + eps')]`` with ``L = 4**(-1-eps) pi``. The window index
    ``q_a`` is the integer with ``p0 / a`` in ``2**(-q_a)`` times that interval,
    so the window ``h(2**q_a .)`` is centred on the moved peak.
    """
    if window is None:
        window = MeyerProfile()
    if not a > 0:
        raise ValueError(f"dilation must be positive, got {a}")
    _check_eps_prime(window, eps_prime)
    n, p0 = _select_channel(spec, window, float(eps_prime))
    _, hi = _peak_interval(window, eps_prime)
    q = int(np.floor(np.log2(hi * a / p0)))
    return PseudoDilation(spec, window, float(a), n, p0, q)


def _radial_inner(f, g, rho):
    # 2-D inner product of radial functions, measure rho d rho, on a log-spaced grid
    w = rho * rho
    x = np.log2(rho)
    return np.trapezoid(f * g * w, x) * np.log(2.0)


def quality_metric(spec: TrigMultiplierSpec, window: MeyerProfile | None = None,
                   a: float = 1.0, eps_prime: float = DEFAULT_EPS_PRIME,
                   samples: int = 8193) -> float:
    """Normalized correlation between ``psi_a`` and the true dilation, clamped to [0, 1]."""
    pd = pseudo_dilate(spec, window, a, eps_prime)
    lo, hi = pd.window.support
    rho = np.geomspace(min(lo / a, lo * 2.0 ** -pd.q), max(hi / a, hi * 2.0 ** -pd.q), samples)
    u = pd(rho)
    v = pd.reference(rho)
    num = _radial_inner(u, v, rho)
    den = np.sqrt(_radial_inner(u, u, rho) * _radial_inner(v, v, rho))
    if den == 0:
        return 0.0
    return float(np.clip(num / den, 0.0, 1.0))


def quality_sweep(spec: TrigMultiplierSpec, window: MeyerProfile | None = None,
                  a_values=None, eps_prime: float = DEFAULT_EPS_PRIME):
    """``(a, rho(a))`` over a grid; defaults to 513 points spanning one period."""
    if a_values is None:
        a_values = 2.0 ** np.linspace(0.0, spec.sigma, 513)
    a_values = np.asarray(a_values, dtype=float)
    q = np.array([quality_metric(spec, window, a, eps_prime) for a in a_values])
    return a_values, q
