"""Structural maps: CSF filtering, gradient magnitude, local moments.

The contrast sensitivity transfer splits its frequency units: the Gaussian
cutoff term runs on normalized cycles/pixel while the band-pass term runs
on cycles/degree via a pixels-per-degree factor. Applying the Gaussian in
cycles/degree with alpha = 0.5 would wipe out everything above ~1 c/deg,
so the split is load-bearing, not cosmetic.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DimensionError

MIN_FILTER_SIZE = 16


@dataclass(frozen=True)
class CsfParams:
    alpha: float = 0.5          # Gaussian cutoff control, cycles/pixel term
    eta: float = 0.114          # band-pass decay, cycles/degree term
    ppd: float = 32.0           # pixels per degree of visual angle

    def __post_init__(self):
        if self.alpha <= 0 or self.eta <= 0 or self.ppd <= 0:
            raise ValueError("alpha, eta, ppd must all be positive")

    @property
    def f_peak(self) -> float:
        """Analytic maximizer of the band-pass branch, in c/deg."""
        return (1.0 - 0.0192) / self.eta


@dataclass(frozen=True)
class LocalMomentConfig:
    window: int = 7
    sigma_w: float = 7.0 / 6.0
    c_stab: float = 1.0

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if self.c_stab <= 0:
            raise ValueError("c_stab must be positive")


def _transfer_arrays(f_cpd, f_cpp, phi, params: CsfParams):
    """Vectorized H1*H2 over frequency arrays; shared by scalar and filter paths."""
    h1 = np.exp(-2.0 * np.pi**2 * params.alpha**2 * np.asarray(f_cpp) ** 2)
    f_phi = np.asarray(f_cpd) / (0.15 * np.cos(4.0 * np.asarray(phi)) + 0.85)
    band = 2.6 * (0.0192 + params.eta * f_phi) * np.exp(-params.eta * f_phi)
    h2 = np.where(f_phi >= params.f_peak, band, 0.981)
    return h1 * h2


def csf_transfer(f_cpd: float, f_cpp: float, phi: float,
                 params: CsfParams = CsfParams()) -> float:
    """Contrast sensitivity at one frequency.

    f_cpd is the radial frequency in cycles/degree, f_cpp the same point in
    cycles/pixel, phi the orientation in radians. The angular correction is
    applied before the branch test against the response peak.
    """
    return float(_transfer_arrays(f_cpd, f_cpp, phi, params))


def csf_filter(p: np.ndarray, params: CsfParams = CsfParams()) -> np.ndarray:
    """Filter a plane in the DFT domain by the CSF transfer function."""
    h, w = p.shape
    if h < MIN_FILTER_SIZE or w < MIN_FILTER_SIZE:
        raise DimensionError(f"csf_filter needs at least "
                             f"{MIN_FILTER_SIZE}x{MIN_FILTER_SIZE}, got {h}x{w}")
    u = np.fft.fftfreq(h)[:, None]  # vertical frequency, cycles/pixel
    v = np.fft.fftfreq(w)[None, :]  # horizontal frequency, cycles/pixel
    f_cpp = np.hypot(u, v)
    f_cpd = f_cpp * params.ppd
    phi = np.arctan2(u, v)
    transfer = _transfer_arrays(f_cpd, f_cpp, phi, params)
    return np.real(np.fft.ifft2(np.fft.fft2(p) * transfer))


_SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])


def gradient_magnitude(p: np.ndarray) -> np.ndarray:
    """Per-pixel Sobel gradient magnitude with reflect padding."""
    if p.shape[0] < 3 or p.shape[1] < 3:
        raise DimensionError(f"gradient needs at least 3x3, got {p.shape}")
    gx = ndimage.correlate(p, _SOBEL_X, mode="reflect")
    gy = ndimage.correlate(p, _SOBEL_X.T, mode="reflect")
    return np.hypot(gx, gy)


def gaussian_window(window: int, sigma: float) -> np.ndarray:
    """Unit-sum square Gaussian weighting window."""
    r = window // 2
    d = np.arange(-r, r + 1, dtype=np.float64)
    w = np.exp(-(d[:, None] ** 2 + d[None, :] ** 2) / (2.0 * sigma**2))
    return w / w.sum()


def local_moments(p: np.ndarray, cfg: LocalMomentConfig = LocalMomentConfig()):
    """Gaussian-weighted local mean, standard deviation, and normalized spread.

    Returns (mu, sigma, gamma) planes matching the input shape. sigma is
    computed from the literal weighted squared-deviation sum rather than the
    E[x^2]-mu^2 shortcut, which loses digits to cancellation.
    """
    h, w = p.shape
    if h <= cfg.window or w <= cfg.window:
        raise DimensionError(f"plane {h}x{w} must exceed the "
                             f"{cfg.window}x{cfg.window} window")
    win = gaussian_window(cfg.window, cfg.sigma_w)
    r = cfg.window // 2
    padded = np.pad(p, r, mode="symmetric")

    mu = np.zeros_like(p)
    for i in range(cfg.window):
        for j in range(cfg.window):
            mu += win[i, j] * padded[i : i + h, j : j + w]

    var = np.zeros_like(p)
    for i in range(cfg.window):
        for j in range(cfg.window):
            var += win[i, j] * (padded[i : i + h, j : j + w] - mu) ** 2
    sigma = np.sqrt(var)
    gamma = sigma / (mu + cfg.c_stab)
    return mu, sigma, gamma
