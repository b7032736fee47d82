"""Scene-statistics features: MSCN, paired products, GGD/AGGD moment fits.

The divisive normalization transform both decorrelates and Gaussianizes;
its marginal gets a symmetric generalized Gaussian fit, and the four
one-pixel paired-product maps get asymmetric fits. Concatenated over
YCbCr at two scales this yields the 120-value naturalness block.
"""

import warnings
from typing import List, NamedTuple, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import DegenerateSampleError, DimensionError, OneSidedSampleError
from .image_io import YCbCrImage, downsample_half
from .structure import LocalMomentConfig, local_moments

MIN_FIT_SAMPLES = 64

# Shape search grid shared by both estimators.
_SHAPE_GRID = np.linspace(0.05, 10.0, 9951)
_GGD_RATIO = (gamma_fn(1.0 / _SHAPE_GRID) * gamma_fn(3.0 / _SHAPE_GRID)
              / gamma_fn(2.0 / _SHAPE_GRID) ** 2)
_AGGD_RATIO = 1.0 / _GGD_RATIO


class GgdFit(NamedTuple):
    shape: float
    scale: float
    skewness: float
    kurtosis: float


class AggdFit(NamedTuple):
    delta: float
    shape: float
    var_left: float
    var_right: float


GGD_SENTINEL = GgdFit(shape=2.0, scale=0.0, skewness=0.0, kurtosis=3.0)
AGGD_SENTINEL = AggdFit(delta=0.0, shape=2.0, var_left=0.0, var_right=0.0)


def mscn(p: np.ndarray, cfg: LocalMomentConfig = LocalMomentConfig()) -> np.ndarray:
    """Divisive normalization: (p - local mean) / (local std + C)."""
    mu, sigma, _ = local_moments(p, cfg)
    return (p - mu) / (sigma + cfg.c_stab)


def paired_products(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Products of each sample with its horizontal, vertical, and two
    diagonal neighbours. Each output loses one row/column along the
    shifted axes."""
    if m.shape[0] < 2 or m.shape[1] < 2:
        raise DimensionError(f"paired products need at least 2x2, got {m.shape}")
    h = m[:, :-1] * m[:, 1:]
    v = m[:-1, :] * m[1:, :]
    d1 = m[:-1, :-1] * m[1:, 1:]
    d2 = m[:-1, 1:] * m[1:, :-1]
    return h, v, d1, d2


def fit_ggd(samples: np.ndarray) -> GgdFit:
    """Moment-matching fit of a zero-mean generalized Gaussian.

    The shape comes from matching E[x^2] / (E|x|)^2 against the analytic
    ratio over the shape grid; the scale from the second moment; skewness
    and kurtosis are the standardized sample moments.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < MIN_FIT_SAMPLES:
        raise DegenerateSampleError(f"need >= {MIN_FIT_SAMPLES} samples, got {x.size}")
    m2 = float(np.mean(x * x))
    mean_abs = float(np.mean(np.abs(x)))
    if m2 == 0.0 or mean_abs == 0.0 or np.all(x == x[0]):
        raise DegenerateSampleError("samples carry no spread")

    ratio = m2 / mean_abs**2
    shape = float(_SHAPE_GRID[np.argmin(np.abs(_GGD_RATIO - ratio))])
    scale = float(np.sqrt(m2 * gamma_fn(1.0 / shape) / gamma_fn(3.0 / shape)))

    mu = float(np.mean(x))
    c2 = float(np.mean((x - mu) ** 2))
    if c2 == 0.0:
        raise DegenerateSampleError("zero variance")
    skewness = float(np.mean((x - mu) ** 3) / c2**1.5)
    kurtosis = float(np.mean((x - mu) ** 4) / c2**2)
    return GgdFit(shape, scale, skewness, kurtosis)


def fit_aggd(samples: np.ndarray) -> AggdFit:
    """Moment-matching fit of a zero-mode asymmetric generalized Gaussian.

    Left/right spreads are the RMS of the strictly negative/positive
    subsets; the shape comes from the asymmetry-corrected moment ratio on
    the shared grid; delta is (rho_r - rho_l) * Gamma(2/shape) / Gamma(1/shape).
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < MIN_FIT_SAMPLES:
        raise DegenerateSampleError(f"need >= {MIN_FIT_SAMPLES} samples, got {x.size}")
    neg = x[x < 0.0]
    pos = x[x > 0.0]
    if neg.size == 0 or pos.size == 0:
        raise OneSidedSampleError("samples must straddle zero")
    m2 = float(np.mean(x * x))
    if m2 == 0.0:
        raise DegenerateSampleError("zero variance")

    rho_l = float(np.sqrt(np.mean(neg * neg)))
    rho_r = float(np.sqrt(np.mean(pos * pos)))
    asym = rho_l / rho_r
    r_hat = float(np.mean(np.abs(x))) ** 2 / m2
    r_corrected = r_hat * (asym**3 + 1.0) * (asym + 1.0) / (asym**2 + 1.0) ** 2
    shape = float(_SHAPE_GRID[np.argmin((_AGGD_RATIO - r_corrected) ** 2)])

    delta = (rho_r - rho_l) * gamma_fn(2.0 / shape) / gamma_fn(1.0 / shape)
    return AggdFit(float(delta), shape, rho_l**2, rho_r**2)


def _channel_scale_features(plane: np.ndarray, cfg: LocalMomentConfig,
                            label: str) -> List[float]:
    """20 features for one plane at one scale; degenerate fits fall back
    to the maximally non-informative sentinel so flat regions stay scoreable."""
    coeffs = mscn(plane, cfg)
    try:
        g = fit_ggd(coeffs)
    except DegenerateSampleError:
        warnings.warn(f"{label}: degenerate MSCN fit, using sentinel")
        g = GGD_SENTINEL
    out = list(g)
    for prod in paired_products(coeffs):
        try:
            a = fit_aggd(prod)
        except (DegenerateSampleError, OneSidedSampleError):
            warnings.warn(f"{label}: degenerate paired-product fit, using sentinel")
            a = AGGD_SENTINEL
        out.extend(a)
    return out


def on_features(img: YCbCrImage, cfg: LocalMomentConfig = LocalMomentConfig()) -> np.ndarray:
    """120 naturalness features: per channel (Y, Cb, Cr) and per scale
    (full, half), 4 GGD-derived values plus 4 orientations x 4 AGGD values.

    Order is frozen: Y-full, Y-half, Cb-full, Cb-half, Cr-full, Cr-half.
    """
    if img.height < 16 or img.width < 16:
        raise DimensionError(f"image {img.height}x{img.width} below 16x16 minimum")
    values: List[float] = []
    for name, plane in (("Y", img.y), ("Cb", img.cb), ("Cr", img.cr)):
        for scale, scaled in (("full", plane), ("half", downsample_half(plane))):
            values.extend(_channel_scale_features(scaled, cfg, f"{name}-{scale}"))
    return np.array(values)
