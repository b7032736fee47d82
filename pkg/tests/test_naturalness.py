import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from conftest import blobby_plane, textured_plane

from dqa import (DegenerateSampleError, DimensionError, OneSidedSampleError,
                 YCbCrImage, fit_aggd, fit_ggd, mscn, on_features,
                 paired_products)
from dqa.naturalness import AGGD_SENTINEL, GGD_SENTINEL


def sample_ggd(lam: float, scale: float, n: int, rng) -> np.ndarray:
    """|x| = scale * G^(1/lam) with G ~ Gamma(1/lam, 1), random sign."""
    mags = scale * rng.gamma(1.0 / lam, 1.0, n) ** (1.0 / lam)
    return mags * rng.choice([-1.0, 1.0], n)


def sample_aggd(lam: float, rho_l: float, rho_r: float, n: int, rng) -> np.ndarray:
    """Side chosen with probability proportional to its spread, then a
    one-sided generalized Gaussian magnitude with that side's scale."""
    conv = np.sqrt(gamma_fn(1.0 / lam) / gamma_fn(3.0 / lam))
    sides = rng.random(n) < rho_r / (rho_l + rho_r)
    scale = np.where(sides, rho_r * conv, rho_l * conv)
    mags = scale * rng.gamma(1.0 / lam, 1.0, n) ** (1.0 / lam)
    return np.where(sides, mags, -mags)


def test_mscn_constant_plane_is_zero():
    assert np.allclose(mscn(np.full((16, 16), 80.0)), 0.0, atol=1e-12)


def test_mscn_mean_near_zero_on_noise():
    rng = np.random.default_rng(12)
    out = mscn(rng.uniform(0.0, 255.0, (256, 256)))
    assert -0.02 <= float(out.mean()) <= 0.02


def test_mscn_invariant_to_constant_shift():
    p = textured_plane(13, h=24, w=24)
    assert np.allclose(mscn(p + 40.0), mscn(p), atol=1e-9)


def test_mscn_gaussianizes_heavy_tails():
    p = blobby_plane(14)

    def kurt(x):
        x = x.ravel()
        c = x - x.mean()
        return float(np.mean(c ** 4) / np.mean(c ** 2) ** 2)

    assert abs(kurt(mscn(p)) - 3.0) < abs(kurt(p) - 3.0)


def test_mscn_rejects_window_sized_input():
    with pytest.raises(DimensionError):
        mscn(np.zeros((7, 9)))


def test_paired_products_slices():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    h, v, d1, d2 = paired_products(m)
    assert np.array_equal(h, [[2.0], [12.0]])
    assert np.array_equal(v, [[3.0, 8.0]])
    assert np.array_equal(d1, [[4.0]])
    assert np.array_equal(d2, [[6.0]])


def test_paired_products_trivial_planes():
    ones = np.ones((5, 5))
    assert all(np.all(x == 1.0) for x in paired_products(ones))
    zeros = np.zeros((5, 5))
    assert all(np.all(x == 0.0) for x in paired_products(zeros))
    alt = np.tile([1.0, -1.0], (4, 3))
    h = paired_products(alt)[0]
    assert np.all(h == -1.0)


def test_paired_products_rejects_1d_strip():
    with pytest.raises(DimensionError):
        paired_products(np.ones((1, 10)))


def test_ggd_fit_gaussian_samples():
    rng = np.random.default_rng(100)
    fit = fit_ggd(rng.normal(0.0, 1.0, 100_000))
    assert 1.9 <= fit.shape <= 2.1
    assert 2.9 <= fit.kurtosis <= 3.1
    assert abs(fit.skewness) < 0.05
    # for shape 2 the scale is sigma * sqrt(2)
    assert fit.scale == pytest.approx(np.sqrt(2.0), abs=0.05)


def test_ggd_fit_laplacian_samples():
    rng = np.random.default_rng(101)
    fit = fit_ggd(rng.laplace(0.0, 1.0, 100_000))
    assert 0.93 <= fit.shape <= 1.07


def test_ggd_recovery_across_shapes():
    for lam in (0.5, 1.0, 2.0, 4.0):
        errs = []
        for seed in range(5):
            rng = np.random.default_rng(seed)
            fit = fit_ggd(sample_ggd(lam, 1.0, 50_000, rng))
            errs.append(abs(fit.shape - lam))
        assert np.median(errs) <= 0.05, f"shape {lam}: {errs}"


def test_ggd_moment_ratio_monotone_on_grid():
    from dqa.naturalness import _GGD_RATIO
    assert np.all(np.diff(_GGD_RATIO) < 0.0)


def test_ggd_fit_rejects_degenerate_input():
    with pytest.raises(DegenerateSampleError):
        fit_ggd(np.zeros(200))
    with pytest.raises(DegenerateSampleError):
        fit_ggd(np.full(200, 4.2))
    with pytest.raises(DegenerateSampleError):
        fit_ggd(np.ones(10))  # too few samples


def test_aggd_exactly_mirrored_samples():
    rng = np.random.default_rng(102)
    mags = np.abs(rng.normal(0.0, 1.5, 5000)) + 1e-6
    fit = fit_aggd(np.concatenate([mags, -mags]))
    rho_l, rho_r = np.sqrt(fit.var_left), np.sqrt(fit.var_right)
    assert abs(fit.delta) <= 1e-9 * (rho_l + rho_r)
    assert abs(rho_l - rho_r) <= 1e-9


def test_aggd_recovers_asymmetric_spreads():
    rng = np.random.default_rng(103)
    fit = fit_aggd(sample_aggd(2.0, 1.0, 2.0, 100_000, rng))
    assert 3.6 <= fit.var_right / fit.var_left <= 4.4
    assert 1.8 <= fit.shape <= 2.2
    assert fit.delta > 0.0  # heavier right side pulls the mean positive


def test_aggd_delta_uses_spread_gap():
    rng = np.random.default_rng(104)
    x = sample_aggd(2.0, 1.0, 2.0, 200_000, rng)
    fit = fit_aggd(x)
    rho_l, rho_r = np.sqrt(fit.var_left), np.sqrt(fit.var_right)
    expected = (rho_r - rho_l) * gamma_fn(2.0 / fit.shape) / gamma_fn(1.0 / fit.shape)
    assert fit.delta == pytest.approx(expected, rel=1e-12)


def test_aggd_rejects_one_sided_and_degenerate():
    with pytest.raises(OneSidedSampleError):
        fit_aggd(np.abs(np.random.default_rng(1).normal(size=200)) + 0.1)
    with pytest.raises(DegenerateSampleError):
        fit_aggd(np.ones(20))  # too few samples before sign check


def test_on_features_length_and_determinism():
    img = YCbCrImage(y=textured_plane(40), cb=textured_plane(41),
                     cr=textured_plane(42))
    a = on_features(img)
    b = on_features(img)
    assert a.shape == (120,)
    assert np.array_equal(a, b)
    assert np.all(np.isfinite(a))


def test_on_features_block_order_matches_manual_assembly():
    from dqa.naturalness import _channel_scale_features
    from dqa import downsample_half, LocalMomentConfig

    img = YCbCrImage(y=textured_plane(43), cb=textured_plane(44),
                     cr=textured_plane(45))
    cfg = LocalMomentConfig()
    vec = on_features(img, cfg)
    y_full = _channel_scale_features(img.y, cfg, "check")
    cb_half = _channel_scale_features(downsample_half(img.cb), cfg, "check")
    assert np.array_equal(vec[0:20], y_full)
    assert np.array_equal(vec[60:80], cb_half)


def test_on_features_sentinels_on_constant_chrominance():
    img = YCbCrImage(y=textured_plane(46), cb=np.full((64, 64), 128.0),
                     cr=np.full((64, 64), 128.0))
    with pytest.warns(UserWarning):
        vec = on_features(img)
    sentinel_block = np.array(list(GGD_SENTINEL) + list(AGGD_SENTINEL) * 4)
    for start in (40, 60, 80, 100):  # Cb-full, Cb-half, Cr-full, Cr-half
        assert np.array_equal(vec[start:start + 20], sentinel_block)
    assert np.all(np.isfinite(vec))


def test_on_features_rejects_small_images():
    with pytest.raises(DimensionError):
        on_features(YCbCrImage(y=np.zeros((8, 8)), cb=np.zeros((8, 8)),
                               cr=np.zeros((8, 8))))
