"""Shared synthetic imagery and dataset fixtures.

Everything is generated from fixed seeds at session start; no binary
assets live in the repository.
"""

import os

import numpy as np
import pytest
from PIL import Image

BT601 = (0.299, 0.587, 0.114)


def textured_plane(seed: int, h: int = 64, w: int = 64, lum: float = 120.0,
                   amp: float = 1.0) -> np.ndarray:
    """Band-limited waves plus grain, clipped to [0, 255]."""
    r = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    base = (30.0 * np.sin(xx / 8.5 + r.uniform(0, 6.3))
            + 24.0 * np.cos(yy / 12.5 + r.uniform(0, 6.3))
            + 18.0 * np.sin((xx + yy) / 17.0)
            + r.normal(0.0, 11.0, (h, w)))
    return np.clip(amp * base + lum, 0.0, 255.0)


def blobby_plane(seed: int, h: int = 96, w: int = 96) -> np.ndarray:
    """Sparse bright blobs on a dim background: heavy-tailed raw histogram."""
    r = np.random.default_rng(seed)
    p = np.full((h, w), 30.0) + r.normal(0.0, 2.0, (h, w))
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    for _ in range(6):
        cy, cx = r.uniform(10, h - 10), r.uniform(10, w - 10)
        p += 200.0 * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / 18.0)
    return np.clip(p, 0.0, 255.0)


def rgb_scene(seed: int, h: int = 64, w: int = 64, lum: float = 130.0) -> np.ndarray:
    """8-bit RGB array with correlated channels and mild chroma texture."""
    g = textured_plane(seed, h, w, lum)
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    red = np.clip(g + 12.0 * np.sin(yy / 21.0), 0.0, 255.0)
    blue = np.clip(g + 10.0 * np.cos(xx / 19.0), 0.0, 255.0)
    return np.stack([red, g, blue], axis=-1).astype(np.uint8)


def save_png(path, arr: np.ndarray) -> str:
    mode = "RGB" if arr.ndim == 3 else "L"
    Image.fromarray(arr.astype(np.uint8), mode).save(str(path))
    return str(path)


def haze_blend(rgb: np.ndarray, strength: float, gray: float = 170.0) -> np.ndarray:
    """Affine blend toward constant gray, the synthetic-haze degradation."""
    out = (1.0 - strength) * rgb.astype(np.float64) + strength * gray
    return np.clip(out, 0.0, 255.0).astype(np.uint8)


def mean_luma(rgb: np.ndarray) -> float:
    a = rgb.astype(np.float64)
    return float(np.mean(BT601[0] * a[..., 0] + BT601[1] * a[..., 1]
                         + BT601[2] * a[..., 2]))


def build_manifest(directory, n_contents: int, levels: np.ndarray,
                   size: int = 64, seed0: int = 1000) -> str:
    """Write PNG scenes whose opinion score is a noiseless monotone
    function of each stored image's mean luminance; return manifest path."""
    rows = ["image_path,content_id,mos"]
    for c in range(n_contents):
        for k, lum in enumerate(levels):
            arr = rgb_scene(seed0 + c, h=size, w=size, lum=float(lum))
            path = save_png(os.path.join(str(directory), f"c{c}_l{k}.png"), arr)
            mos = 1.0 + 4.0 * (mean_luma(arr) - 50.0) / 160.0
            rows.append(f"{os.path.basename(path)},scene{c},{mos!r}")
    manifest = os.path.join(str(directory), "manifest.csv")
    with open(manifest, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
    return manifest


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    """20 varied RGB scenes for identity and corpus-wide checks."""
    d = tmp_path_factory.mktemp("corpus")
    for k in range(20):
        save_png(d / f"img_{k:02d}.png",
                 rgb_scene(300 + k, lum=80.0 + 7.0 * k))
    return d


@pytest.fixture(scope="session")
def scene_files(tmp_path_factory):
    """Five clean 96x96 scenes for degradation-direction checks."""
    d = tmp_path_factory.mktemp("scenes")
    return [save_png(d / f"scene_{k}.png", rgb_scene(700 + k, h=96, w=96,
                                                     lum=100.0 + 12.0 * k))
            for k in range(5)]


@pytest.fixture(scope="session")
def protocol_manifest(tmp_path_factory):
    """10 contents x 8 degradation levels, MOS monotone in mean luminance."""
    d = tmp_path_factory.mktemp("protocol_db")
    return build_manifest(d, n_contents=10, levels=np.linspace(60, 200, 8))


@pytest.fixture(scope="session")
def small_manifest(tmp_path_factory):
    """6 contents x 5 levels at 48x48 for fast protocol unit tests; five
    levels keep each held-out content large enough for the fitted criteria."""
    d = tmp_path_factory.mktemp("small_db")
    return build_manifest(d, n_contents=6, levels=np.linspace(70.0, 190.0, 5),
                          size=48, seed0=4000)


@pytest.fixture(scope="session")
def big_image_file(tmp_path_factory):
    d = tmp_path_factory.mktemp("big")
    return save_png(d / "big.png", rgb_scene(42, h=256, w=256))
