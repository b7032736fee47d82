"""Feature assembly: luminance-discrimination and color-appearance blocks,
whole-image (global) vectors, and patch-averaged (local) vectors."""

import json
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import DimensionError, FormatError
from .image_io import YCbCrImage
from .naturalness import on_features
from .stats import five_stats
from .structure import (CsfParams, LocalMomentConfig, csf_filter,
                        gradient_magnitude, local_moments)

SCHEMA_SIZES = {
    "LDCA-22": 22,
    "ON-120": 120,
    "GLOBAL-142": 142,
    "NRBP-284": 284,
}

FEATURE_FILE_VERSION = "features/1"


@dataclass(frozen=True)
class FeatureVector:
    """A fixed-order feature list tagged with the schema that defines it."""

    schema: str
    values: np.ndarray

    def __post_init__(self):
        if self.schema not in SCHEMA_SIZES:
            raise FormatError(f"unknown feature schema {self.schema!r}")
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size != SCHEMA_SIZES[self.schema]:
            raise DimensionError(
                f"schema {self.schema} needs {SCHEMA_SIZES[self.schema]} values, "
                f"got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DimensionError(f"non-finite value in {self.schema} vector")

    def to_json(self) -> str:
        return json.dumps({
            "schema": self.schema,
            "version": FEATURE_FILE_VERSION,
            "values": [float(v) for v in self.values],
        })

    @classmethod
    def from_json(cls, text: str) -> "FeatureVector":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"feature file is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict) or "schema" not in doc or "values" not in doc:
            raise FormatError("feature file missing schema/values fields")
        if doc.get("version") != FEATURE_FILE_VERSION:
            raise FormatError(f"unsupported feature file version {doc.get('version')!r}")
        return cls(schema=doc["schema"], values=np.asarray(doc["values"], dtype=np.float64))


@dataclass(frozen=True)
class ChannelConfig:
    """Extraction settings shared by the global and local channels."""

    patch_size: int = 32
    ppd: float = 32.0
    local_moment: LocalMomentConfig = field(default_factory=LocalMomentConfig)

    def __post_init__(self):
        if self.patch_size < 16:
            raise DimensionError(f"patch_size must be >= 16, got {self.patch_size}")
        if self.ppd <= 0:
            raise DimensionError("ppd must be positive")

    def csf_params(self) -> CsfParams:
        return CsfParams(ppd=self.ppd)


def ld_features(y: np.ndarray, cfg: ChannelConfig = ChannelConfig()) -> np.ndarray:
    """12 luminance-discrimination values.

    Five summary statistics of the plane, five of the gradient magnitude
    of its contrast-sensitivity-filtered version, then the mean local
    standard deviation and the mean normalized local deviation.
    """
    stats_raw = five_stats(y)
    weighted = gradient_magnitude(csf_filter(y, cfg.csf_params()))
    stats_grad = five_stats(weighted)
    _, sigma, gamma_pl = local_moments(y, cfg.local_moment)
    return np.array(list(stats_raw) + list(stats_grad)
                    + [float(np.mean(sigma)), float(np.mean(gamma_pl))])


def ca_features(cb: np.ndarray, cr: np.ndarray) -> np.ndarray:
    """10 color-appearance values: five statistics per chrominance plane."""
    if cb.shape != cr.shape:
        raise DimensionError(f"chrominance planes differ: {cb.shape} vs {cr.shape}")
    if cb.size == 0:
        raise DimensionError("empty chrominance plane")
    return np.array(list(five_stats(cb)) + list(five_stats(cr)))


def global_features(img: YCbCrImage, cfg: ChannelConfig = ChannelConfig()) -> FeatureVector:
    """Whole-image vector: 12 LD + 10 CA + 120 naturalness values."""
    values = np.concatenate([
        ld_features(img.y, cfg),
        ca_features(img.cb, img.cr),
        on_features(img, cfg.local_moment),
    ])
    return FeatureVector(schema="GLOBAL-142", values=values)


def _tiles(img: YCbCrImage, size: int) -> List[YCbCrImage]:
    rows = img.height // size
    cols = img.width // size
    out = []
    for r in range(rows):
        for c in range(cols):
            sl = (slice(r * size, (r + 1) * size), slice(c * size, (c + 1) * size))
            out.append(YCbCrImage(y=img.y[sl], cb=img.cb[sl], cr=img.cr[sl]))
    return out


def local_features(img: YCbCrImage, cfg: ChannelConfig = ChannelConfig()) -> FeatureVector:
    """Patch-averaged vector: the 142 global values computed per
    non-overlapping top-left-anchored patch, then averaged per dimension.
    Partial border tiles are dropped."""
    if img.height < cfg.patch_size or img.width < cfg.patch_size:
        raise DimensionError(
            f"image {img.height}x{img.width} smaller than one "
            f"{cfg.patch_size}x{cfg.patch_size} patch")
    acc = np.zeros(SCHEMA_SIZES["GLOBAL-142"])
    tiles = _tiles(img, cfg.patch_size)
    for tile in tiles:
        acc += global_features(tile, cfg).values
    return FeatureVector(schema="GLOBAL-142", values=acc / len(tiles))
