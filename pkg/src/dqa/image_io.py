"""Image decoding, YCbCr conversion, downsampling, and manifest ingestion.

A plane is a 2-D float64 array of samples in nominal range [0, 255]; all
feature code operates on planes. Colour images are decoded once into the
three YCbCr planes and never touched again as RGB.
"""

import csv
import math
import os
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DimensionError, FormatError, ManifestError

# Full-range BT.601 integer-coefficient transform.
_YCBCR = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)

MIN_SIZE = 16  # smallest plane admitted to feature extraction

_ALLOWED_FORMATS = {"PNG", "BMP", "PPM"}  # Pillow reports P5/P6 as PPM


@dataclass(frozen=True)
class YCbCrImage:
    """One decoded image: aligned luminance and chrominance planes."""

    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray
    source_path: str = ""

    def __post_init__(self):
        if not (self.y.shape == self.cb.shape == self.cr.shape):
            raise DimensionError("Y, Cb, Cr planes must share dimensions")

    @property
    def height(self) -> int:
        return self.y.shape[0]

    @property
    def width(self) -> int:
        return self.y.shape[1]


class ManifestEntry(NamedTuple):
    image_path: str
    content_id: str
    mos: float
    reference_path: Optional[str] = None


@dataclass
class DatasetManifest:
    entries: List[ManifestEntry] = field(default_factory=list)
    directory: str = "."


def decode_image(path: str) -> YCbCrImage:
    """Decode an 8-bit PNG/BMP/PPM/PGM file into YCbCr planes.

    RGB inputs go through the full-range BT.601 transform (Cb, Cr offset by
    128) and are clamped to [0, 255] without rounding. Grayscale inputs get
    constant neutral chrominance.
    """
    try:
        img = Image.open(path)
        img.load()
    except UnidentifiedImageError as exc:
        raise FormatError(f"{path}: not a decodable raster ({exc})") from exc

    if img.format not in _ALLOWED_FORMATS:
        raise FormatError(f"{path}: format {img.format!r} not supported "
                          f"(want PNG, BMP, PPM, or PGM)")
    if img.mode == "P":
        img = img.convert("RGB")
    if img.mode not in ("RGB", "L"):
        raise FormatError(f"{path}: mode {img.mode!r} is not 8-bit RGB or grayscale")

    w, h = img.size
    if w < MIN_SIZE or h < MIN_SIZE:
        raise DimensionError(f"{path}: {w}x{h} is below the {MIN_SIZE}x{MIN_SIZE} minimum")

    arr = np.asarray(img, dtype=np.float64)
    if img.mode == "L":
        y = arr
        cb = np.full_like(arr, 128.0)
        cr = np.full_like(arr, 128.0)
    else:
        y = arr @ _YCBCR[0]
        cb = 128.0 + arr @ _YCBCR[1]
        cr = 128.0 + arr @ _YCBCR[2]
        cb = np.clip(cb, 0.0, 255.0)
        cr = np.clip(cr, 0.0, 255.0)
        y = np.clip(y, 0.0, 255.0)
    return YCbCrImage(y=y, cb=cb, cr=cr, source_path=str(path))


def downsample_half(p: np.ndarray) -> np.ndarray:
    """Halve both dimensions by 2x2 box averaging (anti-aliased decimation).

    Odd trailing rows/columns are dropped, so the output is
    floor(h/2) x floor(w/2).
    """
    h, w = p.shape
    if h < 2 or w < 2:
        raise DimensionError(f"cannot halve a {h}x{w} plane")
    h2, w2 = h // 2, w // 2
    trimmed = p[: 2 * h2, : 2 * w2]
    return trimmed.reshape(h2, 2, w2, 2).mean(axis=(1, 3))


def load_manifest(path: str) -> DatasetManifest:
    """Read a `image_path,content_id,mos[,reference_path]` CSV manifest.

    Lines starting with `#` are ignored. Relative image paths are resolved
    against the manifest's own directory.
    """
    directory = os.path.dirname(os.path.abspath(path))
    with open(path, "r", encoding="utf-8", newline="") as fh:
        numbered = [
            (lineno, line)
            for lineno, line in enumerate(fh, start=1)
            if line.strip() and not line.lstrip().startswith("#")
        ]
    if not numbered:
        raise ManifestError(f"{path}: empty manifest")

    rows = list(csv.reader(line for _, line in numbered))
    header = [c.strip() for c in rows[0]]
    if header not in (
        ["image_path", "content_id", "mos"],
        ["image_path", "content_id", "mos", "reference_path"],
    ):
        raise ManifestError(
            f"{path}: header must be image_path,content_id,mos[,reference_path], "
            f"got {','.join(header)}"
        )
    has_ref = len(header) == 4

    entries: List[ManifestEntry] = []
    seen = set()
    for (lineno, _), row in zip(numbered[1:], rows[1:]):
        if len(row) != len(header):
            raise ManifestError(f"{path} line {lineno}: expected {len(header)} columns")
        image_path = row[0].strip()
        content_id = row[1].strip()
        if not image_path:
            raise ManifestError(f"{path} line {lineno}: empty image_path")
        if not content_id:
            raise ManifestError(f"{path} line {lineno}: empty content_id")
        try:
            mos = float(row[2])
        except ValueError as exc:
            raise ManifestError(
                f"{path} line {lineno}: mos {row[2]!r} is not a number"
            ) from exc
        if not math.isfinite(mos):
            raise ManifestError(f"{path} line {lineno}: mos must be finite")
        if not os.path.isabs(image_path):
            image_path = os.path.normpath(os.path.join(directory, image_path))
        if image_path in seen:
            raise ManifestError(f"{path} line {lineno}: duplicate image_path {image_path}")
        seen.add(image_path)
        ref = None
        if has_ref and row[3].strip():
            ref = row[3].strip()
            if not os.path.isabs(ref):
                ref = os.path.normpath(os.path.join(directory, ref))
        entries.append(ManifestEntry(image_path, content_id, mos, ref))
    return DatasetManifest(entries=entries, directory=directory)
