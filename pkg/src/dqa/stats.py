"""Five scalar statistics of a plane: mean, std, median, mode, entropy.

The median and mode are two-pass (per row, then across the row results),
and the mode/entropy run on an 8-bit quantized copy of the plane so that
derived real-valued maps (gradients, MSCN, chrominance) bin cleanly.
"""

from typing import NamedTuple

import numpy as np


class StatVec5(NamedTuple):
    mea: float
    std: float
    med: float
    mod: float
    ent: float


def quantize_for_hist(p: np.ndarray) -> np.ndarray:
    """Map a plane onto integer bins 0..255 for mode/entropy histograms.

    Planes already inside [0, 255] are only rounded; anything else is
    range-normalized onto [0, 255] first. A constant plane maps to bin 0.
    """
    lo = p.min()
    hi = p.max()
    if lo >= 0.0 and hi <= 255.0:
        return np.rint(p)
    if hi == lo:
        return np.zeros_like(p)
    return np.rint((p - lo) * (255.0 / (hi - lo)))


def _row_modes(q: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximum, which is the smallest bin value.
    modes = np.empty(q.shape[0])
    for i in range(q.shape[0]):
        counts = np.bincount(q[i], minlength=256)
        modes[i] = np.argmax(counts)
    return modes


def five_stats(p: np.ndarray) -> StatVec5:
    """Mean, population std, two-pass median, two-pass mode, entropy (bits)."""
    if p.size == 0:
        raise ValueError("empty plane")
    mea = float(p.mean())
    std = float(p.std())

    row_medians = np.median(p, axis=1)
    med = float(np.median(row_medians))

    q = quantize_for_hist(p).astype(np.int64)
    row_modes = _row_modes(q)
    mod = float(np.argmax(np.bincount(row_modes.astype(np.int64), minlength=256)))

    counts = np.bincount(q.ravel(), minlength=256)
    probs = counts[counts > 0] / q.size
    ent = float(-np.sum(probs * np.log2(probs)))
    return StatVec5(mea, std, med, mod, ent)
