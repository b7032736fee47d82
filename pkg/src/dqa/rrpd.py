"""Reduced-reference scoring.

The sender extracts a compact feature packet from the haze-free source
and ships it over a low-rate side channel; the receiver recomputes the
same features from the dehazed output and scores the partial discrepancy
between the two. Lower scores predict better quality.
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (ConfigMismatchError, DimensionError, FormatError,
                     PacketVersionError)
from .features import ChannelConfig, ca_features, ld_features
from .image_io import YCbCrImage
from .naturalness import on_features

PACKET_VERSION = "rrpd/1"
LDCA_LEN = 22
ON_LEN = 120


@dataclass(frozen=True)
class RRFeaturePacket:
    """Sender-side features plus the metadata a receiver needs to
    reproduce them bit-for-bit."""

    version: str
    ppd: float
    ldca: np.ndarray
    on: np.ndarray
    source_hint: Optional[str] = None

    def __post_init__(self):
        ldca = np.asarray(self.ldca, dtype=np.float64)
        on = np.asarray(self.on, dtype=np.float64)
        object.__setattr__(self, "ldca", ldca)
        object.__setattr__(self, "on", on)
        if ldca.shape != (LDCA_LEN,):
            raise DimensionError(f"ldca must hold {LDCA_LEN} values, got {ldca.shape}")
        if on.shape != (ON_LEN,):
            raise DimensionError(f"on must hold {ON_LEN} values, got {on.shape}")
        if not (np.all(np.isfinite(ldca)) and np.all(np.isfinite(on))):
            raise DimensionError("packet features must be finite")

    def to_json(self) -> str:
        # Field order is fixed so identical packets serialize identically.
        doc = {
            "version": self.version,
            "ppd": float(self.ppd),
            "ldca": [float(v) for v in self.ldca],
            "on": [float(v) for v in self.on],
            "source_hint": self.source_hint,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "RRFeaturePacket":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"packet is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise FormatError("packet must be a JSON object")
        version = doc.get("version")
        if version != PACKET_VERSION:
            raise PacketVersionError(
                f"unsupported packet version {version!r}, expected {PACKET_VERSION!r}")
        for key in ("ppd", "ldca", "on"):
            if key not in doc:
                raise FormatError(f"packet missing field {key!r}")
        return cls(version=version, ppd=float(doc["ppd"]),
                   ldca=np.asarray(doc["ldca"], dtype=np.float64),
                   on=np.asarray(doc["on"], dtype=np.float64),
                   source_hint=doc.get("source_hint"))


def extract_rr_packet(reference: YCbCrImage,
                      cfg: ChannelConfig = ChannelConfig()) -> RRFeaturePacket:
    """Build the side-channel packet for a haze-free reference."""
    ldca = np.concatenate([ld_features(reference.y, cfg),
                           ca_features(reference.cb, reference.cr)])
    on = on_features(reference, cfg.local_moment)
    return RRFeaturePacket(version=PACKET_VERSION, ppd=cfg.ppd, ldca=ldca, on=on,
                           source_hint=reference.source_path or None)


def rrpd_score(packet: RRFeaturePacket, dehazed: YCbCrImage,
               cfg: ChannelConfig = ChannelConfig()) -> float:
    """Partial-discrepancy quality: the mean absolute LDCA difference
    times the mean absolute naturalness difference. Zero iff at least
    one block matches exactly; larger means worse predicted quality."""
    if packet.version != PACKET_VERSION:
        raise PacketVersionError(
            f"unsupported packet version {packet.version!r}")
    if packet.ppd != cfg.ppd:
        raise ConfigMismatchError(
            f"packet ppd {packet.ppd} != configured ppd {cfg.ppd}")
    ldca_d = np.concatenate([ld_features(dehazed.y, cfg),
                             ca_features(dehazed.cb, dehazed.cr)])
    on_d = on_features(dehazed, cfg.local_moment)
    return float(np.mean(np.abs(packet.ldca - ldca_d))
                 * np.mean(np.abs(packet.on - on_d)))
