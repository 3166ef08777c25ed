"""Stereo camera geometry: disparity <-> distance conversion.

All distances are millimetres, disparities are pixels, times are seconds.
The conversion uses a single scalar, ``stereo_constant = baseline * focal /
pixel_pitch`` (mm * pixel), so ``distance = stereo_constant / disparity``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .errors import DomainError, UsageError

DEFAULT_STEREO_CONSTANT = 560_000.0  # mm * pixel
DEFAULT_FRAME_INTERVAL = 0.05  # s
DEFAULT_FOCAL_OVER_PITCH = 1600.0  # pixel (focal length / pixel pitch)


@dataclass(frozen=True)
class CameraModel:
    """Stereo rig description.

    Either set ``stereo_constant`` directly (the default carries a realistic
    automotive value) or pass all three of ``baseline_mm``, ``focal_mm`` and
    ``pitch_mm_per_px``, in which case the constant is recomputed from them.
    ``focal_over_pitch_px`` is the monocular scale used to turn an apparent
    width in pixels into a distance.
    """

    stereo_constant: float = DEFAULT_STEREO_CONSTANT  # mm * pixel
    frame_interval: float = DEFAULT_FRAME_INTERVAL  # s
    focal_over_pitch_px: float = DEFAULT_FOCAL_OVER_PITCH  # pixel
    baseline_mm: Optional[float] = None
    focal_mm: Optional[float] = None
    pitch_mm_per_px: Optional[float] = None

    def __post_init__(self) -> None:
        parts = (self.baseline_mm, self.focal_mm, self.pitch_mm_per_px)
        given = [p for p in parts if p is not None]
        if given and len(given) != 3:
            raise UsageError(
                "baseline_mm, focal_mm and pitch_mm_per_px must be given together"
            )
        if given:
            if any(p <= 0 for p in given):
                raise UsageError("camera intrinsics must be positive")
            object.__setattr__(
                self,
                "stereo_constant",
                self.baseline_mm * self.focal_mm / self.pitch_mm_per_px,
            )
        if self.stereo_constant <= 0:
            raise UsageError("stereo_constant must be positive")
        if self.frame_interval <= 0:
            raise UsageError("frame_interval must be positive")
        if self.focal_over_pitch_px <= 0:
            raise UsageError("focal_over_pitch_px must be positive")

    @classmethod
    def from_config(cls, cfg: Mapping) -> "CameraModel":
        """Build a model from a plain mapping (JSON ``camera`` section)."""
        known = {
            "stereo_constant",
            "frame_interval",
            "focal_over_pitch_px",
            "baseline_mm",
            "focal_mm",
            "pitch_mm_per_px",
        }
        unknown = set(cfg) - known
        if unknown:
            raise UsageError(f"unknown camera config keys: {sorted(unknown)}")
        return cls(**cfg)


def disparity_to_distance(model: CameraModel, disparity_px: float) -> float:
    """Distance (mm) for a disparity (pixel). Disparity must be positive."""
    if not disparity_px > 0:
        raise DomainError(f"disparity must be positive, got {disparity_px}")
    return model.stereo_constant / disparity_px


def distance_to_disparity(model: CameraModel, distance_mm: float) -> float:
    """Disparity (pixel) for a distance (mm). Distance must be positive."""
    if not distance_mm > 0:
        raise DomainError(f"distance must be positive, got {distance_mm}")
    return model.stereo_constant / distance_mm
