"""Camera frame validation by Laplacian sharpness.

A frame is scored with the variance of the discrete 3x3 Laplacian over
its interior pixels; frames scoring below a per-camera threshold are
classified as invalid (blocked, defocused, or blank sensor).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class CameraId(Enum):
    FRONT = "Front"
    BACK = "Back"
    LEFT = "Left"
    RIGHT = "Right"


class Validity(Enum):
    VALID = "Valid"
    INVALID = "Invalid"


@dataclass(frozen=True)
class CameraFrame:
    """Row-major 8-bit grayscale image, at least 3x3."""

    width: int
    height: int
    pixels: np.ndarray
    camera_id: CameraId = CameraId.FRONT
    timestamp_ns: int = 0

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8).reshape(-1)
        if px.size != self.width * self.height:
            raise ValueError("pixel buffer does not match width*height")
        object.__setattr__(self, "pixels", px)

    def as_image(self) -> np.ndarray:
        return self.pixels.reshape(self.height, self.width)


@dataclass(frozen=True)
class ValidatorConfig:
    default_threshold: float = 100.0
    per_camera: dict[CameraId, float] = field(default_factory=dict)
    require_all_cameras: bool = True

    def threshold(self, camera_id: CameraId) -> float:
        return self.per_camera.get(camera_id, self.default_threshold)


def sharpness(frame: CameraFrame) -> float:
    """Variance of the 3x3 Laplacian (center -4, 4-neighbors +1)."""
    if frame.width < 3 or frame.height < 3:
        raise ValueError("frame must be at least 3x3")
    img = frame.as_image().astype(np.float64)
    lap = (-4.0 * img[1:-1, 1:-1] + img[:-2, 1:-1] + img[2:, 1:-1]
           + img[1:-1, :-2] + img[1:-1, 2:])
    return float(lap.var())


def validate(frame: CameraFrame, cfg: ValidatorConfig) -> Validity:
    """Invalid iff the sharpness score falls below the camera threshold."""
    if sharpness(frame) < cfg.threshold(frame.camera_id):
        return Validity.INVALID
    return Validity.VALID


def combine_validity(per_camera: dict[CameraId, Validity],
                     cfg: ValidatorConfig) -> Validity:
    """Fold per-camera results into the single SR2 flag.

    With require_all_cameras every camera must be valid; otherwise only
    the front (driving-direction) camera is considered.
    """
    if not per_camera:
        return Validity.INVALID
    if cfg.require_all_cameras:
        bad = any(v is Validity.INVALID for v in per_camera.values())
    else:
        bad = per_camera.get(CameraId.FRONT, Validity.INVALID) is Validity.INVALID
    return Validity.INVALID if bad else Validity.VALID
