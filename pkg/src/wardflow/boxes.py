"""Axis-aligned bounding boxes, detection records, and box geometry.

Boxes use image-raster conventions: (x, y) is the top-left corner,
y grows downward, coordinates are real-valued pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum


class ObjectClass(str, Enum):
    PATIENT = "patient"
    WORKER = "worker"


@dataclass(frozen=True)
class BoundingBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box extent must be positive, got w={self.w}, h={self.h}")

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def translated(self, dx: float, dy: float) -> "BoundingBox":
        return BoundingBox(self.x + dx, self.y + dy, self.w, self.h)

    def scaled(self, s: float) -> "BoundingBox":
        """Scale about the origin by a positive factor."""
        return BoundingBox(self.x * s, self.y * s, self.w * s, self.h * s)

    def clamped(self, width: float, height: float) -> "BoundingBox | None":
        """Clip to [0, width] x [0, height]; None if nothing remains."""
        x0 = max(self.x, 0.0)
        y0 = max(self.y, 0.0)
        x1 = min(self.right, float(width))
        y1 = min(self.bottom, float(height))
        if x1 - x0 <= 0 or y1 - y0 <= 0:
            return None
        return BoundingBox(x0, y0, x1 - x0, y1 - y0)


def area(b: BoundingBox) -> float:
    return b.w * b.h


def intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.right, b.right) - max(a.x, b.x)
    ih = min(a.bottom, b.bottom) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def iou(a: BoundingBox, b: BoundingBox) -> float:
    inter = intersection_area(a, b)
    union = area(a) + area(b) - inter
    return inter / union


def pixel_span(b: BoundingBox, width: int, height: int) -> tuple[slice, slice] | None:
    """Rows/cols slices of the pixels whose integer index lies in the box.

    Pixel (r, c) is covered iff x <= c < x+w and y <= r < y+h.  For
    integer boxes this selects exactly w*h pixels.  Returns None when
    the box misses the frame entirely.
    """
    c0 = max(0, math.ceil(b.x))
    c1 = min(width, math.ceil(b.right))
    r0 = max(0, math.ceil(b.y))
    r1 = min(height, math.ceil(b.bottom))
    if c1 <= c0 or r1 <= r0:
        return None
    return slice(r0, r1), slice(c0, c1)


@dataclass(frozen=True)
class Detection:
    box: BoundingBox
    cls: ObjectClass
    confidence: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass
class FrameDetections:
    timestamp: float
    detections: list[Detection] = field(default_factory=list)

    def __post_init__(self):
        if self.timestamp < 0:
            raise ValueError("timestamp must be non-negative")

    def of_class(self, cls: ObjectClass, conf_min: float = 0.0) -> list[Detection]:
        return [d for d in self.detections if d.cls == cls and d.confidence >= conf_min]

    def patients(self, conf_min: float = 0.0) -> list[Detection]:
        return self.of_class(ObjectClass.PATIENT, conf_min)

    def workers(self, conf_min: float = 0.0) -> list[Detection]:
        return self.of_class(ObjectClass.WORKER, conf_min)

    def best_patient(self, conf_min: float = 0.0) -> Detection | None:
        """Highest-confidence patient detection, if any."""
        patients = self.patients(conf_min)
        if not patients:
            return None
        return max(patients, key=lambda d: d.confidence)
