"""Axis-aligned boxes in center parameterization and overlap primitives.

The canonical box form everywhere in this package is (cx, cy, w, h);
corner form (x1, y1, x2, y2) only appears at conversion boundaries.
All arithmetic is 64-bit floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle: center (cx, cy), width w > 0, height h > 0."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not self.w > 0:
            raise ValueError(f"box width must be > 0, got w={self.w}")
        if not self.h > 0:
            raise ValueError(f"box height must be > 0, got h={self.h}")

    def corners(self) -> tuple[float, float, float, float]:
        """(x1, y1, x2, y2) with x1 < x2 and y1 < y2."""
        return (
            self.cx - 0.5 * self.w,
            self.cy - 0.5 * self.h,
            self.cx + 0.5 * self.w,
            self.cy + 0.5 * self.h,
        )

    @classmethod
    def from_corners(cls, x1: float, y1: float, x2: float, y2: float) -> "Box":
        if not (x1 < x2 and y1 < y2):
            raise ValueError(f"corners must satisfy x1<x2 and y1<y2, got {(x1, y1, x2, y2)}")
        return cls(0.5 * (x1 + x2), 0.5 * (y1 + y2), x2 - x1, y2 - y1)

    def area(self) -> float:
        return self.w * self.h

    def as_array(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.w, self.h], dtype=float)


@dataclass(frozen=True)
class Enclosure:
    """Smallest axis-aligned rectangle covering two boxes.

    diag_sq is the squared diagonal length, width**2 + height**2,
    stored exactly as computed.
    """

    width: float
    height: float
    diag_sq: float


def corners(b: Box) -> tuple[float, float, float, float]:
    return b.corners()


def iou(a: Box, b: Box) -> float:
    """Intersection over union, in [0, 1].

    Touching boxes (zero-area overlap) score 0; disjoint boxes score 0.
    """
    ax1, ay1, ax2, ay2 = a.corners()
    bx1, by1, bx2, by2 = b.corners()
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area() + b.area() - inter
    return inter / union


def enclosing(a: Box, b: Box) -> Enclosure:
    """Tightest axis-aligned rectangle containing both boxes."""
    ax1, ay1, ax2, ay2 = a.corners()
    bx1, by1, bx2, by2 = b.corners()
    cw = max(ax2, bx2) - min(ax1, bx1)
    ch = max(ay2, by2) - min(ay1, by1)
    return Enclosure(width=cw, height=ch, diag_sq=cw * cw + ch * ch)


def center_dist_sq(a: Box, b: Box) -> float:
    """Squared Euclidean distance between the two centers."""
    dx = a.cx - b.cx
    dy = a.cy - b.cy
    return dx * dx + dy * dy


def raster_iou_oracle(a: Box, b: Box, resolution: int) -> float:
    """Estimate IOU by counting grid-cell centers, for testing only.

    A resolution x resolution grid is laid over the union enclosure of the
    two boxes; a cell belongs to a box when its center lies strictly inside.
    Converges to iou(a, b) as resolution grows.
    """
    if resolution < 16:
        raise ValueError(f"resolution must be >= 16, got {resolution}")
    ax1, ay1, ax2, ay2 = a.corners()
    bx1, by1, bx2, by2 = b.corners()
    x_lo, x_hi = min(ax1, bx1), max(ax2, bx2)
    y_lo, y_hi = min(ay1, by1), max(ay2, by2)
    xs = x_lo + (np.arange(resolution) + 0.5) * ((x_hi - x_lo) / resolution)
    ys = y_lo + (np.arange(resolution) + 0.5) * ((y_hi - y_lo) / resolution)
    in_a = ((xs > ax1) & (xs < ax2))[:, None] & ((ys > ay1) & (ys < ay2))[None, :]
    in_b = ((xs > bx1) & (xs < bx2))[:, None] & ((ys > by1) & (ys < by2))[None, :]
    inter = int(np.count_nonzero(in_a & in_b))
    union = int(np.count_nonzero(in_a | in_b))
    if union == 0:
        return 0.0
    return inter / union
