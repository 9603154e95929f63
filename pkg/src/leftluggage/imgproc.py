"""Raster primitives shared by the whole pipeline.

Images are plain numpy arrays:

* frame -- ``(H, W, 3)`` uint8, RGB
* gray  -- ``(H, W)`` uint8
* mask  -- ``(H, W)`` bool

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import ndimage

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box, top-left corner plus extent, in pixels."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"box extent must be positive, got {self.w}x{self.h}")

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def inside(self, width: int, height: int) -> bool:
        return self.x >= 0 and self.y >= 0 and self.x2 <= width and self.y2 <= height

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.x, self.y, self.w, self.h)


@dataclass(eq=False)
class Blob:
    """A connected set of pixels. ``pixels`` is an ``(N, 2)`` int array of (x, y)."""

    pixels: np.ndarray
    bbox: BoundingBox

    @property
    def area(self) -> int:
        return len(self.pixels)

    def pixel_set(self) -> frozenset:
        return frozenset(map(tuple, self.pixels.tolist()))

    @classmethod
    def from_pixels(cls, pixels) -> "Blob":
        pts = np.asarray(sorted(set(map(tuple, pixels)), key=lambda p: (p[1], p[0])), dtype=np.int64)
        if pts.size == 0:
            raise ValueError("blob needs at least one pixel")
        pts = pts.reshape(-1, 2)
        x0, y0 = pts.min(axis=0)
        x1, y1 = pts.max(axis=0)
        return cls(pts, BoundingBox(int(x0), int(y0), int(x1 - x0 + 1), int(y1 - y0 + 1)))


def _same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[:2] != b.shape[:2]:
        raise ValueError(f"dimension mismatch: {a.shape[:2]} vs {b.shape[:2]}")


def to_grayscale(frame: np.ndarray) -> np.ndarray:
    # BT.601 luma in exact integer arithmetic, rounding half up
    f = frame.astype(np.int32)
    acc = 299 * f[..., 0] + 587 * f[..., 1] + 114 * f[..., 2]
    return ((acc + 500) // 1000).astype(np.uint8)


def absdiff_threshold(a: np.ndarray, b: np.ndarray, tau: float) -> np.ndarray:
    _same_shape(a, b)
    diff = np.abs(a.astype(np.int16) - b.astype(np.int16))
    return diff > tau


def _shift_reduce(m: np.ndarray, radius: int, axis: int, fill: bool, op) -> np.ndarray:
    n = m.shape[axis]
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    p = np.pad(m, pad, constant_values=fill)
    out = p.take(range(0, n), axis=axis).copy()
    for k in range(1, 2 * radius + 1):
        op(out, p.take(range(k, k + n), axis=axis), out=out)
    return out


def erode(m: np.ndarray, radius: int) -> np.ndarray:
    """Square erosion; pixels beyond the border count as unset."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    m = np.asarray(m, dtype=bool)
    rows = _shift_reduce(m, radius, 1, False, np.logical_and)
    return _shift_reduce(rows, radius, 0, False, np.logical_and)


def dilate(m: np.ndarray, radius: int) -> np.ndarray:
    """Square dilation by a (2r+1)x(2r+1) structuring element."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    m = np.asarray(m, dtype=bool)
    rows = _shift_reduce(m, radius, 1, False, np.logical_or)
    return _shift_reduce(rows, radius, 0, False, np.logical_or)


def connected_components(m: np.ndarray) -> List[Blob]:
    """8-connected components, ordered by (bbox.y, bbox.x, first pixel in raster order)."""
    labels, n = ndimage.label(m, structure=_EIGHT)
    if n == 0:
        return []
    blobs = []
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        ys, xs = np.nonzero(labels[sl] == idx)
        y0, x0 = sl[0].start, sl[1].start
        pixels = np.stack([xs + x0, ys + y0], axis=1).astype(np.int64)
        bbox = BoundingBox(int(x0), int(y0), sl[1].stop - x0, sl[0].stop - y0)
        blobs.append(Blob(pixels, bbox))
    # labels are issued in raster order of first pixel, so a stable sort keeps that tie-break
    blobs.sort(key=lambda b: (b.bbox.y, b.bbox.x))
    return blobs


def _cross(o, a, b) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> List[Tuple[int, int]]:
    """Monotone chain over integer points; counter-clockwise, collinear points dropped."""
    pts = sorted(set(map(tuple, points)))
    if len(pts) <= 2:
        return pts
    lower: List[Tuple[int, int]] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: List[Tuple[int, int]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return hull


def _row_extremes(pixels: np.ndarray) -> np.ndarray:
    # the hull of a pixel set equals the hull of each row's leftmost and rightmost pixel
    ys = pixels[:, 1]
    order = np.lexsort((pixels[:, 0], ys))
    p = pixels[order]
    ys = p[:, 1]
    first = np.r_[True, ys[1:] != ys[:-1]]
    last = np.r_[ys[1:] != ys[:-1], True]
    return np.concatenate([p[first], p[last]])


def convex_hull_fill(blob: Blob, dims: Tuple[int, int]) -> Blob:
    """Every pixel whose center is inside or on the hull of the blob's pixel centers."""
    width, height = dims
    hull = convex_hull(_row_extremes(blob.pixels).tolist())
    bb = blob.bbox
    ys, xs = np.mgrid[bb.y:bb.y2, bb.x:bb.x2]
    xs = xs.ravel().astype(np.int64)
    ys = ys.ravel().astype(np.int64)
    if len(hull) == 1:
        keep = (xs == hull[0][0]) & (ys == hull[0][1])
    elif len(hull) == 2:
        (ax, ay), (bx, by) = hull
        cross = (bx - ax) * (ys - ay) - (by - ay) * (xs - ax)
        keep = cross == 0  # bbox already bounds the segment
    else:
        keep = np.ones(xs.shape, dtype=bool)
        for i in range(len(hull)):
            (ax, ay), (bx, by) = hull[i], hull[(i + 1) % len(hull)]
            keep &= (bx - ax) * (ys - ay) - (by - ay) * (xs - ax) >= 0
    keep &= (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
    pixels = np.stack([xs[keep], ys[keep]], axis=1)
    return Blob(pixels, bb)


def paint(mask: np.ndarray, blob: Blob) -> np.ndarray:
    mask[blob.pixels[:, 1], blob.pixels[:, 0]] = True
    return mask


def mask_and_not(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _same_shape(a, b)
    return np.logical_and(a, np.logical_not(b))


def bbox_iou(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def expand_bbox(b: BoundingBox, dims: Tuple[int, int]) -> BoundingBox:
    """Grow to 2h x 3w around the bottom-center anchor, then clip to the frame."""
    width, height = dims
    x0 = max(b.x - b.w, 0)
    y0 = max(b.y - b.h, 0)
    x1 = min(b.x2 + b.w, width)
    y1 = min(b.y2, height)
    return BoundingBox(x0, y0, x1 - x0, y1 - y0)


def crop(frame: np.ndarray, b: BoundingBox) -> np.ndarray:
    h, w = frame.shape[:2]
    if not b.inside(w, h):
        raise ValueError(f"box {b.as_tuple()} outside {w}x{h} frame")
    return frame[b.y:b.y2, b.x:b.x2].copy()
