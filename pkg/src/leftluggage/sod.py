"""Static object detection: foreground minus motion, then blob extraction.

Per frame the detector runs three steps: foreground against the background
model, motion from differencing frames ``motion_gap`` apart (filled to convex
components), and the static-pixel mask as their difference.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np

from .background import BackgroundModel
from .config import BackgroundConfig, SodConfig
from .imgproc import (
    BoundingBox,
    absdiff_threshold,
    connected_components,
    convex_hull_fill,
    crop,
    dilate,
    erode,
    mask_and_not,
    paint,
    to_grayscale,
)


class FrameRing:
    """Fixed-capacity buffer of recent gray frames, oldest first."""

    def __init__(self, gap: int = 5):
        if gap < 1:
            raise ValueError("motion gap must be >= 1")
        self.gap = gap
        self.capacity = gap + 1
        self.slots: deque = deque(maxlen=self.capacity)

    def push(self, gray: np.ndarray) -> None:
        self.slots.append(gray)

    def __len__(self) -> int:
        return len(self.slots)

    @property
    def primed(self) -> bool:
        return len(self.slots) == self.capacity

    @property
    def newest(self) -> np.ndarray:
        return self.slots[-1]

    @property
    def oldest(self) -> np.ndarray:
        return self.slots[0]


@dataclass(eq=False)
class StaticCandidate:
    bbox: BoundingBox
    crop: np.ndarray
    frame_index: int
    area: int = 0


def motion_mask(ring: FrameRing, tau_m: float, erode_r: int = 1, dilate_r: int = 3) -> np.ndarray:
    if not ring.primed:
        if len(ring) == 0:
            raise ValueError("motion mask needs at least one buffered frame for its dimensions")
        return np.zeros(ring.newest.shape, dtype=bool)
    raw = absdiff_threshold(ring.newest, ring.oldest, tau_m)
    cleaned = dilate(erode(raw, erode_r), dilate_r)
    h, w = cleaned.shape
    out = np.zeros_like(cleaned)
    for blob in connected_components(cleaned):
        paint(out, convex_hull_fill(blob, (w, h)))
    return out


def static_mask(fg: np.ndarray, motion: np.ndarray) -> np.ndarray:
    return mask_and_not(fg, motion)


def extract_static_candidates(
    static: np.ndarray, frame: np.ndarray, min_area: int, frame_index: int
) -> List[StaticCandidate]:
    if static.shape != frame.shape[:2]:
        raise ValueError(f"mask {static.shape} does not match frame {frame.shape[:2]}")
    out = []
    for blob in connected_components(static):
        if blob.area >= min_area:
            out.append(StaticCandidate(blob.bbox, crop(frame, blob.bbox), frame_index, blob.area))
    return out


class StaticObjectDetector:
    """Stateful per-stream runner for the static-object stage.

    Keeps the background model and the frame ring; ``step`` consumes one RGB
    frame and returns that frame's static candidates.  Intermediate masks of
    the last step are kept on the instance for overlays and debugging.
    """

    def __init__(self, bg: Optional[BackgroundConfig] = None, sod: Optional[SodConfig] = None):
        self.bg_config = bg or BackgroundConfig()
        self.config = sod or SodConfig()
        self.model = BackgroundModel(alpha=self.bg_config.alpha, tau_fg=self.bg_config.tau_fg)
        self.ring = FrameRing(self.config.motion_gap)
        self.frame_index = -1
        self.dims = None
        self.last_fg = self.last_motion = self.last_static = None

    def step(self, frame: np.ndarray, frozen: Iterable[BoundingBox] = ()) -> List[StaticCandidate]:
        if self.dims is None:
            self.dims = frame.shape
        elif frame.shape != self.dims:
            raise ValueError(f"frame dimensions changed mid-stream: {frame.shape} vs {self.dims}")
        self.frame_index += 1
        gray = to_grayscale(frame)
        self.ring.push(gray)

        if self.model.frames_seen == 0:
            self.model.update(gray)
            return []

        bgc, c = self.bg_config, self.config
        fg = self.model.foreground(gray, bgc.erode_radius, bgc.dilate_radius)
        motion = motion_mask(self.ring, c.tau_m, c.erode_radius, c.dilate_radius)
        self.model.update(gray, frozen)
        if not self.ring.primed:
            return []
        static = static_mask(fg, motion)
        self.last_fg, self.last_motion, self.last_static = fg, motion, static
        return extract_static_candidates(static, frame, c.min_area, self.frame_index)


def sod_step(state: StaticObjectDetector, frame: np.ndarray, frozen: Iterable[BoundingBox] = ()) -> List[StaticCandidate]:
    return state.step(frame, frozen)
