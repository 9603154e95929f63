"""Running-average background estimate and the foreground mask built from it."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .imgproc import BoundingBox, absdiff_threshold, dilate, erode


@dataclass
class BackgroundModel:
    """Per-pixel exponential running average over gray frames.

    The first update copies the frame; later updates blend with weight
    ``alpha`` everywhere except inside the frozen boxes passed in.
    """

    alpha: float = 0.002
    tau_fg: float = 30.0
    mean: Optional[np.ndarray] = field(default=None, repr=False)
    frames_seen: int = 0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")

    @property
    def shape(self):
        return None if self.mean is None else self.mean.shape

    def update(self, gray: np.ndarray, frozen: Iterable[BoundingBox] = ()) -> "BackgroundModel":
        if self.mean is None:
            self.mean = gray.astype(np.float64)
            self.frames_seen = 1
            return self
        if gray.shape != self.mean.shape:
            raise ValueError(f"dimension mismatch: {gray.shape} vs {self.mean.shape}")
        frozen = list(frozen)
        if frozen:
            saved = [(b, self.mean[b.y:b.y2, b.x:b.x2].copy()) for b in frozen]
        self.mean *= 1.0 - self.alpha
        self.mean += self.alpha * gray
        if frozen:
            # restore in reverse so overlapping boxes all end up with pre-update values
            for b, patch in reversed(saved):
                self.mean[b.y:b.y2, b.x:b.x2] = patch
        self.frames_seen += 1
        return self

    def estimate(self) -> np.ndarray:
        if self.mean is None:
            raise RuntimeError("background estimate requested before any update")
        return np.floor(self.mean + 0.5).clip(0, 255).astype(np.uint8)

    def foreground(self, gray: np.ndarray, erode_r: int = 1, dilate_r: int = 1) -> np.ndarray:
        m = absdiff_threshold(gray, self.estimate(), self.tau_fg)
        return dilate(erode(m, erode_r), dilate_r)


def bg_update(model: BackgroundModel, gray: np.ndarray, frozen: Iterable[BoundingBox] = ()) -> BackgroundModel:
    return model.update(gray, frozen)


def bg_estimate(model: BackgroundModel) -> np.ndarray:
    return model.estimate()


def foreground_mask(model: BackgroundModel, gray: np.ndarray, erode_r: int = 1, dilate_r: int = 1) -> np.ndarray:
    return model.foreground(gray, erode_r, dilate_r)
