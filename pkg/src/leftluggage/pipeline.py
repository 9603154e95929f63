"""Frame-by-frame composition: static objects -> tracks -> cascade verdicts."""

from __future__ import annotations

from typing import Iterable, Iterator, List, Optional

import numpy as np

from .cascade import ClassifierModel, Verdict, classify_step, refresh_verdict
from .config import PipelineConfig
from .evaluation import DetectionRecord
from .imgproc import BoundingBox
from .sod import StaticObjectDetector
from .tracker import Track, TrackStore


class Pipeline:
    """One video stream's worth of detector state.

    ``process`` takes frames in order and returns the detections for that
    frame: one record per track matched in the frame whose current verdict
    is abandoned.
    """

    def __init__(self, stage1: ClassifierModel, stage2: ClassifierModel, config: Optional[PipelineConfig] = None):
        self.config = config or PipelineConfig()
        self.stage1 = stage1
        self.stage2 = stage2
        self.sod = StaticObjectDetector(self.config.bg, self.config.sod)
        self.tracks = TrackStore(self.config.track.iou_min, self.config.track.miss_limit)
        self.closed: List[Track] = []
        self.frame_index = -1

    def process(self, frame: np.ndarray) -> List[DetectionRecord]:
        self.frame_index += 1
        idx = self.frame_index
        cc = self.config.cascade
        frozen = [t.bbox for t in self.tracks]
        candidates = self.sod.step(frame, frozen)
        touched = []
        for track_id, _ in self.tracks.associate(candidates):
            track = self.tracks.active[track_id]
            before = len(track.scores)
            classify_step(track, frame, cc.interval, self.stage1, self.stage2, idx)
            if len(track.scores) != before:
                refresh_verdict(track, cc.window, cc.effective_sigma)
            touched.append(track)
        self.closed.extend(self.tracks.prune(idx))
        out = []
        for track in sorted(touched, key=lambda t: t.id):
            if track.verdict.label is Verdict.ABANDONED:
                score = track.smoothed[-1] if track.smoothed else 0.0
                out.append(DetectionRecord(idx, track.bbox, track.id, score))
        return out

    def run(self, frames: Iterable[np.ndarray]) -> Iterator[List[DetectionRecord]]:
        for frame in frames:
            yield self.process(frame)


def detect(frames: Iterable[np.ndarray], stage1, stage2, config: Optional[PipelineConfig] = None) -> List[DetectionRecord]:
    pipe = Pipeline(stage1, stage2, config)
    out: List[DetectionRecord] = []
    for dets in pipe.run(frames):
        out.extend(dets)
    return out


OVERLAY_COLOR = (255, 0, 255)


def draw_boxes(frame: np.ndarray, boxes: Iterable[BoundingBox], color=OVERLAY_COLOR) -> np.ndarray:
    """Copy of ``frame`` with one-pixel box outlines burned in."""
    out = frame.copy()
    for b in boxes:
        out[b.y, b.x:b.x2] = color
        out[b.y2 - 1, b.x:b.x2] = color
        out[b.y:b.y2, b.x] = color
        out[b.y:b.y2, b.x2 - 1] = color
    return out
