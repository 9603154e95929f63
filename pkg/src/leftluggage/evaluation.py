"""Frame-level and box-level (pixel-level) precision / recall / F1."""

from __future__ import annotations

import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .imgproc import BoundingBox, bbox_iou


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class Annotation:
    frame_start: int
    frame_end: int
    bbox: BoundingBox

    def __post_init__(self):
        if self.frame_start > self.frame_end:
            raise AnnotationError(f"frame_start {self.frame_start} > frame_end {self.frame_end}")

    def active(self, frame: int) -> bool:
        return self.frame_start <= frame <= self.frame_end


@dataclass(frozen=True)
class DetectionRecord:
    frame_index: int
    bbox: BoundingBox
    track_id: int = 0
    score: float = 1.0


@dataclass
class LevelMetrics:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


@dataclass
class MetricsReport:
    frame_level: LevelMetrics
    pixel_level: LevelMetrics

    def format(self) -> str:
        rows = [
            "level   precision  recall   f1       tp      fp      fn",
        ]
        for name, m in (("frame", self.frame_level), ("pixel", self.pixel_level)):
            rows.append(
                f"{name:<7} {100 * m.precision:8.2f}% {100 * m.recall:7.2f}% {100 * m.f1:7.2f}% "
                f"{m.tp:7d} {m.fp:7d} {m.fn:7d}"
            )
        return "\n".join(rows) + "\n"


def f1_score(p: float, r: float) -> float:
    if p + r == 0:
        return 0.0
    return 2.0 * p * r / (p + r)


def _level(tp: int, fp: int, fn: int) -> LevelMetrics:
    p = tp / (tp + fp) if tp + fp else 1.0
    r = tp / (tp + fn) if tp + fn else 1.0
    return LevelMetrics(p, r, f1_score(p, r), tp, fp, fn)


def _by_frame(dets: Iterable[DetectionRecord]) -> Dict[int, List[DetectionRecord]]:
    out: Dict[int, List[DetectionRecord]] = defaultdict(list)
    for d in dets:
        out[d.frame_index].append(d)
    return out


def frame_metrics(
    dets: Sequence[DetectionRecord],
    gts: Sequence[Annotation],
    n_frames: int,
    ignore: Optional[Set[int]] = None,
) -> LevelMetrics:
    """Per frame: does the system flag anything, and is anything actually there."""
    detected = np.zeros(n_frames, dtype=bool)
    for d in dets:
        detected[d.frame_index] = True
    positive = np.zeros(n_frames, dtype=bool)
    for a in gts:
        positive[max(a.frame_start, 0):min(a.frame_end, n_frames - 1) + 1] = True
    if ignore:
        keep = np.ones(n_frames, dtype=bool)
        keep[[f for f in ignore if 0 <= f < n_frames]] = False
        detected, positive = detected[keep], positive[keep]
    tp = int(np.sum(detected & positive))
    fp = int(np.sum(detected & ~positive))
    fn = int(np.sum(~detected & positive))
    return _level(tp, fp, fn)


def match_boxes(dets: Sequence[BoundingBox], gts: Sequence[BoundingBox], iou_min: float) -> List[Tuple[int, int]]:
    """Largest one-to-one set of (det, gt) pairs with IoU > iou_min.

    Among maximum-size matchings the one with the largest summed IoU wins.
    """
    if not dets or not gts:
        return []
    iou = np.array([[bbox_iou(d, g) for g in gts] for d in dets])
    valid = iou > iou_min
    if not valid.any():
        return []
    big = min(len(dets), len(gts)) + 1.0
    weight = np.where(valid, big + iou, 0.0)
    rows, cols = linear_sum_assignment(weight, maximize=True)
    return [(int(i), int(j)) for i, j in zip(rows, cols) if valid[i, j]]


def pixel_metrics(
    dets: Sequence[DetectionRecord],
    gts: Sequence[Annotation],
    n_frames: int,
    iou_min: float = 0.2,
    ignore: Optional[Set[int]] = None,
) -> LevelMetrics:
    det_frames = _by_frame(dets)
    tp = fp = fn = 0
    for frame in range(n_frames):
        if ignore and frame in ignore:
            continue
        ds = [d.bbox for d in det_frames.get(frame, ())]
        gs = [a.bbox for a in gts if a.active(frame)]
        matched = len(match_boxes(ds, gs, iou_min))
        tp += matched
        fp += len(ds) - matched
        fn += len(gs) - matched
    return _level(tp, fp, fn)


def evaluate(
    dets: Sequence[DetectionRecord],
    gts: Sequence[Annotation],
    n_frames: int,
    iou_min: float = 0.2,
    grace: int = 0,
) -> MetricsReport:
    gts, ignore = apply_grace(gts, grace)
    return MetricsReport(
        frame_metrics(dets, gts, n_frames, ignore),
        pixel_metrics(dets, gts, n_frames, iou_min, ignore),
    )


def apply_grace(gts: Sequence[Annotation], grace: int) -> Tuple[List[Annotation], Set[int]]:
    """Exclude the first ``grace`` frames of each annotation from scoring.

    Those frames count neither for nor against the detector, which gives the
    pipeline its warm-up latency after an object is left behind.
    """
    if grace <= 0:
        return list(gts), set()
    kept, ignore = [], set()
    for a in gts:
        cut = min(a.frame_start + grace, a.frame_end + 1)
        ignore.update(range(a.frame_start, cut))
        if cut <= a.frame_end:
            kept.append(Annotation(cut, a.frame_end, a.bbox))
    # a frame still annotated by another item is scored normally
    for a in kept:
        ignore.difference_update(range(a.frame_start, a.frame_end + 1))
    return kept, ignore


def parse_annotations(text: str, source: str = "<annotations>") -> List[Annotation]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 6:
            raise AnnotationError(f"{source}:{lineno}: expected 6 integers, got {len(fields)} fields")
        try:
            f0, f1, x, y, w, h = (int(v) for v in fields)
        except ValueError:
            raise AnnotationError(f"{source}:{lineno}: non-integer field") from None
        if f0 > f1:
            raise AnnotationError(f"{source}:{lineno}: frame_start {f0} > frame_end {f1}")
        try:
            out.append(Annotation(f0, f1, BoundingBox(x, y, w, h)))
        except ValueError as exc:
            raise AnnotationError(f"{source}:{lineno}: {exc}") from None
    return out


def load_annotations(path) -> List[Annotation]:
    if not os.path.exists(path):
        raise FileNotFoundError(f"annotation file not found: {path}")
    with open(path) as fh:
        return parse_annotations(fh.read(), str(path))


def format_annotations(gts: Iterable[Annotation]) -> str:
    return "".join(
        f"{a.frame_start} {a.frame_end} {a.bbox.x} {a.bbox.y} {a.bbox.w} {a.bbox.h}\n" for a in gts
    )


def format_detection(d: DetectionRecord) -> str:
    b = d.bbox
    return f"{d.frame_index} {d.track_id} {b.x} {b.y} {b.w} {b.h} {d.score:.4f}\n"


def parse_detections(text: str, source: str = "<detections>") -> List[DetectionRecord]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 7:
            raise ValueError(f"{source}:{lineno}: expected 'frame track_id x y w h score'")
        frame, tid, x, y, w, h = (int(v) for v in fields[:6])
        out.append(DetectionRecord(frame, BoundingBox(x, y, w, h), tid, float(fields[6])))
    return out


def load_detections(path) -> List[DetectionRecord]:
    with open(path) as fh:
        return parse_detections(fh.read(), str(path))
