"""IoU association of static candidates into tracks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .cascade import ScoreSeries, TrackVerdict
from .imgproc import BoundingBox, bbox_iou
from .sod import StaticCandidate


@dataclass
class Track:
    id: int
    history: List[Tuple[int, BoundingBox]] = field(default_factory=list)
    scores: ScoreSeries = field(default_factory=ScoreSeries)
    verdict: TrackVerdict = field(default_factory=TrackVerdict)
    smoothed: List[float] = field(default_factory=list)

    @property
    def last_seen(self) -> int:
        return self.history[-1][0]

    @property
    def first_seen(self) -> int:
        return self.history[0][0]

    @property
    def bbox(self) -> BoundingBox:
        return self.history[-1][1]

    def extend(self, frame_index: int, bbox: BoundingBox) -> None:
        if self.history and frame_index <= self.last_seen:
            raise ValueError(f"track {self.id}: frame {frame_index} not after {self.last_seen}")
        self.history.append((frame_index, bbox))


def greedy_pairs(
    left: Sequence[BoundingBox], right: Sequence[BoundingBox], threshold: float
) -> List[Tuple[int, int, float]]:
    """One-to-one pairs with IoU > threshold, taken in descending IoU order.

    Ties break on (left index, right index) so the result is deterministic.
    """
    scored = []
    for i, a in enumerate(left):
        for j, b in enumerate(right):
            v = bbox_iou(a, b)
            if v > threshold:
                scored.append((-v, i, j))
    scored.sort()
    used_l, used_r, out = set(), set(), []
    for neg, i, j in scored:
        if i in used_l or j in used_r:
            continue
        used_l.add(i)
        used_r.add(j)
        out.append((i, j, -neg))
    return out


class TrackStore:
    def __init__(self, iou_min: float = 0.5, miss_limit: int = 25):
        self.iou_min = iou_min
        self.miss_limit = miss_limit
        self.active: Dict[int, Track] = {}
        self.next_id = 1

    def __iter__(self):
        return iter(self.active.values())

    def __len__(self) -> int:
        return len(self.active)

    def open(self, frame_index: int, bbox: BoundingBox) -> Track:
        track = Track(self.next_id)
        track.extend(frame_index, bbox)
        self.active[track.id] = track
        self.next_id += 1
        return track

    def associate(
        self, candidates: Sequence[StaticCandidate], iou_min: Optional[float] = None
    ) -> List[Tuple[int, StaticCandidate]]:
        threshold = self.iou_min if iou_min is None else iou_min
        tracks = list(self.active.values())
        pairs = greedy_pairs([c.bbox for c in candidates], [t.bbox for t in tracks], threshold)
        owner = {ci: tracks[ti] for ci, ti, _ in pairs}
        out = []
        for ci, cand in enumerate(candidates):
            track = owner.get(ci)
            if track is None:
                track = self.open(cand.frame_index, cand.bbox)
            else:
                track.extend(cand.frame_index, cand.bbox)
            out.append((track.id, cand))
        return out

    def prune(self, frame_index: int) -> List[Track]:
        stale = [t for t in self.active.values() if frame_index - t.last_seen > self.miss_limit]
        for t in stale:
            del self.active[t.id]
        return stale


def associate(store: TrackStore, candidates: Sequence[StaticCandidate], iou_min: float = 0.5):
    return store.associate(candidates, iou_min)


def prune(store: TrackStore, frame_index: int) -> List[Track]:
    return store.prune(frame_index)
