"""Two-stage classifier cascade and per-track temporal decision logic.

Stage one sees the tight crop of a static object; stage two only runs when
stage one is positive and sees the widened context box, where a person
standing next to the object would show up.  Per-track scores are sampled
every ``interval`` frames, Gaussian-smoothed over frame distance, turned
into signs, and majority-voted.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np

from .imgproc import BoundingBox, crop, expand_bbox

FEATURE_SIDE = 32
FEATURE_DIM = FEATURE_SIDE * FEATURE_SIDE
MODEL_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


class ClassifierModel(Protocol):
    def predict(self, crop: np.ndarray) -> float:
        """Score in [-1, 1]; positive means the target class."""


class Verdict(enum.Enum):
    ABANDONED = "abandoned"
    NOT_ABANDONED = "not_abandoned"
    UNDECIDED = "undecided"


@dataclass
class ScoreSeries:
    entries: List[Tuple[int, float]] = field(default_factory=list)

    def append(self, frame_index: int, score: float) -> None:
        if self.entries and frame_index <= self.entries[-1][0]:
            raise ValueError("score frame indices must increase")
        self.entries.append((frame_index, float(score)))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def frames(self) -> List[int]:
        return [f for f, _ in self.entries]

    @property
    def values(self) -> List[float]:
        return [s for _, s in self.entries]


@dataclass
class TrackVerdict:
    label: Verdict = Verdict.UNDECIDED
    votes_pos: int = 0
    votes_neg: int = 0


@lru_cache(maxsize=512)
def _area_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Row i averages input cells over [i*n_in/n_out, (i+1)*n_in/n_out)."""
    m = np.zeros((n_out, n_in))
    scale = n_in / n_out
    for i in range(n_out):
        lo, hi = i * scale, (i + 1) * scale
        for j in range(int(math.floor(lo)), min(int(math.ceil(hi)), n_in)):
            m[i, j] = max(0.0, min(hi, j + 1) - max(lo, j))
    m /= m.sum(axis=1, keepdims=True)
    m.setflags(write=False)
    return m


def extract_features(crop_img: np.ndarray) -> np.ndarray:
    """Area-average resize to 32x32 luma in [0, 1], flattened row-major."""
    if crop_img.size == 0:
        raise ValueError("empty crop")
    f = crop_img.astype(np.float64)
    luma = (299.0 * f[..., 0] + 587.0 * f[..., 1] + 114.0 * f[..., 2]) / 255000.0
    h, w = luma.shape
    small = _area_matrix(h, FEATURE_SIDE) @ luma @ _area_matrix(w, FEATURE_SIDE).T
    return small.ravel()


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float = 0.0
    loss_history: List[float] = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.bias):
            raise ValueError("model parameters must be finite")

    @property
    def input_dim(self) -> int:
        return len(self.weights)

    def decision(self, features: np.ndarray) -> np.ndarray:
        return features @ self.weights + self.bias

    def predict(self, crop_img: np.ndarray) -> float:
        return float(2.0 * _sigmoid(self.decision(extract_features(crop_img))) - 1.0)

    def predict_features(self, features: np.ndarray) -> np.ndarray:
        return 2.0 * _sigmoid(self.decision(features)) - 1.0

    @classmethod
    def zeros(cls, input_dim: int = FEATURE_DIM) -> "LinearModel":
        return cls(np.zeros(input_dim), 0.0)


def predict(model: ClassifierModel, crop_img: np.ndarray) -> float:
    return model.predict(crop_img)


def train_linear(
    samples,
    epochs: int = 50,
    learning_rate: float = 0.05,
    seed: int = 0,
    l2: float = 1e-3,
) -> LinearModel:
    """Logistic regression by per-sample SGD over a seeded shuffle each epoch.

    ``samples`` is a sequence of (image, label) pairs or anything with a
    ``samples`` attribute of objects carrying ``image`` and ``label``;
    labels are truthy for the positive class.
    """
    items = getattr(samples, "samples", samples)
    if len(items) == 0:
        raise ValueError("cannot train on an empty dataset")
    x, y = _design_matrix(items)
    if y.min() == y.max():
        raise ValueError("training data contains a single class")
    return train_on_features(x, y, epochs, learning_rate, seed, l2)


def _design_matrix(items) -> Tuple[np.ndarray, np.ndarray]:
    feats, labels = [], []
    for it in items:
        img, label = (it.image, it.positive) if hasattr(it, "image") else it
        feats.append(extract_features(img))
        labels.append(1.0 if label else 0.0)
    return np.stack(feats), np.asarray(labels)


def train_on_features(
    x: np.ndarray, y: np.ndarray, epochs: int, learning_rate: float, seed: int, l2: float = 1e-3
) -> LinearModel:
    # SGD runs on standardized features; the scaling is folded back into the
    # returned weights so the model consumes raw features.
    mu = x.mean(axis=0)
    scale = 1.0 / (x.std(axis=0) + 1e-3)
    z = (x - mu) * scale
    rng = np.random.default_rng(seed)
    w = np.zeros(x.shape[1])
    b = 0.0
    history: List[float] = []
    for epoch in range(epochs):
        step = learning_rate / (1.0 + 0.1 * epoch)
        for i in rng.permutation(len(y)):
            g = _sigmoid(z[i] @ w + b) - y[i]
            w -= step * (g * z[i] + l2 * w)
            b -= step * g
        history.append(float(np.mean(np.logaddexp(0.0, np.where(y > 0, -1.0, 1.0) * (z @ w + b)))))
    folded = w * scale
    return LinearModel(folded, float(b - folded @ mu), history)


def accuracy(model: LinearModel, samples) -> float:
    """Fraction of samples whose score sign matches the label."""
    items = getattr(samples, "samples", samples)
    x, y = _design_matrix(items)
    pred = model.predict_features(x) > 0
    return float(np.mean(pred == (y > 0)))


def save_model(model: LinearModel, path) -> None:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "input_dim": model.input_dim,
        "weights": [float(v) for v in model.weights],
        "bias": float(model.bias),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path, input_dim: int = FEATURE_DIM) -> LinearModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not a model document ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported format_version {doc.get('format_version')!r}")
    try:
        weights = np.asarray(doc["weights"], dtype=np.float64)
        bias = float(doc["bias"])
        declared = int(doc["input_dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: malformed model ({exc})") from exc
    if declared != input_dim or weights.shape != (input_dim,):
        raise ModelFormatError(f"{path}: input_dim {declared}/{weights.shape} does not match {input_dim}")
    return LinearModel(weights, bias)


def cascade_score(
    stage1: ClassifierModel, stage2: ClassifierModel, frame: np.ndarray, bbox: BoundingBox
) -> float:
    s1 = stage1.predict(crop(frame, bbox))
    if s1 <= 0:
        return s1
    h, w = frame.shape[:2]
    return stage2.predict(crop(frame, expand_bbox(bbox, (w, h))))


def classify_step(
    track,
    frame: np.ndarray,
    interval: int,
    stage1: ClassifierModel,
    stage2: ClassifierModel,
    frame_index: Optional[int] = None,
) -> ScoreSeries:
    """Score the track's current box when its age is a multiple of ``interval``."""
    now = track.last_seen if frame_index is None else frame_index
    age = now - track.first_seen
    if age >= 0 and age % interval == 0:
        track.scores.append(now, cascade_score(stage1, stage2, frame, track.bbox))
    return track.scores


def gaussian_weights(offsets: np.ndarray, sigma: float) -> np.ndarray:
    w = np.exp(-(offsets.astype(np.float64) ** 2) / (2.0 * sigma * sigma))
    return w / w.sum()


def smooth_scores(series: ScoreSeries, window: int = 25, sigma: Optional[float] = None) -> List[float]:
    """Gaussian average over neighbors within (window-1)/2 frames, renormalized at edges."""
    if window % 2 == 0:
        raise ValueError("smoothing window must be odd")
    sigma = window / 6.0 if sigma is None else sigma
    half = (window - 1) // 2
    frames = np.asarray(series.frames, dtype=np.int64)
    values = np.asarray(series.values, dtype=np.float64)
    out = []
    for f in frames:
        near = np.abs(frames - f) <= half
        out.append(float(gaussian_weights(frames[near] - f, sigma) @ values[near]))
    return out


def sign_labels(smoothed: Sequence[float]) -> List[int]:
    return [1 if s >= 0 else -1 for s in smoothed]


def vote_track(labels: Sequence[int]) -> TrackVerdict:
    pos = sum(1 for v in labels if v > 0)
    neg = len(labels) - pos
    if not labels:
        return TrackVerdict(Verdict.UNDECIDED, 0, 0)
    label = Verdict.ABANDONED if pos >= neg else Verdict.NOT_ABANDONED
    return TrackVerdict(label, pos, neg)


def refresh_verdict(track, window: int = 25, sigma: Optional[float] = None) -> TrackVerdict:
    """Re-run smoothing, sign transfer and voting over the track's full score history."""
    track.smoothed = smooth_scores(track.scores, window, sigma)
    track.verdict = vote_track(sign_labels(track.smoothed))
    return track.verdict
