"""Scene-adapted training samples built by pasting RGBA templates onto the background."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import pnm
from .imgproc import BoundingBox

POSITIVE = "positive"
NEGATIVE = "negative"
KINDS = ("luggage", "attended", "person")


@dataclass(eq=False)
class TemplateImage:
    data: np.ndarray  # (h, w, 4) uint8 RGBA
    kind: str = "luggage"
    name: str = ""

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.uint8)
        if self.data.ndim != 3 or self.data.shape[2] != 4:
            raise ValueError(f"template must be RGBA, got shape {self.data.shape}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown template kind {self.kind!r}")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @classmethod
    def load(cls, path, kind: str = "luggage") -> "TemplateImage":
        data = pnm.load(path)
        if data.ndim != 3 or data.shape[2] != 4:
            raise pnm.PnmError(f"{path}: template must be a 4-channel PAM")
        return cls(data, kind, os.path.basename(str(path)))

    def save(self, path) -> None:
        pnm.save(path, self.data)


@dataclass(eq=False)
class LabeledSample:
    image: np.ndarray
    label: str
    origin: Optional[Tuple[int, int]] = None  # crop position in the source background
    footprint: Optional[BoundingBox] = None  # template placement inside the sample

    @property
    def positive(self) -> bool:
        return self.label == POSITIVE


@dataclass(eq=False)
class SampleSet:
    samples: List[LabeledSample] = field(default_factory=list)
    seed: int = 0
    stage: str = "stage1"

    def __len__(self) -> int:
        return len(self.samples)

    def counts(self) -> Tuple[int, int]:
        pos = sum(s.positive for s in self.samples)
        return pos, len(self.samples) - pos


def composite(bg: np.ndarray, t: TemplateImage, x: int, y: int) -> np.ndarray:
    """Alpha-over paste of ``t`` at (x, y); returns a new frame."""
    h, w = bg.shape[:2]
    if x < 0 or y < 0 or x + t.width > w or y + t.height > h:
        raise ValueError(f"template {t.width}x{t.height} at ({x},{y}) exceeds {w}x{h} background")
    out = bg.copy()
    region = out[y:y + t.height, x:x + t.width].astype(np.int32)
    a = t.data[..., 3:4].astype(np.int32)
    rgb = t.data[..., :3].astype(np.int32)
    # round-half-up of (a*T + (255-a)*B) / 255
    blended = (2 * (a * rgb + (255 - a) * region) + 255) // 510
    out[y:y + t.height, x:x + t.width] = blended.astype(np.uint8)
    return out


def _check_size(bg: np.ndarray, size: Tuple[int, int], templates: Sequence[TemplateImage]) -> None:
    sw, sh = size
    h, w = bg.shape[:2]
    if sw > w or sh > h:
        raise ValueError(f"sample size {sw}x{sh} exceeds background {w}x{h}")
    for t in templates:
        if t.width > sw or t.height > sh:
            raise ValueError(f"template {t.name or t.kind} {t.width}x{t.height} exceeds sample size {sw}x{sh}")


def _random_crop(rng: np.random.Generator, bg: np.ndarray, size: Tuple[int, int]):
    sw, sh = size
    h, w = bg.shape[:2]
    x = int(rng.integers(0, w - sw + 1))
    y = int(rng.integers(0, h - sh + 1))
    return bg[y:y + sh, x:x + sw].copy(), (x, y)


def _pasted(rng, bg, templates, size, label) -> LabeledSample:
    patch, origin = _random_crop(rng, bg, size)
    t = templates[int(rng.integers(0, len(templates)))]
    tx = int(rng.integers(0, size[0] - t.width + 1))
    ty = int(rng.integers(0, size[1] - t.height + 1))
    img = composite(patch, t, tx, ty)
    return LabeledSample(img, label, origin, BoundingBox(tx, ty, t.width, t.height))


def gen_stage1(
    bg: np.ndarray,
    luggage: Sequence[TemplateImage],
    n_pos: int,
    n_neg: int,
    size: Tuple[int, int],
    seed: int,
) -> SampleSet:
    """Luggage pasted on background crops (positive) vs bare background crops (negative)."""
    if n_pos < 0 or n_neg < 0:
        raise ValueError("sample counts must be non-negative")
    if n_pos > 0 and not luggage:
        raise ValueError("positives requested but no luggage templates given")
    _check_size(bg, size, luggage)
    rng = np.random.default_rng(seed)
    samples = [_pasted(rng, bg, luggage, size, POSITIVE) for _ in range(n_pos)]
    for _ in range(n_neg):
        patch, origin = _random_crop(rng, bg, size)
        samples.append(LabeledSample(patch, NEGATIVE, origin))
    return SampleSet(samples, seed, "stage1")


def gen_stage2(
    bg: np.ndarray,
    luggage: Sequence[TemplateImage],
    attended: Sequence[TemplateImage],
    n_pos: int,
    n_neg: int,
    size: Tuple[int, int],
    seed: int,
) -> SampleSet:
    """Lone luggage (positive) vs a person standing by luggage (negative)."""
    if n_pos < 0 or n_neg < 0:
        raise ValueError("sample counts must be non-negative")
    if n_pos > 0 and not luggage:
        raise ValueError("positives requested but no luggage templates given")
    if n_neg > 0 and not attended:
        raise ValueError("negatives requested but no attended templates given")
    _check_size(bg, size, list(luggage) + list(attended))
    rng = np.random.default_rng(seed)
    samples = [_pasted(rng, bg, luggage, size, POSITIVE) for _ in range(n_pos)]
    samples += [_pasted(rng, bg, attended, size, NEGATIVE) for _ in range(n_neg)]
    return SampleSet(samples, seed, "stage2")


def augment_flip(s: LabeledSample) -> LabeledSample:
    fp = s.footprint
    if fp is not None:
        fp = BoundingBox(s.image.shape[1] - fp.x2, fp.y, fp.w, fp.h)
    return replace(s, image=s.image[:, ::-1].copy(), footprint=fp)


_BINOMIAL = np.array([1.0, 4.0, 6.0, 4.0, 1.0])


def _blur_axis(img: np.ndarray, axis: int) -> np.ndarray:
    n = img.shape[axis]
    acc = np.zeros(img.shape)
    norm = np.zeros(n)
    for k, wk in zip(range(-2, 3), _BINOMIAL):
        lo, hi = max(0, -k), min(n, n - k)
        if lo >= hi:
            continue
        dst = [slice(None)] * img.ndim
        src = [slice(None)] * img.ndim
        dst[axis], src[axis] = slice(lo, hi), slice(lo + k, hi + k)
        acc[tuple(dst)] += wk * img[tuple(src)]
        norm[lo:hi] += wk
    shape = [1] * img.ndim
    shape[axis] = n
    return acc / norm.reshape(shape)


def augment_blur(s: LabeledSample) -> LabeledSample:
    """5-tap binomial blur, separable, edge taps renormalized."""
    f = _blur_axis(_blur_axis(s.image.astype(np.float64), 1), 0)
    return replace(s, image=np.floor(f + 0.5).clip(0, 255).astype(np.uint8))


def augment(samples: SampleSet) -> SampleSet:
    """Originals plus flipped and blurred copies (training split only)."""
    out = []
    for s in samples.samples:
        out += [s, augment_flip(s), augment_blur(s)]
    return SampleSet(out, samples.seed, samples.stage)


def split(samples: SampleSet, train_fraction: float = 0.8, seed: int = 0) -> Tuple[SampleSet, SampleSet]:
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    n = len(samples)
    if n == 0:
        raise ValueError("cannot split an empty sample set")
    order = np.random.default_rng(seed).permutation(n)
    cut = math.ceil(n * train_fraction)
    pick = lambda idx: SampleSet([samples.samples[i] for i in idx], samples.seed, samples.stage)  # noqa: E731
    return pick(order[:cut]), pick(order[cut:])


MANIFEST = "manifest.txt"


def save_sample_set(samples: SampleSet, directory) -> None:
    """Write ``NNNNNN.ppm`` images and a ``filename label stage seed`` manifest."""
    os.makedirs(directory, exist_ok=True)
    lines = []
    for i, s in enumerate(samples.samples):
        name = f"{i:06d}.ppm"
        pnm.save(os.path.join(directory, name), s.image)
        lines.append(f"{name} {s.label} {samples.stage} {samples.seed}")
    with open(os.path.join(directory, MANIFEST), "w") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def load_sample_set(directory) -> SampleSet:
    path = os.path.join(directory, MANIFEST)
    samples, stage, seed = [], "stage1", 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4 or parts[1] not in (POSITIVE, NEGATIVE):
                raise ValueError(f"{path}:{lineno}: expected 'filename label stage seed'")
            name, label, stage, seed = parts[0], parts[1], parts[2], int(parts[3])
            samples.append(LabeledSample(pnm.load(os.path.join(directory, name)), label))
    return SampleSet(samples, seed, stage)
