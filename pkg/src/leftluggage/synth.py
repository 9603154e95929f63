"""Deterministic scripted scenes with exact ground truth.

Script grammar (one record per line, ``#`` starts a comment, ``key=value``
options in any order)::

    scene width=W height=H duration=N [noise=A] [seed=S] [background=SPEC]
    object NAME kind=luggage|person (template=TSPEC | w=W h=H color=R,G,B)
    waypoint NAME FRAME X Y
    abandon NAME FRAME

``background`` is a gray level (``120``), an RGB triple (``90,90,80``), the
builtin ``station`` backdrop, or a path to a P6 file.  ``template`` is
``builtin:NAME`` (see ``BUILTIN_TEMPLATES``) or a path to an RGBA PAM file.
Relative paths resolve against the script's directory.

An object is drawn from its first waypoint frame through its last one, at
the linearly interpolated position rounded to the nearest pixel.  Objects
are painted in declaration order, so later objects occlude earlier ones.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import pnm
from .evaluation import Annotation
from .imgproc import BoundingBox
from .samplegen import TemplateImage, composite

Color = Tuple[int, int, int]


class ScriptError(ValueError):
    pass


# ---------------------------------------------------------------------------
# procedural assets

WALL = (176, 176, 170)
FLOOR = (140, 135, 125)
HORIZON = 96

SUITCASE_COLORS = ((100, 60, 30), (60, 35, 20))
DUFFEL_COLORS = ((40, 90, 50), (20, 55, 30))
BACKPACK_COLORS = ((150, 110, 30), (105, 75, 15))
LUGGAGE_COLORS: Tuple[Color, ...] = SUITCASE_COLORS + DUFFEL_COLORS + BACKPACK_COLORS
SHIRT_COLORS = ((180, 30, 30), (30, 30, 140))
SKIN = (220, 180, 150)
PANTS = (25, 25, 25)
PERSON_COLORS: Tuple[Color, ...] = SHIRT_COLORS + (SKIN, PANTS)


def station_background(width: int = 360, height: int = 288) -> np.ndarray:
    """Wall above a tiled floor, with soft shading; no randomness."""
    img = np.empty((height, width, 3), dtype=np.float64)
    ys = np.arange(height)[:, None]
    xs = np.arange(width)[None, :]
    wall = ys < HORIZON
    for c in range(3):
        shade = np.where(wall, WALL[c] - 0.08 * ys, FLOOR[c] + 0.05 * (ys - HORIZON) - 0.02 * xs)
        img[..., c] = shade
    grout = (~wall) & (((ys - HORIZON) % 40 == 0) | (xs % 48 == 0))
    img[np.broadcast_to(grout, (height, width))] -= 14
    return np.floor(img + 0.5).clip(0, 255).astype(np.uint8)


def _canvas(w: int, h: int) -> np.ndarray:
    return np.zeros((h, w, 4), dtype=np.uint8)


def _fill(t: np.ndarray, x0: int, y0: int, x1: int, y1: int, color: Color, alpha: int = 255) -> None:
    t[y0:y1, x0:x1, :3] = color
    t[y0:y1, x0:x1, 3] = alpha


def _ribbed(t: np.ndarray, x0: int, y0: int, x1: int, y1: int, colors, period: int = 4) -> None:
    for x in range(x0, x1):
        _fill(t, x, y0, x + 1, y1, colors[((x - x0) // (period // 2)) % 2])


def suitcase() -> TemplateImage:
    t = _canvas(24, 18)
    _ribbed(t, 0, 3, 24, 18, SUITCASE_COLORS)
    _fill(t, 8, 0, 16, 3, SUITCASE_COLORS[1])  # handle
    return TemplateImage(t, "luggage", "suitcase")


def duffel() -> TemplateImage:
    t = _canvas(26, 14)
    _ribbed(t, 0, 2, 26, 14, DUFFEL_COLORS)
    t[2, 0, 3] = t[2, 25, 3] = t[13, 0, 3] = t[13, 25, 3] = 0  # rounded corners
    _fill(t, 9, 0, 17, 2, DUFFEL_COLORS[1])
    return TemplateImage(t, "luggage", "duffel")


def backpack() -> TemplateImage:
    t = _canvas(16, 20)
    _ribbed(t, 1, 2, 15, 20, BACKPACK_COLORS)
    _fill(t, 4, 0, 12, 2, BACKPACK_COLORS[1])
    _fill(t, 4, 10, 12, 16, BACKPACK_COLORS[1])  # pocket
    return TemplateImage(t, "luggage", "backpack")


def person() -> TemplateImage:
    t = _canvas(14, 34)
    _fill(t, 4, 0, 10, 7, SKIN)
    _ribbed(t, 1, 7, 13, 21, SHIRT_COLORS)
    _fill(t, 2, 21, 6, 34, PANTS)
    _fill(t, 8, 21, 12, 34, PANTS)
    return TemplateImage(t, "person", "person")


def _side_by_side(p: TemplateImage, bag: TemplateImage, bag_left: bool, gap: int = 2) -> TemplateImage:
    w = p.width + gap + bag.width
    h = max(p.height, bag.height)
    t = _canvas(w, h)
    px, bx = (bag.width + gap, 0) if bag_left else (0, p.width + gap)
    t[h - p.height:, px:px + p.width] = p.data
    region = t[h - bag.height:, bx:bx + bag.width]
    mask = bag.data[..., 3] > 0
    region[mask] = bag.data[mask]
    side = "left" if bag_left else "right"
    return TemplateImage(t, "attended", f"person+{bag.name}-{side}")


def luggage_templates() -> List[TemplateImage]:
    return [suitcase(), duffel(), backpack()]


def attended_templates() -> List[TemplateImage]:
    p = person()
    return [_side_by_side(p, bag, left) for bag in luggage_templates() for left in (False, True)]


BUILTIN_TEMPLATES = {
    "suitcase": suitcase,
    "duffel": duffel,
    "backpack": backpack,
    "person": person,
}


# ---------------------------------------------------------------------------
# scene scripts


@dataclass
class ObjectEvent:
    name: str
    kind: str = "luggage"
    size: Optional[Tuple[int, int]] = None  # (w, h) for solid rectangles
    color: Color = (0, 0, 0)
    template: Optional[TemplateImage] = None
    path: List[Tuple[int, float, float]] = field(default_factory=list)
    abandoned_from: Optional[int] = None

    @property
    def extent(self) -> Tuple[int, int]:
        if self.template is not None:
            return self.template.width, self.template.height
        if self.size is None:
            raise ScriptError(f"object {self.name}: needs a template or w/h")
        return self.size

    @property
    def first_frame(self) -> int:
        return self.path[0][0]

    @property
    def last_frame(self) -> int:
        return self.path[-1][0]

    def position(self, frame: int) -> Optional[Tuple[int, int]]:
        """Rounded top-left corner at ``frame``, or None when not on screen."""
        if not self.path or frame < self.first_frame or frame > self.last_frame:
            return None
        for (f0, x0, y0), (f1, x1, y1) in zip(self.path, self.path[1:]):
            if f0 <= frame <= f1:
                u = (frame - f0) / (f1 - f0)
                return _round(x0 + u * (x1 - x0)), _round(y0 + u * (y1 - y0))
        f0, x0, y0 = self.path[0]
        return _round(x0), _round(y0)

    def footprint(self) -> Tuple[int, int, int, int]:
        """Tight (dx, dy, w, h) of the drawn pixels relative to the position."""
        if self.template is None:
            w, h = self.extent
            return 0, 0, w, h
        ys, xs = np.nonzero(self.template.data[..., 3])
        return int(xs.min()), int(ys.min()), int(xs.max() - xs.min() + 1), int(ys.max() - ys.min() + 1)


def _round(v: float) -> int:
    return int(np.floor(v + 0.5))


@dataclass
class SceneScript:
    width: int
    height: int
    duration: int
    background: Union[int, Color, np.ndarray] = 128
    noise_amplitude: int = 0
    objects: List[ObjectEvent] = field(default_factory=list)
    seed: int = 0

    def background_image(self) -> np.ndarray:
        bg = self.background
        if isinstance(bg, np.ndarray):
            if bg.shape != (self.height, self.width, 3):
                raise ScriptError(f"background is {bg.shape}, scene is {self.width}x{self.height}")
            return bg.astype(np.uint8)
        img = np.empty((self.height, self.width, 3), dtype=np.uint8)
        img[...] = bg
        return img

    def validate(self) -> "SceneScript":
        if self.width < 1 or self.height < 1 or self.duration < 1:
            raise ScriptError("scene needs positive width, height and duration")
        if self.noise_amplitude < 0:
            raise ScriptError("noise amplitude must be non-negative")
        for ob in self.objects:
            if not ob.path:
                raise ScriptError(f"object {ob.name}: no waypoints")
            frames = [f for f, _, _ in ob.path]
            if any(b <= a for a, b in zip(frames, frames[1:])):
                raise ScriptError(f"object {ob.name}: waypoint frames must strictly increase")
            w, h = ob.extent
            for f, x, y in ob.path:
                if x < 0 or y < 0 or _round(x) + w > self.width or _round(y) + h > self.height:
                    raise ScriptError(f"object {ob.name}: waypoint at frame {f} leaves the frame")
            if ob.abandoned_from is not None:
                a = ob.abandoned_from
                if not ob.first_frame <= a <= ob.last_frame:
                    raise ScriptError(f"object {ob.name}: abandoned at {a} outside its lifetime")
                rest = {ob.position(a)} | {(_round(x), _round(y)) for f, x, y in ob.path if f >= a}
                if len(rest) != 1:
                    raise ScriptError(f"object {ob.name}: moves after abandonment at frame {a}")
        return self


def _parse_options(tokens: Sequence[str], lineno: int) -> Dict[str, str]:
    out = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep:
            raise ScriptError(f"line {lineno}: expected key=value, got {tok!r}")
        out[key] = value
    return out


def _color(value: str, lineno: int) -> Color:
    parts = value.split(",")
    try:
        rgb = tuple(int(p) for p in parts)
    except ValueError:
        raise ScriptError(f"line {lineno}: bad color {value!r}") from None
    if len(rgb) != 3 or not all(0 <= c <= 255 for c in rgb):
        raise ScriptError(f"line {lineno}: color must be R,G,B in 0..255")
    return rgb


def _int(opts: Dict[str, str], key: str, lineno: int, default=None) -> int:
    if key not in opts:
        if default is None:
            raise ScriptError(f"line {lineno}: missing {key}=")
        return default
    try:
        return int(opts[key])
    except ValueError:
        raise ScriptError(f"line {lineno}: {key} must be an integer") from None


def _background(value: str, base_dir: str, lineno: int, width: int, height: int):
    if value == "station":
        return station_background(width, height)
    if "," in value:
        return _color(value, lineno)
    if value.lstrip("-").isdigit():
        v = int(value)
        if not 0 <= v <= 255:
            raise ScriptError(f"line {lineno}: background level out of range")
        return v
    path = os.path.join(base_dir, value)
    try:
        return pnm.load(path)
    except (OSError, pnm.PnmError) as exc:
        raise ScriptError(f"line {lineno}: cannot load background {path}: {exc}") from None


def _template(value: str, base_dir: str, kind: str, lineno: int) -> TemplateImage:
    if value.startswith("builtin:"):
        name = value.split(":", 1)[1]
        if name not in BUILTIN_TEMPLATES:
            raise ScriptError(f"line {lineno}: unknown builtin template {name!r}")
        return BUILTIN_TEMPLATES[name]()
    try:
        return TemplateImage.load(os.path.join(base_dir, value), "person" if kind == "person" else "luggage")
    except (OSError, pnm.PnmError) as exc:
        raise ScriptError(f"line {lineno}: cannot load template {value}: {exc}") from None


def parse_script(text: str, base_dir: str = ".") -> SceneScript:
    scene: Optional[SceneScript] = None
    objects: Dict[str, ObjectEvent] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        record, args = tokens[0], tokens[1:]
        if record == "scene":
            if scene is not None:
                raise ScriptError(f"line {lineno}: duplicate scene record")
            opts = _parse_options(args, lineno)
            w, h = _int(opts, "width", lineno), _int(opts, "height", lineno)
            scene = SceneScript(
                width=w,
                height=h,
                duration=_int(opts, "duration", lineno),
                noise_amplitude=_int(opts, "noise", lineno, 0),
                seed=_int(opts, "seed", lineno, 0),
                background=_background(opts.get("background", "128"), base_dir, lineno, w, h),
            )
        elif record == "object":
            if not args:
                raise ScriptError(f"line {lineno}: object needs a name")
            name, opts = args[0], _parse_options(args[1:], lineno)
            if name in objects:
                raise ScriptError(f"line {lineno}: duplicate object {name!r}")
            kind = opts.get("kind", "luggage")
            if kind not in ("luggage", "person"):
                raise ScriptError(f"line {lineno}: kind must be luggage or person")
            ob = ObjectEvent(name, kind)
            if "template" in opts:
                ob.template = _template(opts["template"], base_dir, kind, lineno)
            else:
                ob.size = (_int(opts, "w", lineno), _int(opts, "h", lineno))
                if ob.size[0] < 1 or ob.size[1] < 1:
                    raise ScriptError(f"line {lineno}: object size must be positive")
                ob.color = _color(opts.get("color", "0,0,0"), lineno)
            objects[name] = ob
        elif record in ("waypoint", "abandon"):
            want = 4 if record == "waypoint" else 2
            if len(args) != want:
                raise ScriptError(f"line {lineno}: {record} takes {want} arguments")
            if args[0] not in objects:
                raise ScriptError(f"line {lineno}: unknown object {args[0]!r}")
            try:
                nums = [int(a) for a in args[1:]]
            except ValueError:
                raise ScriptError(f"line {lineno}: {record} arguments must be integers") from None
            if record == "waypoint":
                objects[args[0]].path.append((nums[0], float(nums[1]), float(nums[2])))
            else:
                objects[args[0]].abandoned_from = nums[0]
        else:
            raise ScriptError(f"line {lineno}: unknown record {record!r}")
    if scene is None:
        raise ScriptError("script has no scene record")
    scene.objects = list(objects.values())
    return scene.validate()


def load_script(path) -> SceneScript:
    with open(path) as fh:
        text = fh.read()
    return parse_script(text, os.path.dirname(os.path.abspath(path)))


# ---------------------------------------------------------------------------
# rendering


def render_frame(script: SceneScript, index: int, background: Optional[np.ndarray] = None) -> np.ndarray:
    bg = script.background_image() if background is None else background
    if script.noise_amplitude > 0:
        rng = np.random.default_rng([script.seed, index])
        a = script.noise_amplitude
        noise = rng.integers(-a, a + 1, size=bg.shape, dtype=np.int16)
        frame = (bg.astype(np.int16) + noise).clip(0, 255).astype(np.uint8)
    else:
        frame = bg.copy()
    for ob in script.objects:
        pos = ob.position(index)
        if pos is None:
            continue
        x, y = pos
        if ob.template is not None:
            frame = composite(frame, ob.template, x, y)
        else:
            w, h = ob.extent
            frame[y:y + h, x:x + w] = ob.color
    return frame


def iter_frames(script: SceneScript) -> Iterator[np.ndarray]:
    bg = script.background_image()
    for i in range(script.duration):
        yield render_frame(script, i, bg)


def scene_truth(script: SceneScript) -> List[Annotation]:
    out = []
    for ob in script.objects:
        if ob.kind != "luggage" or ob.abandoned_from is None:
            continue
        start = ob.abandoned_from
        end = min(ob.last_frame, script.duration - 1)
        if start > end:
            continue
        x, y = ob.position(start)
        dx, dy, w, h = ob.footprint()
        out.append(Annotation(start, end, BoundingBox(x + dx, y + dy, w, h)))
    return out


def render_scene(script: SceneScript) -> Tuple[List[np.ndarray], List[Annotation]]:
    script.validate()
    return list(iter_frames(script)), scene_truth(script)


DROP_SCENE = """\
# A traveller walks in, leaves a suitcase behind at frame 300 and walks off.
scene width=360 height=288 duration=1000 noise=4 seed=11 background=station
object bag kind=luggage template=builtin:suitcase
object walker kind=person template=builtin:person
waypoint bag 220 14 194
waypoint bag 300 174 194
waypoint bag 999 174 194
abandon bag 300
waypoint walker 220 40 178
waypoint walker 370 340 178
"""


def drop_scene(seed: int = 11) -> SceneScript:
    script = parse_script(DROP_SCENE)
    script.seed = seed
    return script


# ---------------------------------------------------------------------------
# oracle classifiers for scripted scenes


class ColorKeyClassifier:
    """Crop scorer keyed on known paint colors of the scripted objects.

    Counts pixels within ``tolerance`` (per channel) of any key color; when
    that fraction reaches ``min_fraction`` the crop scores ``on_match``,
    otherwise ``-on_match``.
    """

    def __init__(self, colors: Sequence[Color], min_fraction: float, on_match: float = 1.0, tolerance: int = 6):
        self.colors = np.asarray(colors, dtype=np.int16)
        self.min_fraction = min_fraction
        self.on_match = on_match
        self.tolerance = tolerance
        self.calls = 0

    def fraction(self, crop_img: np.ndarray) -> float:
        px = crop_img.reshape(-1, 1, 3).astype(np.int16)
        hit = (np.abs(px - self.colors[None]) <= self.tolerance).all(axis=2).any(axis=1)
        return float(hit.mean())

    def predict(self, crop_img: np.ndarray) -> float:
        self.calls += 1
        return self.on_match if self.fraction(crop_img) >= self.min_fraction else -self.on_match


def oracle_stage1() -> ColorKeyClassifier:
    """Positive when luggage paint dominates the crop."""
    return ColorKeyClassifier(LUGGAGE_COLORS, 0.3, on_match=1.0)


def oracle_stage2() -> ColorKeyClassifier:
    """Negative as soon as a person is visible in the context box."""
    return ColorKeyClassifier(PERSON_COLORS, 0.02, on_match=-1.0)
