"""Pipeline configuration: flat ``section.key = value`` files mapped onto dataclasses."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple


class ConfigError(ValueError):
    pass


@dataclass
class BackgroundConfig:
    alpha: float = 0.002
    tau_fg: float = 30.0
    erode_radius: int = 1
    dilate_radius: int = 1


@dataclass
class SodConfig:
    motion_gap: int = 5
    tau_m: float = 20.0
    min_area: int = 64
    erode_radius: int = 1
    dilate_radius: int = 3


@dataclass
class TrackConfig:
    iou_min: float = 0.5
    miss_limit: int = 25


@dataclass
class CascadeConfig:
    interval: int = 10
    window: int = 25
    sigma: Optional[float] = None  # None means window / 6

    @property
    def effective_sigma(self) -> float:
        return self.sigma if self.sigma is not None else self.window / 6.0


@dataclass
class EvalConfig:
    iou_min: float = 0.2


@dataclass
class IoConfig:
    input: Optional[str] = None
    output: Optional[str] = None
    overlay_dir: Optional[str] = None


# (section, key) -> (lower, upper, inclusive-lower, inclusive-upper); None = unbounded
_RANGES: Dict[Tuple[str, str], Tuple[Optional[float], Optional[float], bool, bool]] = {
    ("bg", "alpha"): (0.0, 1.0, False, False),
    ("bg", "tau_fg"): (0.0, 255.0, True, True),
    ("bg", "erode_radius"): (1, None, True, True),
    ("bg", "dilate_radius"): (1, None, True, True),
    ("sod", "motion_gap"): (1, None, True, True),
    ("sod", "tau_m"): (0.0, 255.0, True, True),
    ("sod", "min_area"): (1, None, True, True),
    ("sod", "erode_radius"): (1, None, True, True),
    ("sod", "dilate_radius"): (1, None, True, True),
    ("track", "iou_min"): (0.0, 1.0, True, False),
    ("track", "miss_limit"): (0, None, True, True),
    ("cascade", "interval"): (1, None, True, True),
    ("cascade", "window"): (1, None, True, True),
    ("cascade", "sigma"): (0.0, None, False, True),
    ("eval", "iou_min"): (0.0, 1.0, True, False),
}


@dataclass
class PipelineConfig:
    bg: BackgroundConfig = field(default_factory=BackgroundConfig)
    sod: SodConfig = field(default_factory=SodConfig)
    track: TrackConfig = field(default_factory=TrackConfig)
    cascade: CascadeConfig = field(default_factory=CascadeConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    io: IoConfig = field(default_factory=IoConfig)

    def set(self, key: str, raw: str) -> None:
        section, _, name = key.partition(".")
        sub = getattr(self, section) if section in _SECTIONS else None
        known = {f.name: f for f in dataclasses.fields(sub)} if sub is not None else {}
        if name not in known:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(sub, name, _coerce(key, known[name].type, raw))

    def validate(self) -> "PipelineConfig":
        for (section, name), (lo, hi, lo_inc, hi_inc) in _RANGES.items():
            value = getattr(getattr(self, section), name)
            if value is None:
                continue
            if lo is not None and (value < lo or (value == lo and not lo_inc)):
                raise ConfigError(f"{section}.{name}={value} below allowed range")
            if hi is not None and (value > hi or (value == hi and not hi_inc)):
                raise ConfigError(f"{section}.{name}={value} above allowed range")
        if self.cascade.window % 2 == 0:
            raise ConfigError("cascade.window must be odd")
        return self

    def items(self) -> List[Tuple[str, object]]:
        out = []
        for section in _SECTIONS:
            sub = getattr(self, section)
            for f in dataclasses.fields(sub):
                out.append((f"{section}.{f.name}", getattr(sub, f.name)))
        return out

    def dump(self) -> str:
        lines = []
        for key, value in self.items():
            lines.append(f"{key} = {'' if value is None else value}")
        return "\n".join(lines) + "\n"


_SECTIONS = ("bg", "sod", "track", "cascade", "eval", "io")


def _coerce(key: str, type_name, raw: str):
    raw = raw.strip()
    t = str(type_name)
    if raw == "" or raw.lower() == "none":
        if "Optional" in t:
            return None
        raise ConfigError(f"{key} requires a value")
    try:
        if "int" in t:
            return int(raw)
        if "float" in t:
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from exc
    return raw


def parse_config_text(text: str, config: Optional[PipelineConfig] = None) -> PipelineConfig:
    config = config or PipelineConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        try:
            config.set(key.strip(), value)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    return config


def load_config(path: Optional[str] = None, overrides: Iterable[str] = ()) -> PipelineConfig:
    """Defaults, then the file (if any), then ``key=value`` overrides; validated."""
    config = PipelineConfig()
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        parse_config_text(text, config)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        config.set(key.strip(), value)
    return config.validate()
