"""Real-time abandoned luggage detection: static objects, IoU tracks, classifier cascade."""

from .cascade import LinearModel, Verdict
from .config import PipelineConfig, load_config
from .imgproc import BoundingBox
from .pipeline import Pipeline, detect

__all__ = ["BoundingBox", "LinearModel", "Pipeline", "PipelineConfig", "Verdict", "detect", "load_config"]
__version__ = "0.1.0"
