# Stage bookkeeping
from src.evaluate.stages import StageRecorder, max_abs

__all__ = ["StageRecorder", "max_abs"]
