"""Stage recording shared by every command."""

from __future__ import annotations

import logging
import math
from typing import Any, Dict, List, Mapping, Optional

import numpy as np

from src.domain.models import StageResult, VerificationReport

logger = logging.getLogger(__name__)


class StageRecorder:
    """Collects named stage residuals for one command run."""

    def __init__(self, command: str, tol: float) -> None:
        self.command = command
        self.tol = tol
        self.stages: List[StageResult] = []
        self.metadata: Dict[str, Any] = {}

    def record(
        self,
        name: str,
        residual: float,
        points: int,
        tol: Optional[float] = None,
        kind: str = "max",
    ) -> StageResult:
        residual = float(residual)
        stage = StageResult(name, residual, int(points), self.tol if tol is None else float(tol), kind)
        self.stages.append(stage)
        if stage.passed:
            logger.info("stage %s: residual=%.3e tol=%.1e", name, residual, stage.tol)
        else:
            logger.warning("stage %s failed: residual=%.3e tol=%.1e (%s)", name, residual, stage.tol, kind)
        return stage

    def record_many(self, prefix: str, residuals: Mapping[str, float], points: int, tol: Optional[float] = None) -> None:
        for name, value in residuals.items():
            self.record(f"{prefix} {name}", value, points, tol)

    def require(self, name: str, condition: bool, points: int) -> StageResult:
        """A boolean stage: residual 0 when the condition holds, inf otherwise."""
        return self.record(name, 0.0 if condition else math.inf, points)

    def note(self, **values: Any) -> None:
        self.metadata.update(values)

    def report(self) -> VerificationReport:
        report = VerificationReport(self.command, list(self.stages), dict(self.metadata))
        if report.passed:
            logger.info("%s passed %d stages", self.command, len(report.stages))
        else:
            logger.warning("%s failed stages: %s", self.command, ", ".join(report.failing_stages()))
        return report


def max_abs(values: Any) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.max(np.abs(values))) if values.size else 0.0
