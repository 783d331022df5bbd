from __future__ import annotations

import json
import logging
import math
import threading
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from src.domain.errors import InvalidInputError
from src.domain.models import VerificationReport

logger = logging.getLogger(__name__)

# Base columns of the results table
BASE_COLUMNS = [
    "Run ID",
    "Command",
    "Seed",
    "Pass",
    "Failing Stages",
]


def _canonical(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return format(value, ".17g") if math.isfinite(value) else "null"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        items = sorted((str(k), v) for k, v in value.items())
        return "{" + ",".join(f"{json.dumps(k, ensure_ascii=False)}:{_canonical(v)}" for k, v in items) + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ",".join(_canonical(v) for v in value) + "]"
    raise InvalidInputError(f"cannot serialize {type(value).__name__} into a report")


def emit(report: VerificationReport) -> bytes:
    """Canonical JSON: sorted keys, 17 significant digits, non-finite floats as null."""
    if not report.stages:
        raise InvalidInputError(f"report for {report.command} has no stages")
    return (_canonical(report.to_dict()) + "\n").encode("utf-8")


def write_report(report: VerificationReport, out: Optional[Path]) -> bytes:
    payload = emit(report)
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(payload)
        logger.info("Report written to %s", out)
    return payload


class ResultsStore:
    """CSV table with one row per run, keyed by `command:seed`."""

    def __init__(self, out_csv: Path) -> None:
        self.out_csv = Path(out_csv)
        self.out_csv.parent.mkdir(parents=True, exist_ok=True)
        self._csv_lock = threading.RLock()
        self._df: Optional[pd.DataFrame] = None

        self._load_or_init_csv()

    def _load_or_init_csv(self) -> None:
        """Load existing CSV or initialize with base columns."""
        with self._csv_lock:
            if self.out_csv.exists():
                try:
                    self._df = pd.read_csv(self.out_csv, dtype=str, keep_default_na=False)
                    logger.info("Loaded results table with %d rows", len(self._df))
                except Exception as e:
                    logger.warning("Failed to load existing CSV, creating new: %s", e)
                    self._df = pd.DataFrame(columns=BASE_COLUMNS)
            else:
                self._df = pd.DataFrame(columns=BASE_COLUMNS)
                self._save_csv()

    def _save_csv(self) -> None:
        if self._df is not None:
            self._df.to_csv(self.out_csv, index=False, encoding="utf-8")

    def _ensure_column(self, col_name: str) -> None:
        if self._df is not None and col_name not in self._df.columns:
            self._df[col_name] = ""
            logger.debug("Added new column: %s", col_name)

    def _upsert_row(self, run_id: str, data: Dict[str, Any]) -> None:
        """Insert or update a row by Run ID."""
        with self._csv_lock:
            if self._df is None:
                return

            for col in data.keys():
                self._ensure_column(col)

            mask = self._df["Run ID"] == run_id
            if mask.any():
                for col, val in data.items():
                    self._df.loc[mask, col] = val
            else:
                new_row = {col: "" for col in self._df.columns}
                new_row["Run ID"] = run_id
                new_row.update(data)
                self._df = pd.concat([self._df, pd.DataFrame([new_row])], ignore_index=True)

            self._save_csv()

    def record(self, report: VerificationReport, seed: int) -> str:
        run_id = f"{report.command}:{seed}"
        data: Dict[str, Any] = {
            "Command": report.command,
            "Seed": str(seed),
            "Pass": str(report.passed).lower(),
            "Failing Stages": ";".join(report.failing_stages()),
        }
        for stage in report.stages:
            data[f"{stage.name} residual"] = format(stage.max_residual, ".17g")
        self._upsert_row(run_id, data)
        return run_id

    def frame(self) -> pd.DataFrame:
        with self._csv_lock:
            return self._df.copy() if self._df is not None else pd.DataFrame(columns=BASE_COLUMNS)
