import json
import math

import pandas as pd
import pytest

from src.domain.errors import InvalidInputError
from src.domain.models import StageResult, VerificationReport
from src.io.storage import ResultsStore, emit, write_report


def _report(residual=1e-12, command="so-check"):
    return VerificationReport(
        command,
        [StageResult("metric", residual, 1, 1e-9), StageResult("determinant", 0.0, 1, 1e-9)],
        {"zeta": [1, 2.5], "alpha": {"b": True, "a": None}},
    )


def test_emit_is_canonical():
    payload = emit(_report())
    assert payload.endswith(b"\n")
    assert payload.startswith(b'{"command":"so-check","metadata":{"alpha":{"a":null,"b":true}')
    assert json.loads(payload)["pass"] is True
    assert emit(_report()) == payload


def test_non_finite_residual_is_null_and_fails():
    data = json.loads(emit(_report(math.nan)))
    assert data["stages"][0]["max_residual"] is None
    assert data["stages"][0]["pass"] is False
    assert data["pass"] is False


def test_floats_keep_full_precision():
    data = json.loads(emit(_report(0.1 + 0.2)))
    assert data["stages"][0]["max_residual"] == 0.1 + 0.2


def test_empty_report_is_rejected():
    with pytest.raises(InvalidInputError):
        emit(VerificationReport("so-check"))


def test_unserializable_metadata():
    report = _report()
    report.metadata["bad"] = {1, 2}
    with pytest.raises(InvalidInputError):
        emit(report)


def test_write_report_creates_directories(tmp_path):
    out = tmp_path / "nested" / "report.json"
    payload = write_report(_report(), out)
    assert out.read_bytes() == payload


def test_min_kind_stage():
    assert StageResult("mask samples", 3.0, 10, 1.0, "min").passed
    assert not StageResult("mask samples", 0.0, 10, 1.0, "min").passed


def test_results_store_upserts_by_run(tmp_path):
    path = tmp_path / "results" / "runs.csv"
    store = ResultsStore(path)
    assert store.record(_report(), 0) == "so-check:0"
    store.record(_report(1.0), 0)
    store.record(_report(), 5)

    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    assert list(frame["Run ID"]) == ["so-check:0", "so-check:5"]
    first = frame.set_index("Run ID").loc["so-check:0"]
    assert first["Pass"] == "false"
    assert first["Failing Stages"] == "metric"
    assert first["metric residual"] == "1"

    reloaded = ResultsStore(path)
    assert len(reloaded.frame()) == 2
