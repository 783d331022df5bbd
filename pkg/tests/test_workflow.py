import json
from pathlib import Path
from unittest.mock import MagicMock, patch

import numpy as np
import pandas as pd
import pytest

from main import main
from src.cli.algebra import run_group_sample
from src.conf.config import settings
from src.evaluate.stages import StageRecorder
from src.io.config_loader import config_from_dict

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
ROTATION = [[0.6, -0.8, 0.0, 0.0], [0.8, 0.6, 0.0, 0.0], [0.0, 0.0, 0.6, 0.8], [0.0, 0.0, -0.8, 0.6]]


def _run(command, config, tmp_path, *extra):
    out = tmp_path / f"{command}.json"
    code = main([command, "--config", str(config), "--out", str(out), "--workers", "2", *extra])
    report = json.loads(out.read_bytes()) if out.exists() else None
    return code, report


@pytest.mark.parametrize(
    "name",
    sorted(p.stem for p in CONFIGS.glob("*.json") if p.stem != "walker-broken"),
)
def test_shipped_configs_pass(name, tmp_path):
    config = CONFIGS / f"{name}.json"
    command = json.loads(config.read_text(encoding="utf-8"))["command"]
    code, report = _run(command, config, tmp_path)
    assert report is not None
    assert code == 0, [s["name"] for s in report["stages"] if not s["pass"]]
    assert report["pass"] is True
    assert report["command"] == command


def test_broken_walker_config_exits_one(tmp_path):
    code, report = _run("walker-check", CONFIGS / "walker-broken.json", tmp_path)
    assert code == 1
    failing = {s["name"] for s in report["stages"] if not s["pass"]}
    assert "walker" in failing


def test_report_goes_to_stdout(write_config, capsys):
    path = write_config({"command": "so-check", "matrices": {"A": ROTATION}})
    assert main(["so-check", "--config", str(path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert [s["name"] for s in report["stages"]][:3] == ["metric", "determinant", "cross involution"]
    assert report["metadata"]["preserves_W"] is True


def test_invalid_config_exits_two(write_config, tmp_path):
    path = write_config({"command": "so-check", "unexpected": 1})
    code, report = _run("so-check", path, tmp_path)
    assert code == 2
    assert report is None


def test_json_syntax_error_exits_two(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{", encoding="utf-8")
    assert _run("so-check", path, tmp_path)[0] == 2


def test_domain_error_exits_three(write_config, tmp_path):
    path = write_config(
        {
            "command": "pair-gen",
            "m": 2,
            "box": [[-1, 1], [-1, 1]],
            "samples": 10,
            "expressions": {"fp": "log(x1 - 2)", "fm": "0", "gp": "x2", "gm": "x1"},
            "params": {"pair": {}},
        }
    )
    assert _run("pair-gen", path, tmp_path)[0] == 3


def test_results_csv_row(write_config, tmp_path):
    path = write_config({"command": "so-check", "matrices": {"A": ROTATION}})
    results = tmp_path / "results.csv"
    assert _run("so-check", path, tmp_path, "--results-csv", str(results), "--seed", "42")[0] == 0
    frame = pd.read_csv(results, dtype=str, keep_default_na=False)
    assert list(frame["Run ID"]) == ["so-check:42"]
    assert frame.loc[0, "Pass"] == "true"


def test_tol_override_can_fail_a_run(write_config, tmp_path):
    perturbed = [row[:] for row in ROTATION]
    perturbed[0][0] += 1e-7
    path = write_config({"command": "so-check", "matrices": {"A": perturbed}})
    assert _run("so-check", path, tmp_path, "--tol", "1e-5")[0] == 0
    assert _run("so-check", path, tmp_path, "--tol", "1e-9")[0] == 1


@pytest.mark.parametrize(
    "command,doc",
    [
        ("so-check", {"matrices": {"A": [[1, "a"], [0, 1]]}}),
        ("so-check", {"matrices": {"A": [[1, 0], [0]]}}),
        (
            "factorize",
            {"m": 2, "params": {"omega": {"entries": [{"row": 2, "col": 1, "coeffs": {"dx1": "1"}}]}, "eps": 1}},
        ),
        ("pair-gen", {"m": 2, "params": {"random": {"count": "many"}}}),
        ("group-sample", {"params": {"draws": "3"}}),
        ("structure-check", {"params": {"frames": 2.5}}),
    ],
)
def test_malformed_values_exit_two(command, doc, write_config, tmp_path):
    path = write_config({"command": command, **doc})
    code, report = _run(command, path, tmp_path)
    assert code == 2
    assert report is None


def test_pair_gen_uses_validation_grid_size(monkeypatch, tmp_path):
    monkeypatch.setattr(settings, "VALIDATION_SAMPLES", 37)
    code, report = _run("pair-gen", CONFIGS / "pair-gen.json", tmp_path)
    assert code == 0
    assert report["metadata"]["validation_samples"] == 37


def test_dg_vanishing_on_the_validation_grid_exits_two(monkeypatch, write_config, tmp_path):
    # dg+ vanishes on x1 = 0.75, which the run samples miss
    monkeypatch.setattr("src.cli.generators.validation_points", lambda box, seed: np.array([[0.75, 0.0]]))
    path = write_config(
        {
            "command": "pair-gen",
            "m": 2,
            "box": [[0.5, 1], [-1, 1]],
            "samples": 3,
            "expressions": {"fp": "0", "fm": "0", "gp": "(x1 - 0.75)^2", "gm": "x2"},
            "params": {"pair": {}},
        }
    )
    assert _run("pair-gen", path, tmp_path)[0] == 2


@pytest.mark.parametrize("name", ["group-sample", "structure-check", "pair-gen"])
def test_reports_are_byte_identical_across_runs(name, tmp_path):
    config = CONFIGS / f"{name}.json"
    outputs = []
    for workers in ("1", "4"):
        out = tmp_path / f"{name}-{workers}.json"
        assert main([name, "--config", str(config), "--out", str(out), "--workers", workers]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]


def test_so_check_reports_both_w_tests(write_config, tmp_path):
    matrix = np.eye(4).tolist()
    matrix[0][0] += 1.5e-9
    path = write_config({"command": "so-check", "matrices": {"A": matrix}})
    code, report = _run("so-check", path, tmp_path)
    assert code == 1
    membership = report["metadata"]["W_membership"]
    assert membership["preserves"] is False
    assert membership["agree"] is False
    assert membership["projection_residual"] < 1e-9 < membership["block_residual"]


def test_pooled_commands_receive_workers(write_config, tmp_path):
    recorder = StageRecorder("group-sample", 1e-9)
    recorder.record("stub", 0.0, 1)
    runner = MagicMock(return_value=recorder.report())
    path = write_config({"command": "group-sample"})
    with patch.dict("src.cli.run.POOLED", {"group-sample": runner}):
        code, report = _run("group-sample", path, tmp_path, "--workers", "3")
    assert code == 0
    assert runner.call_args.kwargs["workers"] == 3
    assert [s["name"] for s in report["stages"]] == ["stub"]


@patch("src.cli.algebra.ThreadPoolExecutor")
def test_group_sample_sizes_the_pool(mock_executor):
    # run draws inline
    mock_executor.return_value.__enter__.return_value.map.side_effect = map
    config = config_from_dict(
        {"command": "group-sample", "params": {"kinds": ["G1"], "draws": 2, "products": 1, "stabilizers": 1}}
    )
    report = run_group_sample(config, workers=5)
    mock_executor.assert_called_once_with(max_workers=5)
    assert (report.metadata["kinds"], report.metadata["draws"]) == (["G1"], 2)
    assert "G1 so" in [stage.name for stage in report.stages]
