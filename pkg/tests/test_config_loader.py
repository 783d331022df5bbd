import numpy as np
import pytest

from src.conf.config import settings
from src.core.connection import compatibility_residual
from src.domain.errors import InvalidInputError, ParseError
from src.domain.models import RunConfig
from src.io.config_loader import (
    config_from_dict,
    connection_from_config,
    float_array,
    float_param,
    int_param,
    load_config,
    lookup,
    mapping_param,
    sign_param,
)
from src.utils.sampling import parse_box, sample_points, validation_points


def test_defaults_and_overrides():
    config = config_from_dict({"command": "so-check", "seed": 3}, seed=9, tol=1e-6)
    assert (config.command, config.m, config.n) == ("so-check", 1, 1)
    assert config.seed == 9
    assert config.tol == 1e-6
    assert config.box == [(-1.0, 1.0)]


def test_command_comes_from_cli_when_given():
    config = config_from_dict({"command": "norm", "m": 2}, command="factorize")
    assert config.command == "factorize"
    assert config.box == [(-1.0, 1.0), (-1.0, 1.0)]


@pytest.mark.parametrize(
    "data",
    [
        {"command": "so-check", "colour": 1},
        {"command": "teleport"},
        {"command": "so-check", "m": True},
        {"command": "so-check", "samples": 0},
        {"command": "so-check", "tol": -1.0},
        {"command": "so-check", "expressions": {"f": 1}},
        {"command": "so-check", "matrices": {"A": [1, 2]}},
        {"command": "so-check", "box": [[1, -1]]},
    ],
)
def test_invalid_documents(data):
    with pytest.raises(InvalidInputError):
        config_from_dict(data)


def test_json_syntax_error_reports_offset(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"command": }', encoding="utf-8")
    with pytest.raises(ParseError) as info:
        load_config(path)
    assert info.value.offset == 12


def test_missing_file(tmp_path):
    with pytest.raises(InvalidInputError):
        load_config(tmp_path / "absent.json")


def test_box_forms():
    assert parse_box("0,2", 2) == [(0.0, 2.0), (0.0, 2.0)]
    assert parse_box([[0, 1], [2, 3]], 2) == [(0.0, 1.0), (2.0, 3.0)]
    with pytest.raises(InvalidInputError):
        parse_box([[0, 1]], 2)


def test_sampling_is_seeded():
    box = [(-1.0, 1.0), (0.0, 2.0)]
    a, b = sample_points(box, 10, 4), sample_points(box, 10, 4)
    np.testing.assert_array_equal(a, b)
    assert np.all((a[:, 1] >= 0.0) & (a[:, 1] <= 2.0))


def test_validation_grid_is_separate_and_sized(monkeypatch):
    box = [(-1.0, 1.0), (0.0, 2.0)]
    monkeypatch.setattr(settings, "VALIDATION_SAMPLES", 37)
    grid = validation_points(box, 4)
    assert grid.shape == (37, 2)
    assert np.all((grid[:, 0] >= -1.0) & (grid[:, 0] <= 1.0))
    assert np.all((grid[:, 1] >= 0.0) & (grid[:, 1] <= 2.0))
    np.testing.assert_array_equal(grid, validation_points(box, 4))
    assert not np.allclose(grid, sample_points(box, 37, 4))
    assert validation_points(box, 4, count=5).shape == (5, 2)
    with pytest.raises(InvalidInputError):
        validation_points(box, 4, count=0)


def test_param_conversions():
    assert int_param({"count": 4.0}, "count", 1) == 4
    assert int_param({}, "count", 7) == 7
    assert float_param({"step": 2}, "step", 0.1) == 2.0
    assert mapping_param({}, "integrate") == {}
    np.testing.assert_array_equal(float_array([[1, 2], [3, 4]], "E0", ndim=2), [[1.0, 2.0], [3.0, 4.0]])
    for bad in ({"count": "many"}, {"count": 2.5}, {"count": True}, {"count": -1}):
        with pytest.raises(InvalidInputError):
            int_param(bad, "count", 1)
    with pytest.raises(InvalidInputError):
        float_param({"step": "fast"}, "step", 0.1)
    with pytest.raises(InvalidInputError):
        mapping_param({"integrate": [1]}, "integrate")
    for value, ndim in (([[1, "a"]], 2), ([[1, 0], [0]], 2), ([1.0, 2.0], 2), ([[float("nan")]], 2)):
        with pytest.raises(InvalidInputError):
            float_array(value, "matrix", ndim=ndim)


def test_lookup_binds_names_or_parses_inline():
    config = RunConfig(command="norm", m=2, expressions={"f": "x1*x2"})
    exprs = {"f": object()}
    assert lookup(exprs, "f", config) is exprs["f"]
    assert lookup(exprs, "x1 + 1", config).to_text()
    with pytest.raises(InvalidInputError):
        lookup(exprs, "g +", config)


def test_sign_param():
    assert sign_param({"mu": -1}, "mu") == -1
    assert sign_param({}, "mu") == 1
    with pytest.raises(InvalidInputError):
        sign_param({"mu": 2}, "mu")


def test_explicit_entries_are_completed():
    config = config_from_dict(
        {
            "command": "walker-check",
            "m": 2,
            "params": {"omega": {"entries": [{"row": 3, "col": 2, "coeffs": {"1": "x2"}}]}},
        }
    )
    points = sample_points(config.box, 5, 0)
    source = connection_from_config(config, points)
    assert source.kind == "entries"
    assert compatibility_residual(source.omega, points) == 0.0


def test_entries_outside_the_base():
    config = config_from_dict(
        {"command": "walker-check", "m": 2, "params": {"omega": {"entries": [{"row": 3, "col": 2, "coeffs": {"3": "1"}}]}}}
    )
    with pytest.raises(InvalidInputError):
        connection_from_config(config, np.zeros((1, 2)))


def test_omega_block_is_required():
    config = config_from_dict({"command": "classify", "m": 2})
    with pytest.raises(InvalidInputError):
        connection_from_config(config, np.zeros((1, 2)))
