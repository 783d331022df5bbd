import numpy as np
import pytest

from src.core.expr import parse
from src.core.gauss import (
    NullCurve,
    conformal_gauss,
    fundamental_data,
    gauss_frame_and_omega,
    lightcone_embed,
    inner5,
    shape_ops,
    surface_from_null_curves,
    verify_lifts,
)
from src.domain.errors import InvalidInputError, PreconditionError
from src.utils.sampling import sample_points

BOX = [(-1.0, 1.0), (0.3, np.pi - 0.3)]


def _curve(*texts):
    return NullCurve(tuple(parse(t, 1) for t in texts))


@pytest.fixture
def helicoid():
    A = _curve("sin(x1)", "-cos(x1)", "x1")
    B = _curve("-sin(x1)", "cos(x1)", "-x1")
    return surface_from_null_curves(A, B, BOX)


@pytest.fixture
def surface_points():
    return sample_points(BOX, 30, seed=2)


def test_lightcone_embedding_is_null():
    p = np.array([[0.3, -1.2, 0.7], [2.0, 0.0, 1.0]])
    assert np.max(np.abs(inner5(lightcone_embed(p), lightcone_embed(p)))) < 1e-12


def test_surface_is_conformal_and_minimal(helicoid, surface_points):
    residuals = helicoid.residuals(surface_points)
    assert max(residuals.values()) < 1e-10


def test_fundamental_data_closed_form(helicoid, surface_points):
    data = fundamental_data(helicoid, surface_points)
    v = surface_points[:, 1]
    np.testing.assert_allclose(np.exp(2 * data.lam), 4 * np.sin(v) ** 2, rtol=1e-12)
    np.testing.assert_allclose(data.l, -2.0, atol=1e-10)
    np.testing.assert_allclose(data.m, 0.0, atol=1e-10)
    np.testing.assert_allclose(data.curvature, -1.0 / (4 * np.sin(v) ** 4), rtol=1e-10)
    assert data.mask.all()
    assert data.intrinsic_gap < 1e-8


def test_positive_curvature_surface_has_empty_mask(surface_points):
    box = [(0.3, np.pi - 0.3), (-1.0, 1.0)]
    A = _curve("sin(x1)", "-cos(x1)", "x1")
    B = _curve("-sin(x1)", "-cos(x1)", "-x1")
    surface = surface_from_null_curves(A, B, box)
    points = sample_points(box, 30, seed=3)
    data = fundamental_data(surface, points)
    assert np.all(data.curvature > 0)
    assert not data.mask.any()
    with pytest.raises(PreconditionError):
        conformal_gauss(surface, data)


def test_curves_must_be_null():
    A = _curve("x1", "0", "0")
    B = _curve("-sin(x1)", "cos(x1)", "-x1")
    with pytest.raises(PreconditionError):
        surface_from_null_curves(A, B, BOX)


def test_surface_box_bounds():
    A = _curve("sin(x1)", "-cos(x1)", "x1")
    with pytest.raises(InvalidInputError):
        surface_from_null_curves(A, A, [(1.0, -1.0), (0.3, 1.0)])


def test_spacelike_pairing_is_rejected():
    A = _curve("sin(x1)", "-cos(x1)", "x1")
    with pytest.raises(PreconditionError):
        surface_from_null_curves(A, A, BOX)


def test_gauss_map_and_shape_operators(helicoid, surface_points):
    data = fundamental_data(helicoid, surface_points)
    gauss, residuals = conformal_gauss(helicoid, data)
    assert max(residuals.values()) < 1e-6
    shapes = shape_ops(gauss, data)
    assert shapes.closed_form_gap < 1e-6
    assert shapes.trace < 1e-6
    assert shapes.nu_norm < 1e-6
    assert shapes.nu_derivative < 1e-5


def test_lifts_are_lightlike_branch_a(helicoid, surface_points):
    data = fundamental_data(helicoid, surface_points)
    gauss, _ = conformal_gauss(helicoid, data)
    connection = gauss_frame_and_omega(gauss, data)
    assert connection.frame.gram_residual() < 1e-6
    assert connection.closed_form_gap < 1e-5
    assert connection.compatibility < 1e-5
    assert connection.frame.orientation in (1, -1)
    lifts = verify_lifts(connection)
    assert lifts.branch == "A"
    assert all(lifts.walker.values())
    assert max(lifts.residuals.values()) < 1e-5
