import numpy as np
import pytest

from src.core.expr import exp, neg, parse
from src.core.exterior import (
    DifferentialForm,
    MatrixForm,
    curvature_tensor,
    ext_d,
    flatness_residual,
    mwedge,
    potential_commutes,
    wedge,
)
from src.domain.errors import InvalidInputError, PreconditionError


def _x(k):
    return parse(f"x{k}", 3)


def test_wedge_of_one_forms_anticommutes(plane_points):
    a = DifferentialForm.one_form({1: parse("x2", 2), 2: parse("sin(x1)", 2)}, 2)
    b = DifferentialForm.one_form({1: parse("exp(x1)", 2), 2: parse("x1*x2", 2)}, 2)
    np.testing.assert_allclose(wedge(a, b).evaluate(plane_points), -wedge(b, a).evaluate(plane_points))
    assert wedge(DifferentialForm.dx(1, 2), DifferentialForm.dx(1, 2)).is_zero()


def test_wedge_sign_follows_permutation():
    m = 3
    form = wedge(DifferentialForm.dx(3, m), DifferentialForm(2, m, {(1, 2): 1.0}))
    # dx3 ^ dx1 ^ dx2 = dx1 ^ dx2 ^ dx3
    assert form.evaluate(np.zeros((1, 3)))[0, 0] == 1.0
    form = wedge(DifferentialForm.dx(2, m), DifferentialForm(2, m, {(1, 3): 1.0}))
    assert form.evaluate(np.zeros((1, 3)))[0, 0] == -1.0


def test_d_squared_vanishes():
    points = np.random.default_rng(0).uniform(-1, 1, (30, 3))
    form = DifferentialForm.one_form({1: _x(2) * _x(3), 2: exp(_x(1)) * _x(3), 3: parse("sin(x1*x2)", 3)}, 3)
    assert np.max(np.abs(ext_d(ext_d(form)).evaluate(points))) < 1e-12


def test_differential_of_function(plane_points):
    df = DifferentialForm.differential(parse("x1^2*x2", 2), 2).evaluate(plane_points)
    x, y = plane_points.T
    np.testing.assert_allclose(df, np.stack([2 * x * y, x**2], axis=1))


def test_keys_must_be_increasing():
    with pytest.raises(InvalidInputError):
        DifferentialForm(2, 3, {(2, 1): 1.0})


def test_degree_above_dimension_is_zero():
    assert ext_d(DifferentialForm.dx(1, 1, parse("x1", 1))).is_zero()


def test_maurer_cartan_form_is_flat(plane_points):
    # omega = E^-1 dE for E = [[e^x2, x1], [0, 1]]
    x2 = parse("x2", 2)
    omega = MatrixForm.from_entries(
        2, 2, 1, 2,
        {(1, 1): DifferentialForm.dx(2, 2), (1, 2): DifferentialForm.dx(1, 2, exp(neg(x2)))},
    )
    assert flatness_residual(omega, plane_points) < 1e-13
    assert not mwedge(omega, omega).is_zero()


def test_curved_form_has_curvature(plane_points):
    omega = MatrixForm.from_entries(2, 2, 1, 2, {(1, 2): DifferentialForm.dx(1, 2, parse("x2", 2))})
    curvature = curvature_tensor(omega, plane_points)
    np.testing.assert_allclose(curvature[:, 0, 1, 0, 1], -1.0)
    np.testing.assert_allclose(curvature[:, 0, 1, 1, 0], 1.0)
    assert flatness_residual(omega, plane_points) == pytest.approx(1.0)


def test_one_dimensional_base_is_always_flat():
    omega = MatrixForm.from_entries(2, 2, 1, 1, {(1, 2): DifferentialForm.dx(1, 1, parse("x1", 1))})
    assert flatness_residual(omega, np.zeros((3, 1))) == 0.0


def test_scalar_potential_commutes(plane_points):
    C = np.array([[1.0, 2.0], [2.0, -1.0]])
    phi = parse("sin(x1) + x2", 2)
    x = MatrixForm.from_scalars([[phi * float(c) for c in row] for row in C], 2)
    omega = x.map(ext_d)
    assert potential_commutes(x, omega, plane_points)


def test_potential_mismatch_raises(plane_points):
    x = MatrixForm.from_scalars([[parse("x1", 2)]], 2)
    wrong = MatrixForm.from_entries(1, 1, 1, 2, {(1, 1): DifferentialForm.dx(2, 2)})
    with pytest.raises(PreconditionError):
        potential_commutes(x, wrong, plane_points)


def test_matrix_form_blocks_and_values():
    I = MatrixForm.identity(2, 1)
    Z = MatrixForm.zeros(2, 2, 0, 1)
    big = MatrixForm.from_blocks([[I, Z], [Z, I]])
    np.testing.assert_array_equal(big.values(np.zeros((1, 1)))[0], np.eye(4))
    assert big.block(2, 2, 2).shape == (2, 2)


def _forms():
    f = DifferentialForm.scalar(parse("exp(x1)*x2 - sin(x3)", 3), 3)
    a = DifferentialForm.one_form({1: parse("x2*x3", 3), 2: parse("sin(x1)", 3), 3: parse("x1^2", 3)}, 3)
    b = DifferentialForm.one_form({1: parse("cos(x3)", 3), 3: parse("x1*x2", 3)}, 3)
    c = wedge(a, DifferentialForm.dx(3, 3, parse("x2", 3))) + wedge(
        DifferentialForm.dx(1, 3), DifferentialForm.dx(2, 3, parse("cosh(x1*x3)", 3))
    )
    return {"f": f, "a": a, "b": b, "c": c}


@pytest.mark.parametrize("left,right", [("f", "a"), ("a", "f"), ("a", "b"), ("f", "c"), ("c", "f"), ("b", "a")])
def test_ext_d_obeys_leibniz_rule(left, right, rng):
    forms = _forms()
    F, G = forms[left], forms[right]
    points = rng.uniform(-1.0, 1.0, size=(30, 3))
    lhs = ext_d(wedge(F, G))
    rhs = wedge(ext_d(F), G) + wedge(F, ext_d(G)).scale(float((-1) ** F.degree))
    assert lhs.degree == F.degree + G.degree + 1
    np.testing.assert_allclose(lhs.evaluate(points), rhs.evaluate(points), atol=1e-10)
