import numpy as np
import pytest

from src.core.connection import (
    ConnectionForm,
    compatibility_residual,
    compatible_completion,
    factorization_check,
    fully_lightlike_check,
)
from src.core.expr import parse
from src.core.exterior import DifferentialForm, MatrixForm, flatness_residual
from src.core.generators import (
    branch_classify,
    expected_alpha,
    expected_side_mu,
    family_alpha,
    family_omega,
    family_potential,
    frame_integrate,
    pair_omega,
    random_pair_spec,
    require_nonvanishing,
    single_eps_omega,
)
from src.core.structures import FrameField, paracomplex_from_frame
from src.domain.errors import InvalidInputError, PreconditionError
from src.domain.models import FlatFamilySpec, PairSpec


def _tridiagonal(eps=-1, mu=1):
    return FlatFamilySpec(
        variant="tridiagonal",
        n=2,
        m=2,
        f=parse("x1 + x2", 2),
        functions={"f1": parse("sin(x1 - x2)", 2), "f2": parse("(x1 - x2)^2/2", 2)},
        eps=eps,
        mu=mu,
    )


def _symmetric(n=2):
    C0 = np.array([[1.0, 0.5], [0.5, -1.0]]) if n == 2 else np.array([[1.0]])
    return FlatFamilySpec(
        variant="symmetric-potential",
        n=n,
        m=2,
        f=parse("x1", 2),
        functions={"phi": parse("x2", 2)},
        C0=C0,
    )


@pytest.mark.parametrize("branch", ["A", "B"])
@pytest.mark.parametrize("mu", [1, -1])
def test_pair_connection_is_flat_and_compatible(sample_pair, plane_points, branch, mu):
    omega = pair_omega(sample_pair(branch=branch, mu=mu), plane_points)
    assert flatness_residual(omega.symbolic, plane_points) < 1e-9
    assert compatibility_residual(omega, plane_points) < 1e-12
    assert branch_classify(omega, mu, plane_points) == branch


def test_branch_classify_trivial_and_wrong_mu(sample_pair, plane_points):
    zero = ConnectionForm(symbolic=MatrixForm.zeros(4, 4, 1, 2))
    assert branch_classify(zero, 1, plane_points) == "both"
    omega = pair_omega(sample_pair(branch="A", mu=1), plane_points)
    assert branch_classify(omega, -1, plane_points) == "neither"


@pytest.mark.parametrize("branch", ["A", "B"])
@pytest.mark.parametrize("eps", [1, -1])
def test_single_side_completion_matches_pair(sample_pair, plane_points, branch, eps):
    spec = sample_pair(branch=branch, mu=-1)
    omega = pair_omega(spec, plane_points)
    w = omega.symbolic
    mu_side = spec.mu if branch == "A" or eps > 0 else -spec.mu
    result = single_eps_omega(
        spec.f(eps), spec.g(eps), w.form(2, 1), w.form(3, 1), w.form(3, 2), mu_side, eps, plane_points
    )
    assert result.residual < 1e-9
    np.testing.assert_allclose(
        result.omega.coefficients(plane_points), omega.coefficients(plane_points), atol=1e-12
    )


def test_vanishing_dg_is_rejected():
    points = np.zeros((1, 2))
    with pytest.raises(PreconditionError):
        require_nonvanishing(parse("x1^2", 2), 2, points, 1e-9)
    spec = PairSpec(parse("0", 2), parse("0", 2), parse("x1^2 + x2^2", 2), parse("x1", 2), m=2)
    with pytest.raises(PreconditionError):
        pair_omega(spec, points)


def test_random_pair_spec_keeps_dg_away_from_zero(plane_points):
    for index in range(5):
        spec = random_pair_spec(np.random.default_rng(index), 2, "B", -1)
        assert (spec.branch, spec.mu) == ("B", -1)
        for g in (spec.g_plus, spec.g_minus):
            assert require_nonvanishing(g, 2, plane_points, 1e-9) >= 0.75 - 1e-12


def test_validation_grid_extends_the_nonvanishing_check():
    spec = PairSpec(parse("0", 2), parse("0", 2), parse("x1^2", 2), parse("x2", 2), m=2)
    points = np.array([[1.0, 0.5]])
    omega = pair_omega(spec, points, validation=np.array([[0.5, -0.5]]))
    with pytest.raises(PreconditionError):
        pair_omega(spec, points, validation=np.zeros((1, 2)))
    w = omega.symbolic
    args = (spec.f_plus, spec.g_plus, w.form(2, 1), w.form(3, 1), w.form(3, 2), 1, 1, points)
    assert single_eps_omega(*args).residual < 1e-9
    with pytest.raises(PreconditionError):
        single_eps_omega(*args, validation=np.zeros((1, 2)))


@pytest.mark.parametrize("branch", ["A", "B"])
@pytest.mark.parametrize("mu", [1, -1])
def test_random_pairs_are_fully_lightlike_on_both_sides(plane_points, branch, mu):
    for index in range(20):
        spec = random_pair_spec(np.random.default_rng(index), 2, branch, mu)
        omega = pair_omega(spec, plane_points)
        assert flatness_residual(omega.symbolic, plane_points) < 1e-9
        for eps in (1, -1):
            light = fully_lightlike_check(omega, eps, plane_points)
            assert light.holds, light.reason
            assert light.mu == expected_side_mu(spec, eps)
            np.testing.assert_allclose(light.alpha, expected_alpha(spec, eps).evaluate(plane_points), atol=1e-9)
        assert branch_classify(omega, mu, plane_points) == branch


@pytest.mark.parametrize("eps,mu", [(1, 1), (-1, 1), (1, -1), (-1, -1)])
def test_tridiagonal_family_factorizes(plane_points, eps, mu):
    spec = _tridiagonal(eps, mu)
    omega = family_omega(spec, plane_points)
    assert flatness_residual(omega.symbolic, plane_points) < 1e-9
    assert compatibility_residual(omega, plane_points) < 1e-12
    J = paracomplex_from_frame(FrameField.identity(2, 2), eps)
    report = factorization_check(omega, J, plane_points, mu=mu)
    assert report.holds
    np.testing.assert_allclose(report.alpha, family_alpha(spec).evaluate(plane_points), atol=1e-9)


def test_family_spec_validation():
    with pytest.raises(InvalidInputError):
        FlatFamilySpec(variant="symmetric-potential", n=1, m=2, f=parse("x1", 2), functions={"phi": parse("x2", 2)})
    with pytest.raises(InvalidInputError):
        FlatFamilySpec(
            variant="skew-potential",
            n=2,
            m=2,
            f=parse("x1", 2),
            functions={"psi": parse("x2", 2)},
            C0=np.eye(2),
        )
    with pytest.raises(InvalidInputError):
        FlatFamilySpec(variant="tridiagonal", n=2, m=2, f=parse("x1", 2), functions={"f1": parse("x1", 2)})


def test_closed_form_frame(plane_points):
    spec = _symmetric()
    omega = family_omega(spec, plane_points)
    result = frame_integrate(
        omega, [0.0, 0.0], np.eye(8), plane_points[:8], box=[(-1, 1), (-1, 1)],
        potential=family_potential(spec), method="exp", loops=2,
    )
    assert result.method == "exp"
    assert result.metric_residual < 1e-7
    assert result.closure_residual < 1e-6


def test_integrated_frame_matches_closed_form(plane_points):
    spec = _symmetric(n=1)
    omega = family_omega(spec, plane_points)
    grid = plane_points[:5]
    closed = frame_integrate(omega, [0.0, 0.0], np.eye(4), grid, potential=family_potential(spec), loops=0)
    numeric = frame_integrate(omega, [0.0, 0.0], np.eye(4), grid, method="integrate", loops=0)
    assert (closed.method, numeric.method) == ("exp", "integrate")
    np.testing.assert_allclose(numeric.frame.values(grid), closed.frame.values(grid), atol=1e-7)


def test_frame_integration_preconditions(plane_points):
    curved = ConnectionForm(
        symbolic=compatible_completion(
            MatrixForm.from_entries(4, 4, 1, 2, {(2, 1): DifferentialForm.dx(1, 2, parse("x2", 2))})
        )
    )
    with pytest.raises(PreconditionError):
        frame_integrate(curved, [0.0, 0.0], np.eye(4), plane_points)
    flat = family_omega(_tridiagonal(), plane_points)
    with pytest.raises(PreconditionError):
        frame_integrate(flat, [0.0, 0.0], 2 * np.eye(8), plane_points)
    with pytest.raises(PreconditionError):
        frame_integrate(flat, [0.0, 0.0], np.eye(8), plane_points, method="exp")
