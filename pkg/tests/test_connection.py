import numpy as np
import pytest

from src.core.connection import (
    ConnectionForm,
    compatibility_residual,
    compatible_completion,
    cov_deriv_values,
    endo_cov_deriv,
    factorization_check,
    fully_lightlike_check,
    gauge_horizontal,
    horizontality_check,
    horizontality_residual,
    isotropic_parakahler,
    square_norm,
    walker_check,
    walker_closed_forms,
    walker_distribution,
    walker_matrix,
    walker_residual,
    walker_to_paracomplex,
)
from src.core.expr import parse
from src.core.exterior import DifferentialForm, MatrixForm
from src.core.generators import expected_alpha, expected_side_mu, pair_omega
from src.core.neutral import neutral_metric
from src.core.structures import FrameField, paracomplex_component_matrix, paracomplex_from_frame
from src.domain.errors import InvalidInputError, PreconditionError


def _lower(entries, m=2):
    return MatrixForm.from_entries(4, 4, 1, m, entries)


def test_completion_uses_metric_signs(plane_points):
    dx1, dx2 = DifferentialForm.dx(1, 2), DifferentialForm.dx(2, 2)
    omega = compatible_completion(_lower({(2, 1): dx1, (3, 1): dx2}))
    W = ConnectionForm(symbolic=omega).coefficients(plane_points[:1])[0]
    assert W[0, 1, 0] == -1.0  # omega^1_2 = -omega^2_1
    assert W[0, 2, 1] == 1.0  # omega^1_3 = omega^3_1
    assert compatibility_residual(ConnectionForm(symbolic=omega), plane_points) == 0.0


def test_connection_form_shape_checks():
    with pytest.raises(InvalidInputError):
        ConnectionForm()
    with pytest.raises(InvalidInputError):
        ConnectionForm(symbolic=MatrixForm.identity(4, 2))


def test_factorization_needs_compatible_form(plane_points):
    omega = ConnectionForm(symbolic=_lower({(2, 1): DifferentialForm.dx(1, 2)}))
    J = paracomplex_from_frame(FrameField.identity(1, 2), 1)
    with pytest.raises(PreconditionError):
        factorization_check(omega, J, plane_points)


def test_broken_connection_fails_factorization(plane_points):
    # omega^2_1 alone: alpha and omega^2_3 + omega^4_1 cannot agree
    omega = ConnectionForm(symbolic=compatible_completion(_lower({(2, 1): DifferentialForm.dx(1, 2)})))
    J = paracomplex_from_frame(FrameField.identity(1, 2), 1)
    report = factorization_check(omega, J, plane_points)
    assert not report.holds
    assert report.condition_residual >= 1e-3
    assert report.residual >= 1e-3


def test_endomorphism_derivative_matches_sampled_values(sample_pair, plane_points):
    omega = pair_omega(sample_pair(branch="B", mu=-1), plane_points)
    J = paracomplex_component_matrix(1, -1)
    symbolic = endo_cov_deriv(omega, J).evaluate(plane_points)
    assert symbolic.shape == (plane_points.shape[0], 4, 4, 2)
    np.testing.assert_allclose(symbolic, cov_deriv_values(omega, J, plane_points), atol=1e-12)
    as_form = endo_cov_deriv(omega, MatrixForm.constant(J, 2)).evaluate(plane_points)
    np.testing.assert_allclose(as_form, symbolic, atol=1e-12)

    # d(x1 I) = dx1 I, the commutator vanishes
    scaled = endo_cov_deriv(omega, MatrixForm.identity(4, 2).scale(parse("x1", 2))).evaluate(plane_points)
    expected = np.zeros_like(scaled)
    expected[:, range(4), range(4), 0] = 1.0
    np.testing.assert_allclose(scaled, expected, atol=1e-12)
    with pytest.raises(InvalidInputError):
        endo_cov_deriv(omega, np.eye(3))


@pytest.mark.parametrize("branch", ["A", "B"])
@pytest.mark.parametrize("eps", [1, -1])
def test_pair_connection_factorizes(sample_pair, plane_points, branch, eps):
    spec = sample_pair(branch=branch, mu=-1)
    omega = pair_omega(spec, plane_points)
    J = paracomplex_from_frame(FrameField.identity(1, 2), eps)
    report = factorization_check(omega, J, plane_points)
    assert report.holds
    np.testing.assert_allclose(report.alpha, expected_alpha(spec, eps).evaluate(plane_points), atol=1e-9)
    assert abs(square_norm(omega, J, plane_points)) < 1e-9
    assert isotropic_parakahler(omega, J, plane_points)


@pytest.mark.parametrize("branch", ["A", "B"])
@pytest.mark.parametrize("mu", [1, -1])
def test_pair_sections_are_fully_lightlike(sample_pair, plane_points, branch, mu):
    spec = sample_pair(branch=branch, mu=mu)
    omega = pair_omega(spec, plane_points)
    for eps in (1, -1):
        report = fully_lightlike_check(omega, eps, plane_points)
        assert report.holds, report.reason
        assert report.mu == expected_side_mu(spec, eps)
        np.testing.assert_allclose(report.alpha, expected_alpha(spec, eps).evaluate(plane_points), atol=1e-9)


def test_flat_trivial_connection_is_not_lightlike(plane_points):
    omega = ConnectionForm(symbolic=MatrixForm.zeros(4, 4, 1, 2))
    report = fully_lightlike_check(omega, 1, plane_points)
    assert not report.holds
    assert report.reason == "derivative vanishes at a sample point"


def _constant_compatible(n, m, points, seed=0):
    rng = np.random.default_rng(seed)
    size = 4 * n
    G = neutral_metric(n)
    W = np.zeros((points.shape[0], size, size, m))
    for k in range(m):
        S = rng.uniform(-1.0, 1.0, (size, size))
        W[..., k] = G @ (S - S.T)
    return ConnectionForm(samples=W, points=points)


@pytest.mark.parametrize("eps", [1, -1])
@pytest.mark.parametrize("mu", [1, -1])
def test_walker_closed_forms_match_metric_pairing(plane_points, eps, mu):
    omega = _constant_compatible(2, 2, plane_points)
    assert compatibility_residual(omega, plane_points) < 1e-12
    D = walker_distribution(2, eps, mu)
    np.testing.assert_allclose(walker_closed_forms(omega, eps, mu, plane_points), walker_matrix(omega, D, plane_points), atol=1e-12)


def test_broken_walker_distribution(plane_points):
    dx1 = DifferentialForm.dx(1, 2)
    omega = ConnectionForm(symbolic=_lower({(3, 2): dx1, (2, 3): dx1}))
    D = walker_distribution(1, 1, 1)
    assert walker_residual(omega, D, plane_points) == pytest.approx(1.0)
    assert not walker_check(omega, D, plane_points)


def test_walker_needs_lightlike_generators(plane_points):
    omega = ConnectionForm(symbolic=MatrixForm.zeros(4, 4, 1, 2))
    with pytest.raises(PreconditionError):
        walker_check(omega, np.eye(4)[:, :2], plane_points)


def test_walker_distribution_to_paracomplex(sample_pair, plane_points):
    omega = pair_omega(sample_pair(branch="A", mu=1), plane_points)
    assert walker_check(omega, walker_distribution(1, 1, 1), plane_points)
    result = walker_to_paracomplex(FrameField.identity(1, 2), omega, 1, parse("1", 2), plane_points)
    assert result.factorization.holds
    assert result.distribution_residual == 0.0
    assert result.frame_residual < 1e-9
    assert result.clause_min_norm > 0.5


@pytest.mark.parametrize("eps", [1, -1])
def test_gauge_removes_horizontal_part(sample_pair, plane_points, eps):
    spec = sample_pair()
    omega = pair_omega(spec, plane_points)
    assert horizontality_residual(omega, eps, plane_points) < 1e-12
    assert horizontality_check(omega, eps, plane_points)
    frame, gauged = gauge_horizontal(FrameField.identity(1, 2), omega, spec.f(eps), eps, plane_points)
    w = gauged.symbolic
    horizontal = (w.form(4, 2) - w.form(3, 1).scale(float(eps))).evaluate(plane_points)
    assert np.max(np.abs(horizontal)) < 1e-9
    assert horizontality_check(gauged, eps, plane_points)
    assert compatibility_residual(gauged, plane_points) < 1e-9
    assert frame.is_admissible_shape(plane_points)


def test_non_horizontal_connection(plane_points):
    omega = ConnectionForm(symbolic=compatible_completion(_lower({(4, 2): DifferentialForm.dx(1, 2, parse("x2", 2))})))
    assert horizontality_residual(omega, 1, plane_points) == pytest.approx(1.0)
    assert not horizontality_check(omega, 1, plane_points)


def test_gauge_rejects_wrong_function(sample_pair, plane_points):
    omega = pair_omega(sample_pair(), plane_points)
    with pytest.raises(PreconditionError):
        gauge_horizontal(FrameField.identity(1, 2), omega, parse("x2", 2), 1, plane_points)
