import numpy as np
import pytest

from src.core.neutral import so_random, xi_basis
from src.core.structures import (
    FrameField,
    complete_isotropic_basis,
    frame_from_isotropic,
    hat_gram,
    hat_metric,
    i_prime,
    induced_2nvector,
    lambda2_basis,
    lightlike_section,
    nilpotent_component_matrix,
    nilpotent_from_frame,
    nilpotent_from_section,
    paracomplex_component_matrix,
    paracomplex_from_frame,
    paracomplex_from_section,
    random_frame,
    section_from_nilpotent,
    section_from_paracomplex,
    side_components,
    timelike_section,
    xi_components,
)
from src.domain.errors import InvalidInputError, PreconditionError

POINT = np.zeros((1, 1))


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("eps", [1, -1])
def test_paracomplex_component_invariants(n, eps):
    J = paracomplex_component_matrix(n, eps)
    assert np.array_equal(J @ J, np.eye(4 * n))
    structure = paracomplex_from_frame(random_frame(n, seed=5), eps)
    residuals = structure.invariants(POINT)
    assert residuals["square"] < 1e-9
    assert residuals["h_reversing"] < 1e-9


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("eps", [1, -1])
@pytest.mark.parametrize("mu", [1, -1])
def test_nilpotent_invariants(n, eps, mu):
    structure = nilpotent_from_frame(random_frame(n, seed=7), eps, mu)
    residuals = structure.invariants(POINT)
    assert residuals["square"] < 1e-9
    assert residuals["rank_defect"] == 0.0
    assert residuals["image_isotropy"] < 1e-9
    assert residuals["h_phi_N_phi"] < 1e-9
    assert np.max(np.abs(induced_2nvector(structure, POINT))) > 1e-3


def test_generators_span_kernel():
    structure = nilpotent_from_frame(FrameField.identity(1, 1), 1)
    X = structure.generators(POINT)[0]
    assert np.max(np.abs(structure.matrix(POINT)[0] @ X)) < 1e-12


def test_bad_sign_is_rejected():
    with pytest.raises(InvalidInputError):
        i_prime(1, 0)


def test_frame_needs_one_representation():
    with pytest.raises(InvalidInputError):
        FrameField(1, 1)


def test_lambda2_basis_is_pseudo_orthonormal():
    basis = lambda2_basis()
    keys = sorted(basis)
    gram = np.array([[hat_metric(basis[a], basis[b]) for b in keys] for a in keys])
    assert np.allclose(gram, np.diag(np.diag(gram)))
    assert np.allclose(np.abs(np.diag(gram)), 1.0)
    assert np.allclose(hat_gram(), hat_gram().T)


@pytest.mark.parametrize("eps", [1, -1])
def test_timelike_section_gives_frame_paracomplex(eps):
    J = paracomplex_from_section(timelike_section(eps), eps)
    np.testing.assert_allclose(J, paracomplex_component_matrix(1, eps), atol=1e-12)
    np.testing.assert_allclose(section_from_paracomplex(J), timelike_section(eps), atol=1e-12)


@pytest.mark.parametrize("eps", [1, -1])
@pytest.mark.parametrize("mu", [1, -1])
def test_lightlike_section_round_trip(eps, mu):
    section = lightlike_section(eps, mu)
    assert abs(hat_metric(section, section)) < 1e-12
    assert np.max(np.abs(side_components(section)[-eps])) < 1e-12
    N = nilpotent_from_section(section, eps)
    assert np.max(np.abs(N @ N)) < 1e-12
    np.testing.assert_allclose(section_from_nilpotent(N), section, atol=1e-12)


@pytest.mark.parametrize("eps", [1, -1])
@pytest.mark.parametrize("mu", [1, -1])
def test_frame_nilpotent_section_sign(eps, mu):
    section = section_from_nilpotent(nilpotent_component_matrix(1, eps, mu))
    np.testing.assert_allclose(section, lightlike_section(eps, mu * eps), atol=1e-12)
    if eps < 0:
        assert np.max(np.abs(section - lightlike_section(eps, mu))) > 0.5


def test_lightlike_section_needs_a_sign():
    with pytest.raises(InvalidInputError):
        lightlike_section(1, 0)


def test_section_preconditions():
    with pytest.raises(PreconditionError):
        nilpotent_from_section(timelike_section(1), 1)
    with pytest.raises(PreconditionError):
        nilpotent_from_section(lightlike_section(1, 1), -1)
    with pytest.raises(PreconditionError):
        nilpotent_from_section(np.zeros((4, 4)), 1)
    with pytest.raises(PreconditionError):
        paracomplex_from_section(lightlike_section(1, 1), 1)


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_isotropic_completion_builds_admissible_frame(n, seed):
    xi = so_random(n, seed) @ xi_basis(n)
    xi_prime = complete_isotropic_basis(xi)
    frame, eps = frame_from_isotropic(xi, xi_prime)
    assert eps in (1, -1)
    assert frame.is_admissible_shape(POINT)
    E = frame.values(POINT)[0]
    np.testing.assert_allclose(E @ xi_components(n, eps), xi, atol=1e-9)


def test_isotropic_completion_rejects_spacelike_plane():
    with pytest.raises(PreconditionError):
        complete_isotropic_basis(np.eye(4)[:, :2])
    with pytest.raises(InvalidInputError):
        complete_isotropic_basis(np.eye(4)[:, :3])
