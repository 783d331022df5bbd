import numpy as np
import pytest

from src.core.neutral import (
    GROUP_KINDS,
    block_condition_residual,
    c_matrix,
    cross,
    lambda_matrix,
    neutral_metric,
    p_cross_formula,
    p_matrices,
    commutes_with_lambda,
    determinant_check,
    preserves_W,
    random_group_params,
    xy_block_member,
    sample_group,
    so_member,
    so_random,
    stabilizer_random,
    w_membership,
    w_projection_residual,
    xi_basis,
)
from src.domain.errors import InvalidInputError, PreconditionError


@pytest.mark.parametrize("n", [1, 2, 3])
def test_lambda_square_zero_and_rank(n):
    L = lambda_matrix(n)
    assert np.max(np.abs(L @ L)) == 0.0
    assert np.linalg.matrix_rank(L) == 2 * n


@pytest.mark.parametrize("n", [1, 2])
def test_w_is_lightlike(n):
    Xi = xi_basis(n)
    assert np.max(np.abs(Xi.T @ neutral_metric(n) @ Xi)) == 0.0


def test_cross_is_involution(rng):
    A = rng.standard_normal((8, 8))
    np.testing.assert_array_equal(cross(cross(A)), A)


def test_identity_preserves_w():
    A = np.eye(4)
    assert so_member(A)
    assert preserves_W(A)
    P, P_cross = p_matrices(A)
    np.testing.assert_array_equal(P, np.eye(2))
    np.testing.assert_array_equal(P_cross, np.eye(2))


def test_w_tests_can_disagree_near_tol():
    # block residual d, projection residual d/2
    A = np.eye(4)
    A[0, 0] += 1.5e-9
    near = w_membership(A, 1e-9)
    assert near["block_residual"] == pytest.approx(1.5e-9, rel=1e-4)
    assert near["projection_residual"] == pytest.approx(7.5e-10, rel=1e-4)
    assert (near["preserves"], near["agree"]) == (False, False)
    assert not preserves_W(A, 1e-9)
    loose = w_membership(A, 1e-6)
    assert (loose["preserves"], loose["agree"]) == (True, True)


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("kind", ["G1", "G2", "G3", "H"])
def test_family_members(kind, n, rng):
    A = sample_group(kind, random_group_params(kind, n, rng), n, tol=1e-9)
    assert so_member(A, 1e-9)
    assert block_condition_residual(A) < 1e-9
    assert w_projection_residual(A) < 1e-9
    report = determinant_check(A, 1e-8)
    assert report.holds
    assert report.p_equals_cross


@pytest.mark.parametrize("kind", ["B", "C"])
def test_low_rank_families(kind, rng):
    A = sample_group(kind, random_group_params(kind, 1, rng, equal_c=True), 1, tol=1e-9)
    assert so_member(A, 1e-9)
    assert preserves_W(A, 1e-9)


def test_g1_constraint_violation():
    with pytest.raises(InvalidInputError):
        sample_group("G1", {"A11": [[2.0]], "A21": [[0.0]]}, 1)


def test_b_and_c_need_rank_four():
    with pytest.raises(InvalidInputError):
        sample_group("B", {"b": [1, 0, 0, 0]}, 2)


def test_unknown_kind():
    with pytest.raises(InvalidInputError):
        sample_group("G4", {}, 1)
    assert "G4" not in GROUP_KINDS


def test_c_matrix_forces_eps_and_t():
    C = c_matrix(0.5, -1.0)
    assert so_member(C)
    with pytest.raises(InvalidInputError):
        c_matrix(0.5, -1.0, eps=1)


@pytest.mark.parametrize("n", [1, 2])
def test_stabilizer_determinant_product(n):
    for seed in range(5):
        A = stabilizer_random(n, seed)
        assert so_member(A, 1e-9)
        report = determinant_check(A, 1e-8)
        assert report.product_residual < 1e-8


def test_cross_formula_matches_blocks():
    A = stabilizer_random(2, 11)
    _, P_cross = p_matrices(A, 1e-9)
    np.testing.assert_allclose(p_cross_formula(A), P_cross, atol=1e-12)


def test_generic_member_does_not_preserve_w():
    A = so_random(1, 3)
    assert so_member(A, 1e-9)
    with pytest.raises(PreconditionError):
        p_matrices(A)


def test_p_can_differ_from_its_cross():
    X = np.eye(2)
    Y = np.array([[0.0, -1.0], [1.0, 0.0]])
    A = xy_block_member(X, Y)
    P, P_cross = p_matrices(A)
    assert np.max(np.abs(P - P_cross)) == pytest.approx(1.0)
    assert np.linalg.det(P) == pytest.approx(1.0)
    assert determinant_check(A).holds


def test_lambda_commutes_with_h_members(rng):
    A = sample_group("H", random_group_params("H", 2, rng), 2)
    assert commutes_with_lambda(A)
    assert not commutes_with_lambda(xy_block_member(np.eye(2), np.array([[0.0, -1.0], [1.0, 0.0]])))
