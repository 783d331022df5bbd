"""Linear algebra of the neutral signature (2n, 2n).

Matrices are plain 4n x 4n numpy arrays read in n x n blocks A_(i,j),
i, j in 1..4. The metric is G = diag(I_2n, -I_2n) and W is the fixed
light-like span of

    xi_i     = e_i - e_(2n+i)       (i = 1..n)
    xi_(n+i) = e_(n+i) + e_(3n+i)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Tuple

import numpy as np
from scipy.linalg import coshm, expm, null_space, sinhm

from src.domain.errors import InvalidInputError, PreconditionError

logger = logging.getLogger(__name__)

GROUP_KINDS = ("G1", "G2", "G3", "H", "B", "C")


def block_size(A: np.ndarray) -> int:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 4:
        raise InvalidInputError(f"expected a 4n x 4n matrix, got shape {A.shape}")
    return A.shape[0] // 4


def neutral_metric(n: int) -> np.ndarray:
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    return np.diag(np.concatenate([np.ones(2 * n), -np.ones(2 * n)]))


def block(A: np.ndarray, i: int, j: int) -> np.ndarray:
    """The (i, j)-block A_(i,j), 1-based."""
    n = block_size(A)
    return np.asarray(A)[(i - 1) * n : i * n, (j - 1) * n : j * n]


def from_blocks(blocks) -> np.ndarray:
    return np.block([[np.asarray(b, dtype=float) for b in row] for row in blocks])


def lambda_matrix(n: int) -> np.ndarray:
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    I, O = np.eye(n), np.zeros((n, n))
    return from_blocks(
        [
            [O, -I, O, I],
            [I, O, I, O],
            [O, I, O, -I],
            [I, O, I, O],
        ]
    )


def xi_basis(n: int) -> np.ndarray:
    """Columns xi_1 .. xi_2n spanning W (4n x 2n)."""
    I, O = np.eye(n), np.zeros((n, n))
    return from_blocks([[I, O], [O, I], [-I, O], [O, I]])


def so_residuals(A: np.ndarray) -> Tuple[float, float]:
    """(||A^t G A - G||_inf, |det A - 1|)."""
    A = np.asarray(A, dtype=float)
    G = neutral_metric(block_size(A))
    metric = float(np.max(np.abs(A.T @ G @ A - G)))
    return metric, float(abs(np.linalg.det(A) - 1.0))


def so_member(A: np.ndarray, tol: float = 1e-9) -> bool:
    metric, det = so_residuals(A)
    return metric <= tol and det <= tol


def cross(A: np.ndarray) -> np.ndarray:
    """The block permutation A -> A^x. It is an involution."""
    b = lambda i, j: block(A, i, j)  # noqa: E731
    return from_blocks(
        [
            [b(2, 2), -b(2, 1), b(4, 2), b(4, 1)],
            [-b(1, 2), b(1, 1), b(3, 2), b(3, 1)],
            [b(2, 4), b(2, 3), b(4, 4), -b(4, 3)],
            [b(1, 4), b(1, 3), -b(3, 4), b(3, 3)],
        ]
    )


def block_condition_residual(A: np.ndarray) -> float:
    """Max deviation from A_(i,j) + (-1)^j A_(i,j+2) = (-1)^i (A_(i+2,j) + (-1)^j A_(i+2,j+2))."""
    worst = 0.0
    for i in (1, 2):
        for j in (1, 2):
            sj = (-1) ** j
            lhs = block(A, i, j) + sj * block(A, i, j + 2)
            rhs = (-1) ** i * (block(A, i + 2, j) + sj * block(A, i + 2, j + 2))
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def w_projection_residual(A: np.ndarray) -> float:
    """Least-squares distance of A*xi_j from W, max over j."""
    A = np.asarray(A, dtype=float)
    Xi = xi_basis(block_size(A))
    image = A @ Xi
    coeffs, *_ = np.linalg.lstsq(Xi, image, rcond=None)
    return float(np.max(np.abs(image - Xi @ coeffs)))


def w_membership(A: np.ndarray, tol: float = 1e-9) -> Dict[str, Any]:
    """Block condition and projection test of A(W) in W, side by side.

    The block condition decides; "agree" is false when the projection test would decide otherwise.
    """
    residual = block_condition_residual(A)
    projection = w_projection_residual(A)
    agree = (residual <= tol) == (projection <= tol)
    if not agree:
        logger.warning(
            "block condition %.3e and projection residual %.3e disagree at tol %.1e",
            residual,
            projection,
            tol,
        )
    return {
        "preserves": residual <= tol,
        "block_residual": residual,
        "projection_residual": projection,
        "agree": agree,
    }


def preserves_W(A: np.ndarray, tol: float = 1e-9) -> bool:
    return w_membership(A, tol)["preserves"]


def _p_blocks(A: np.ndarray) -> np.ndarray:
    rows = []
    for i in (1, 2):
        rows.append([block(A, i, j) + (-1) ** j * block(A, i, j + 2) for j in (1, 2)])
    return from_blocks(rows)


def p_matrices(A: np.ndarray, tol: float = 1e-9) -> Tuple[np.ndarray, np.ndarray]:
    """Representation matrices (P, P^x) of A and A^x on the basis of W.

    Raises:
        PreconditionError: A does not preserve W.
    """
    A = np.asarray(A, dtype=float)
    if not preserves_W(A, tol):
        raise PreconditionError(
            f"matrix does not preserve W (block residual {block_condition_residual(A):.3e})"
        )
    Xi = xi_basis(block_size(A))
    P = _p_blocks(A)
    A_cross = cross(A)
    P_cross = _p_blocks(A_cross)
    scale = max(1.0, float(np.max(np.abs(A))))
    for name, M, R in (("P", A, P), ("P^x", A_cross, P_cross)):
        residual = float(np.max(np.abs(M @ Xi - Xi @ R)))
        if residual > tol * scale:
            raise PreconditionError(f"{name} does not represent the action on W: {residual:.3e}")
    return P, P_cross


def p_cross_formula(A: np.ndarray) -> np.ndarray:
    """P^x from the blocks of A directly.

    P^x_ij = (-1)^(i'+j') (A_(i',j') + (-1)^(i'-1) A_(i'+2,j')) with i' = 3-i, j' = 3-j.
    """
    rows = []
    for i in (1, 2):
        row = []
        for j in (1, 2):
            ip, jp = 3 - i, 3 - j
            row.append((-1) ** (ip + jp) * (block(A, ip, jp) + (-1) ** (ip - 1) * block(A, ip + 2, jp)))
        rows.append(row)
    return from_blocks(rows)


def commutes_with_lambda(A: np.ndarray, tol: float = 1e-9) -> bool:
    """Whether A commutes with Lambda_n."""
    A = np.asarray(A, dtype=float)
    L = lambda_matrix(block_size(A))
    return float(np.max(np.abs(A @ L - L @ A))) <= tol


@dataclass
class DeterminantReport:
    det_p: float
    det_p_cross: float
    product_residual: float
    p_equals_cross: bool
    det_p_residual: Optional[float]
    holds: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "det_p": self.det_p,
            "det_p_cross": self.det_p_cross,
            "product_residual": self.product_residual,
            "p_equals_cross": self.p_equals_cross,
            "det_p_residual": self.det_p_residual,
            "holds": self.holds,
        }


def determinant_check(A: np.ndarray, tol: float = 1e-9) -> DeterminantReport:
    """det P * det P^x = 1, and det P = 1 whenever P = P^x."""
    P, P_cross = p_matrices(A, tol)
    det_p = float(np.linalg.det(P))
    det_c = float(np.linalg.det(P_cross))
    product = abs(det_p * det_c - 1.0)
    equal = float(np.max(np.abs(P - P_cross))) <= tol
    det_residual = abs(det_p - 1.0) if equal else None
    holds = product <= tol and (det_residual is None or det_residual <= tol)
    return DeterminantReport(det_p, det_c, product, equal, det_residual, holds)


# --- special families ----------------------------------------------------


def b_matrix(b) -> np.ndarray:
    b1, b2, b3, b4 = (float(v) for v in b)
    return np.array(
        [
            [b1, -b2, b3, b4],
            [b2, b1, -b4, b3],
            [b3, -b4, b1, b2],
            [b4, b3, -b2, b1],
        ]
    )


def c_matrix(c: float, c_prime: float, eps: Optional[int] = None, t: Optional[float] = None) -> np.ndarray:
    """The n = 1 matrix C fixing e_1 whose lower 3x3 block has the W-preserving shape.

    With K = c c'/2 nonzero, eps = sign K and t = log|c/c'| are forced; with
    K = 0 both are free (defaults eps = +1, t = 0).
    """
    K = c * c_prime / 2.0
    if K != 0.0:
        forced_eps = 1 if K > 0 else -1
        forced_t = float(np.log(abs(c / c_prime)))
        if eps is not None and eps != forced_eps:
            raise InvalidInputError(f"eps must equal sign(K) = {forced_eps}")
        if t is not None and abs(t - forced_t) > 1e-12:
            raise InvalidInputError(f"t must equal log|c/c'| = {forced_t}")
        eps, t = forced_eps, forced_t
    else:
        eps = 1 if eps is None else eps
        t = 0.0 if t is None else float(t)
    if eps not in (1, -1):
        raise InvalidInputError("eps must be +1 or -1")
    ch, sh = np.cosh(t), np.sinh(t)
    C = np.eye(4)
    C[1:, 1:] = [
        [eps * ch + K, c, eps * sh - K],
        [c_prime, 1.0, -c_prime],
        [eps * sh + K, c, eps * ch - K],
    ]
    return C


def xy_block_member(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """blockdiag(X, Y, X, Y): preserves W with P = diag(X, Y) but P^x = diag(Y, X)."""
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    O = np.zeros_like(X)
    return from_blocks([[X, O, O, O], [O, Y, O, O], [O, O, X, O], [O, O, O, Y]])


def _param(params: Mapping[str, Any], key: str, n: int) -> np.ndarray:
    if key not in params:
        raise InvalidInputError(f"missing group parameter {key!r}")
    value = np.atleast_2d(np.asarray(params[key], dtype=float))
    if value.shape != (n, n):
        raise InvalidInputError(f"parameter {key!r} must be {n}x{n}, got {value.shape}")
    return value


def _require(residual: float, tol: float, what: str) -> None:
    if residual > tol:
        raise InvalidInputError(f"constraint violation: {what} (residual {residual:.3e})")


def _max_abs(M: np.ndarray) -> float:
    return float(np.max(np.abs(M)))


def sample_group(kind: str, params: Mapping[str, Any], n: int, tol: float = 1e-9) -> np.ndarray:
    """Assemble a member of one of the subgroup families from its parameters.

    Args:
        kind: one of G1, G2, G3, H (any n) or B, C (n = 1).
        params: blocks A11/A21/A31/A41, X/Y, b = [b1..b4] or c, c_prime
            (with eps, t when c c' = 0).
        n: block size.
        tol: tolerance of the defining constraints.

    Raises:
        InvalidInputError: unknown kind, bad shapes or violated constraints.
    """
    I, O = np.eye(n), np.zeros((n, n))
    if kind == "G1":
        a, b = _param(params, "A11", n), _param(params, "A21", n)
        _require(_max_abs(a.T @ a + b.T @ b - I), tol, "A11^t A11 + A21^t A21 = I")
        _require(_max_abs(a.T @ b - b.T @ a), tol, "A11^t A21 - A21^t A11 = 0")
        A = from_blocks([[a, -b, O, O], [b, a, O, O], [O, O, a, b], [O, O, -b, a]])
    elif kind in ("G2", "G3"):
        key = "A31" if kind == "G2" else "A41"
        a, b = _param(params, "A11", n), _param(params, key, n)
        _require(_max_abs(a.T @ a - b.T @ b - I), tol, f"A11^t A11 - {key}^t {key} = I")
        _require(_max_abs(a.T @ b - b.T @ a), tol, f"A11^t {key} - {key}^t A11 = 0")
        if kind == "G2":
            A = from_blocks([[a, O, b, O], [O, a, O, b], [b, O, a, O], [O, b, O, a]])
        else:
            A = from_blocks([[a, O, O, b], [O, a, -b, O], [O, -b, a, O], [b, O, O, a]])
    elif kind == "H":
        X, Y = _param(params, "X", n), _param(params, "Y", n)
        _require(_max_abs(X - X.T), tol, "X symmetric")
        _require(_max_abs(X @ X - Y - Y.T), tol, "X^2 = Y + Y^t")
        A = from_blocks([[I, O, O, O], [O, I + Y, X, -Y], [O, X, I, -X], [O, Y, X, I - Y]])
    elif kind == "B":
        if n != 1:
            raise InvalidInputError("family B exists for n = 1 only")
        b = np.asarray(params.get("b", ()), dtype=float)
        if b.shape != (4,):
            raise InvalidInputError("parameter 'b' must hold four numbers")
        _require(abs(b[0] ** 2 + b[1] ** 2 - b[2] ** 2 - b[3] ** 2 - 1.0), tol, "b1^2 + b2^2 - b3^2 - b4^2 = 1")
        A = b_matrix(b)
    elif kind == "C":
        if n != 1:
            raise InvalidInputError("family C exists for n = 1 only")
        try:
            c, c_prime = float(params["c"]), float(params["c_prime"])
        except KeyError as exc:
            raise InvalidInputError(f"missing group parameter {exc.args[0]!r}") from exc
        A = c_matrix(c, c_prime, params.get("eps"), params.get("t"))
    else:
        raise InvalidInputError(f"unknown group kind {kind!r}; expected one of {GROUP_KINDS}")

    metric, det = so_residuals(A)
    scale = max(1.0, _max_abs(A)) ** 2
    if metric > tol * scale or det > tol * scale:
        raise InvalidInputError(
            f"constraint violation: {kind} parameters give no SO(2n,2n) member "
            f"(metric residual {metric:.3e}, det residual {det:.3e})"
        )
    return A


def _skew(rng: np.random.Generator, n: int, spread: float) -> np.ndarray:
    R = np.triu(rng.uniform(-spread, spread, (n, n)), 1)
    return R - R.T


def _symmetric(rng: np.random.Generator, n: int, spread: float) -> np.ndarray:
    R = rng.uniform(-spread, spread, (n, n))
    return (R + R.T) / 2.0


def random_group_params(
    kind: str,
    n: int,
    rng: np.random.Generator,
    equal_c: bool = False,
) -> Dict[str, Any]:
    """Random parameters satisfying the constraints of `kind`.

    For C, `equal_c` draws c = c' (the case P = P^x).
    """
    if kind == "G1":
        H = _symmetric(rng, n, 1.0) + 1j * _skew(rng, n, 1.0)
        U = expm(1j * H)
        return {"A11": U.real, "A21": U.imag}
    if kind in ("G2", "G3"):
        S = _symmetric(rng, n, 0.8)
        Q = expm(_skew(rng, n, 1.0))
        key = "A31" if kind == "G2" else "A41"
        return {"A11": Q @ np.real(coshm(S)), key: Q @ np.real(sinhm(S))}
    if kind == "H":
        X = _symmetric(rng, n, 0.8)
        return {"X": X, "Y": X @ X / 2.0 + _skew(rng, n, 0.8)}
    if kind == "B":
        b3, b4 = rng.uniform(-1.0, 1.0, 2)
        r = np.sqrt(1.0 + b3**2 + b4**2)
        theta = rng.uniform(0.0, 2.0 * np.pi)
        return {"b": [r * np.cos(theta), r * np.sin(theta), b3, b4]}
    if kind == "C":
        c = rng.uniform(0.3, 1.5) * rng.choice([-1.0, 1.0])
        c_prime = c if equal_c else rng.uniform(0.3, 1.5) * rng.choice([-1.0, 1.0])
        return {"c": float(c), "c_prime": float(c_prime)}
    raise InvalidInputError(f"unknown group kind {kind!r}; expected one of {GROUP_KINDS}")


def _lie_algebra_basis(n: int) -> np.ndarray:
    """Basis G (E_ab - E_ba), a < b, of so(2n, 2n); shape (d, 4n, 4n)."""
    size = 4 * n
    G = neutral_metric(n)
    basis = []
    for a in range(size):
        for b in range(a + 1, size):
            S = np.zeros((size, size))
            S[a, b], S[b, a] = 1.0, -1.0
            basis.append(G @ S)
    return np.array(basis)


def so_random(n: int, seed: int) -> np.ndarray:
    """exp(X) for a random X in so(2n, 2n) with entries uniform in [-0.5, 0.5]."""
    rng = np.random.default_rng(seed)
    size = 4 * n
    S = _skew(rng, size, 0.5)
    return expm(neutral_metric(n) @ S)


def stabilizer_random(n: int, seed: int) -> np.ndarray:
    """A random SO(2n, 2n) element preserving W.

    A random Lie algebra element is projected onto the stabilizer algebra
    {X : (I - Pi) X Xi = 0} (Pi the orthogonal projector onto W) and
    exponentiated.
    """
    rng = np.random.default_rng(seed)
    Xi = xi_basis(n)
    projector = np.eye(4 * n) - Xi @ np.linalg.pinv(Xi)
    basis = _lie_algebra_basis(n)
    constraints = np.stack([(projector @ X @ Xi).ravel() for X in basis], axis=1)
    kernel = null_space(constraints)
    coeffs = rng.uniform(-0.5, 0.5, kernel.shape[1])
    X = np.tensordot(kernel @ coeffs, basis, axes=1)
    logger.debug("stabilizer algebra of W has dimension %d for n=%d", kernel.shape[1], n)
    return expm(X)
