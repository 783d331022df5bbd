"""Nilpotent and paracomplex structures, admissible frames and twistor sections.

Frames are 4n x 4n matrix fields whose columns are e_1 .. e_4n written in a
fixed background trivialization. Structures are stored by their component
matrix in an admissible frame (N e = e N_e, J e = e J_e); background
matrices are E K_e E^-1.

Bivectors (n = 1) are antisymmetric 4x4 matrices, a^b = a b^t - b a^t.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.core.exterior import MatrixForm, mwedge
from src.core.neutral import block_size, lambda_matrix, neutral_metric, so_random, xi_basis
from src.domain.errors import InvalidInputError, PreconditionError

logger = logging.getLogger(__name__)

SQRT2 = np.sqrt(2.0)
BIVECTOR_KEYS: Tuple[Tuple[int, int], ...] = tuple(itertools.combinations(range(1, 5), 2))


def _check_sign(value: int, name: str) -> int:
    if value not in (1, -1):
        raise InvalidInputError(f"{name} must be +1 or -1, got {value!r}")
    return int(value)


def i_n_eps(n: int, eps: int) -> np.ndarray:
    _check_sign(eps, "eps")
    diag = np.ones(n)
    diag[0] = eps
    return np.diag(diag)


def i_prime(n: int, eps: int) -> np.ndarray:
    """blockdiag(I_n, I_n, I_n, I_{n,eps})."""
    diag = np.ones(4 * n)
    diag[3 * n] = _check_sign(eps, "eps")
    return np.diag(diag)


def sign_matrix(n: int, mu: int) -> np.ndarray:
    """blockdiag(I_n, I_n, mu I_n, mu I_n)."""
    _check_sign(mu, "mu")
    return np.diag(np.concatenate([np.ones(2 * n), mu * np.ones(2 * n)]))


def standard_paracomplex(n: int) -> np.ndarray:
    I, O = np.eye(n), np.zeros((n, n))
    return np.block([[O, O, I, O], [O, O, O, -I], [I, O, O, O], [O, -I, O, O]])


def paracomplex_component_matrix(n: int, eps: int) -> np.ndarray:
    """J_e of the eps-paracomplex structure in an admissible frame."""
    Ip = i_prime(n, eps)
    return Ip @ standard_paracomplex(n) @ Ip


def nilpotent_component_matrix(n: int, eps: int, mu: int = 1) -> np.ndarray:
    """N_e of the eps-nilpotent structure related to J by (e, mu).

    mu = +1 gives I' Lambda_n I', the structure admitted by e itself.
    """
    Ip = i_prime(n, eps)
    M = sign_matrix(n, mu)
    return M @ Ip @ lambda_matrix(n) @ Ip @ M


def xi_components(n: int, eps: int) -> np.ndarray:
    """Frame components of the light-like generators xi_1 .. xi_2n (4n x 2n).

    xi_i = e_i - e_(2n+i), xi_(n+1) = e_(n+1) + eps e_(3n+1), xi_(n+i) = e_(n+i) + e_(3n+i).
    """
    return i_prime(n, eps) @ xi_basis(n)


@dataclass
class FrameField:
    """Columns e_1 .. e_4n over a coordinate box.

    Either `symbolic` (a degree-0 MatrixForm) or `samples` on the fixed grid
    `points` is set.
    """

    n: int
    m: int
    symbolic: Optional[MatrixForm] = None
    samples: Optional[np.ndarray] = None
    points: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if (self.symbolic is None) == (self.samples is None):
            raise InvalidInputError("a frame is either symbolic or sampled")
        if self.symbolic is not None:
            if self.symbolic.degree != 0 or self.symbolic.shape != (4 * self.n, 4 * self.n):
                raise InvalidInputError("a symbolic frame is a 4n x 4n matrix of functions")
        else:
            self.samples = np.asarray(self.samples, dtype=float)
            if self.points is None or self.samples.shape[1:] != (4 * self.n, 4 * self.n):
                raise InvalidInputError("a sampled frame needs (N, 4n, 4n) values and their points")

    @classmethod
    def constant(cls, E: np.ndarray, m: int) -> "FrameField":
        E = np.asarray(E, dtype=float)
        return cls(block_size(E), m, symbolic=MatrixForm.constant(E, m))

    @classmethod
    def identity(cls, n: int, m: int) -> "FrameField":
        return cls.constant(np.eye(4 * n), m)

    def values(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.symbolic is not None:
            return self.symbolic.values(points)
        if self.points.shape != points.shape or not np.allclose(self.points, points):
            raise InvalidInputError("sampled frame evaluated off its grid")
        return self.samples

    def residuals(self, points: np.ndarray) -> Dict[str, float]:
        E = self.values(points)
        G = neutral_metric(self.n)
        metric = np.einsum("nji,jk,nkl->nil", E, G, E) - G
        det = np.linalg.det(E)
        return {
            "pseudo_orthonormal": float(np.max(np.abs(metric))),
            "min_det": float(np.min(det)),
        }

    def is_admissible_shape(self, points: np.ndarray, tol: float = 1e-9) -> bool:
        res = self.residuals(points)
        return res["pseudo_orthonormal"] <= tol and res["min_det"] > 0.0


def random_frame(n: int, seed: int, m: int = 1) -> FrameField:
    """A constant oriented pseudo-orthonormal frame."""
    return FrameField.constant(so_random(n, seed), m)


def _frame_inverse(E: np.ndarray, n: int) -> np.ndarray:
    G = neutral_metric(n)
    return G @ np.swapaxes(E, -1, -2) @ G


@dataclass
class _Structure:
    frame: FrameField
    eps: int
    component: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.frame.n

    def matrix(self, points: np.ndarray) -> np.ndarray:
        """Background matrices E K_e E^-1, shape (N, 4n, 4n)."""
        E = self.frame.values(points)
        return E @ self.component @ _frame_inverse(E, self.n)

    def symbolic_matrix(self) -> MatrixForm:
        if self.frame.symbolic is None:
            raise InvalidInputError("symbolic matrix needs a symbolic frame")
        E = self.frame.symbolic
        m = self.frame.m
        G = MatrixForm.constant(neutral_metric(self.n), m)
        inverse = mwedge(mwedge(G, E.transpose()), G)
        return mwedge(mwedge(E, MatrixForm.constant(self.component, m)), inverse)


@dataclass
class NilpotentStructure(_Structure):
    mu: int = 1

    def invariants(self, points: np.ndarray, rng: Optional[np.random.Generator] = None) -> Dict[str, float]:
        """Residuals of N^2 = 0, rank 2n, isotropic image and h(phi, N phi) = 0."""
        N = self.matrix(points)
        G = neutral_metric(self.n)
        rng = np.random.default_rng(0) if rng is None else rng
        square = float(np.max(np.abs(N @ N)))
        ranks = np.linalg.matrix_rank(N, tol=1e-8)
        image = np.einsum("nji,jk,nkl->nil", N, G, N)
        phi = rng.standard_normal((20, 4 * self.n))
        skew = float(np.max(np.abs(np.einsum("qi,ij,njk,qk->nq", phi, G, N, phi))))
        return {
            "square": square,
            "rank_defect": float(np.max(np.abs(ranks - 2 * self.n))),
            "image_isotropy": float(np.max(np.abs(image))),
            "h_phi_N_phi": skew,
        }

    def generators(self, points: np.ndarray) -> np.ndarray:
        """Background components of xi_1 .. xi_2n, shape (N, 4n, 2n)."""
        return self.frame.values(points) @ (sign_matrix(self.n, self.mu) @ xi_components(self.n, self.eps))


@dataclass
class ParacomplexStructure(_Structure):
    def invariants(self, points: np.ndarray) -> Dict[str, float]:
        J = self.matrix(points)
        G = neutral_metric(self.n)
        identity = np.eye(4 * self.n)
        reversing = np.einsum("nji,jk,nkl->nil", J, G, J) + G
        return {
            "square": float(np.max(np.abs(J @ J - identity))),
            "h_reversing": float(np.max(np.abs(reversing))),
        }


def nilpotent_from_frame(frame: FrameField, eps: int, mu: int = 1) -> NilpotentStructure:
    """N with N e I' = e I' Lambda_n (mu = +1) in the admissible frame e."""
    return NilpotentStructure(frame, _check_sign(eps, "eps"), nilpotent_component_matrix(frame.n, eps, mu), mu)


def paracomplex_from_frame(frame: FrameField, eps: int) -> ParacomplexStructure:
    return ParacomplexStructure(frame, _check_sign(eps, "eps"), paracomplex_component_matrix(frame.n, eps))


# --- isotropic bases -------------------------------------------------------


def _pairing_signs(n: int) -> np.ndarray:
    return np.diag(np.concatenate([np.ones(n), -np.ones(n)]))


def complete_isotropic_basis(xi: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Vectors xi' with h(xi_j, xi'_k) = D_jk and h(xi'_j, xi'_k) = 0.

    D = diag(I_n, -I_n). The complement is chosen greedily among the
    standard basis vectors, lowest index first.

    Raises:
        PreconditionError: xi does not span a light-like 2n-plane.
    """
    xi = np.asarray(xi, dtype=float)
    size, k = xi.shape
    if size % 4 or k != size // 2:
        raise InvalidInputError(f"expected 4n x 2n generators, got {xi.shape}")
    n = size // 4
    G = neutral_metric(n)
    isotropy = float(np.max(np.abs(xi.T @ G @ xi)))
    if isotropy > tol:
        raise PreconditionError(f"span is not light-like (max |h(xi_j, xi_k)| = {isotropy:.3e})")
    if np.linalg.matrix_rank(xi, tol=1e-10) < k:
        raise PreconditionError("generators are linearly dependent")

    pairing = xi.T @ G
    chosen: List[int] = []
    for candidate in range(size):
        trial = chosen + [candidate]
        if np.linalg.matrix_rank(pairing[:, trial], tol=1e-10) == len(trial):
            chosen = trial
        if len(chosen) == k:
            break
    Z = np.eye(size)[:, chosen]
    D = _pairing_signs(n)
    Zp = Z @ np.linalg.solve(pairing @ Z, D)
    Q = Zp.T @ G @ Zp
    xi_prime = Zp - 0.5 * xi @ D @ Q
    logger.debug("isotropic completion used basis vectors %s", [c + 1 for c in chosen])
    return xi_prime


def frame_from_isotropic(xi: np.ndarray, xi_prime: np.ndarray, tol: float = 1e-9) -> Tuple[FrameField, int]:
    """Pseudo-orthonormal frame built from a paired light-like basis.

    The returned sign eps is +1 when (e_1 .. e_4n) is positively oriented
    and -1 when column 3n+1 had to be negated; the generators then read as
    xi_(n+1) = e_(n+1) + eps e_(3n+1).
    """
    xi = np.asarray(xi, dtype=float)
    xi_prime = np.asarray(xi_prime, dtype=float)
    n = xi.shape[0] // 4
    G = neutral_metric(n)
    D = _pairing_signs(n)
    residual = max(
        float(np.max(np.abs(xi.T @ G @ xi_prime - D))),
        float(np.max(np.abs(xi_prime.T @ G @ xi_prime))),
        float(np.max(np.abs(xi.T @ G @ xi))),
    )
    if residual > tol:
        raise PreconditionError(f"pairing conditions fail (residual {residual:.3e})")
    a, b = xi_prime[:, :n], xi_prime[:, n:]
    p, q = xi[:, :n], xi[:, n:]
    E = np.hstack([(2 * a + p) / 2, (-2 * b + q) / 2, (2 * a - p) / 2, (2 * b + q) / 2])
    eps = 1
    if np.linalg.det(E) < 0:
        E = E @ i_prime(n, -1)
        eps = -1
        logger.info("frame orientation normalized by negating e_%d (eps = -1)", 3 * n + 1)
    return FrameField.constant(E, 1), eps


# --- bivectors (n = 1) -----------------------------------------------------


def bivector(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.outer(a, b) - np.outer(b, a)


def bivector_components(B: np.ndarray) -> np.ndarray:
    """Components along e_i^e_j, i < j, in the order of BIVECTOR_KEYS."""
    B = np.asarray(B, dtype=float)
    return np.stack([B[..., i - 1, j - 1] for i, j in BIVECTOR_KEYS], axis=-1)


def hat_metric(B: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Induced metric h(a,c)h(b,d) - h(a,d)h(b,c), i.e. -tr(B G C G)/2.

    Broadcasts over leading axes.
    """
    G = neutral_metric(1)
    return -0.5 * np.einsum("...ij,jk,...kl,li->...", B, G, C, G)


def hat_gram() -> np.ndarray:
    """Gram matrix of e_i^e_j (i < j): G_ik G_jl - G_il G_jk."""
    G = neutral_metric(1)
    gram = np.zeros((6, 6))
    for a, (i, j) in enumerate(BIVECTOR_KEYS):
        for b, (k, l) in enumerate(BIVECTOR_KEYS):
            gram[a, b] = G[i - 1, k - 1] * G[j - 1, l - 1] - G[i - 1, l - 1] * G[j - 1, k - 1]
    return gram


def lambda2_basis(E: Optional[np.ndarray] = None) -> Dict[Tuple[int, int], np.ndarray]:
    """Omega_(s,k) for s in {+1, -1}, k in {1, 2, 3} built on the columns of E."""
    E = np.eye(4) if E is None else np.asarray(E, dtype=float)
    if E.shape != (4, 4):
        raise InvalidInputError("the twistor basis needs n = 1")
    e = [E[:, i] for i in range(4)]
    pairs = {1: ((0, 1), (2, 3)), 2: ((0, 2), (3, 1)), 3: ((0, 3), (1, 2))}
    basis = {}
    for s in (1, -1):
        for k, ((a, b), (c, d)) in pairs.items():
            basis[(s, k)] = (bivector(e[a], e[b]) + s * bivector(e[c], e[d])) / SQRT2
    return basis


# Lambda^2_+ is spanned by Omega_(-,1), Omega_(+,2), Omega_(+,3); Lambda^2_- by the others.
SIDE_BASIS = {1: ((-1, 1), (1, 2), (1, 3)), -1: ((1, 1), (-1, 2), (-1, 3))}


def side_components(B: np.ndarray) -> Dict[int, np.ndarray]:
    """Coordinates of B along the pseudo-orthonormal bases of Lambda^2_+ and Lambda^2_-."""
    basis = lambda2_basis()
    out = {}
    for side, keys in SIDE_BASIS.items():
        out[side] = np.array([hat_metric(B, basis[key]) / hat_metric(basis[key], basis[key]) for key in keys])
    return out


def lightlike_section(eps: int, mu: int) -> np.ndarray:
    """Omega_(-eps,1) + mu Omega_(eps,3) in frame components.

    mu is the sign of omega^3_2 + eps omega^4_1 = mu (omega^4_3 + eps omega^2_1), not eps;
    the section of the frame nilpotent structure N_e(eps, mu) is lightlike_section(eps, mu * eps).
    """
    _check_sign(mu, "mu")
    basis = lambda2_basis()
    return basis[(-eps, 1)] + mu * basis[(eps, 3)]


def timelike_section(eps: int) -> np.ndarray:
    return lambda2_basis()[(_check_sign(eps, "eps"), 2)]


def _check_side(Omega: np.ndarray, eps: int, tol: float) -> None:
    other = side_components(Omega)[-eps]
    if float(np.max(np.abs(other))) > tol:
        raise PreconditionError(f"section is not in Lambda^2_{'+' if eps > 0 else '-'}")


def nilpotent_from_section(Omega0: np.ndarray, eps: int, tol: float = 1e-9) -> np.ndarray:
    """N = -sqrt(2) Omega_0 G for a light-like section on side eps.

    Raises:
        PreconditionError: Omega_0 is not light-like, vanishes or lies on the wrong side.
    """
    Omega0 = np.asarray(Omega0, dtype=float)
    norm = float(hat_metric(Omega0, Omega0))
    if abs(norm) > tol:
        raise PreconditionError(f"section is not light-like (h(Omega, Omega) = {norm:.3e})")
    if float(np.max(np.abs(Omega0))) <= tol:
        raise PreconditionError("section vanishes")
    _check_side(Omega0, eps, tol)
    return -SQRT2 * Omega0 @ neutral_metric(1)


def section_from_nilpotent(N: np.ndarray) -> np.ndarray:
    return -np.asarray(N, dtype=float) @ neutral_metric(1) / SQRT2


def paracomplex_from_section(Omega: np.ndarray, eps: int, tol: float = 1e-9) -> np.ndarray:
    """J = -sqrt(2) Omega G for a unit time-like section on side eps."""
    Omega = np.asarray(Omega, dtype=float)
    norm = float(hat_metric(Omega, Omega))
    if abs(norm + 1.0) > tol:
        raise PreconditionError(f"section is not unit time-like (h(Omega, Omega) = {norm:.3e})")
    _check_side(Omega, eps, tol)
    return -SQRT2 * Omega @ neutral_metric(1)


def section_from_paracomplex(J: np.ndarray) -> np.ndarray:
    return -np.asarray(J, dtype=float) @ neutral_metric(1) / SQRT2


def induced_2nvector(N: NilpotentStructure, points: np.ndarray) -> np.ndarray:
    """Components of xi_1 ^ .. ^ xi_2n over sorted 2n-subsets, shape (N, C(4n, 2n))."""
    X = N.generators(points)
    size = 4 * N.n
    subsets = list(itertools.combinations(range(size), 2 * N.n))
    return np.stack([np.linalg.det(X[:, list(rows), :]) for rows in subsets], axis=-1)
