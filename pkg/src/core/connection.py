"""Connection forms and covariant derivatives in a frame.

Everything here is frame based: with nabla e_j = sum_i e_i omega^i_j, an
endomorphism K with constant frame components K_e has nabla K = omega K_e -
K_e omega, and a bivector B has nabla_k B = omega_k B + B omega_k^t.

Coefficient arrays W have shape (N, r, r, m) with W[p, a, b, k] the dx_k
coefficient of omega^(a+1)_(b+1) at point p.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.core.expr import Expr, ExprLike, as_expr, cosh, evaluate_many, power, sinh
from src.core.exterior import (
    DifferentialForm,
    MatrixForm,
    coefficient_tensor,
    ext_d,
    matrix_ext_d,
    mwedge,
)
from src.core.neutral import neutral_metric
from src.core.structures import (
    FrameField,
    NilpotentStructure,
    ParacomplexStructure,
    bivector_components,
    hat_metric,
    i_prime,
    lightlike_section,
    nilpotent_component_matrix,
    paracomplex_component_matrix,
    sign_matrix,
    timelike_section,
    xi_components,
)
from src.domain.errors import InvalidInputError, PreconditionError

logger = logging.getLogger(__name__)


@dataclass
class ConnectionForm:
    """Matrix 1-form omega, symbolic or sampled on a fixed grid."""

    symbolic: Optional[MatrixForm] = None
    samples: Optional[np.ndarray] = None
    points: Optional[np.ndarray] = None
    frame: Optional[FrameField] = None

    def __post_init__(self) -> None:
        if (self.symbolic is None) == (self.samples is None):
            raise InvalidInputError("a connection form is either symbolic or sampled")
        if self.symbolic is not None:
            if self.symbolic.degree != 1 or self.symbolic.rows != self.symbolic.cols:
                raise InvalidInputError("a connection form is a square matrix of 1-forms")
        else:
            self.samples = np.asarray(self.samples, dtype=float)
            if self.points is None or self.samples.ndim != 4 or self.samples.shape[1] != self.samples.shape[2]:
                raise InvalidInputError("sampled connection values need shape (N, r, r, m) and their points")

    @property
    def size(self) -> int:
        return self.symbolic.rows if self.symbolic is not None else self.samples.shape[1]

    @property
    def m(self) -> int:
        return self.symbolic.m if self.symbolic is not None else self.samples.shape[3]

    @property
    def n(self) -> int:
        if self.size % 4:
            raise InvalidInputError(f"rank {self.size} is not a multiple of 4")
        return self.size // 4

    def coefficients(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.symbolic is not None:
            return coefficient_tensor(self.symbolic, points)
        if self.points.shape != points.shape or not np.allclose(self.points, points):
            raise InvalidInputError("sampled connection evaluated off its grid")
        return self.samples

    def require_symbolic(self, what: str) -> MatrixForm:
        if self.symbolic is None:
            raise InvalidInputError(f"{what} needs a symbolic connection form")
        return self.symbolic


def _w(W: np.ndarray, i: int, j: int) -> np.ndarray:
    """omega^i_j coefficients (1-based), shape (N, m)."""
    return W[:, i - 1, j - 1, :]


def compatible_completion(omega: MatrixForm) -> MatrixForm:
    """Fill omega^j_i = -eps_i eps_j omega^i_j wherever only one of the pair is given."""
    size = omega.rows
    n = size // 4
    signs = np.diag(neutral_metric(n))
    grid = [list(row) for row in omega.entries]
    for i in range(size):
        for j in range(size):
            if i == j:
                continue
            if not grid[i][j].is_zero() and grid[j][i].is_zero():
                grid[j][i] = grid[i][j].scale(-signs[i] * signs[j])
    return MatrixForm(tuple(tuple(row) for row in grid))


def compatibility_tensor(omega: ConnectionForm, points: np.ndarray) -> np.ndarray:
    """omega^t G + G omega per direction; the derivative of h(e_i, e_j) for an orthonormal frame."""
    W = omega.coefficients(points)
    G = neutral_metric(omega.n)
    GW = np.einsum("ab,pbck->pack", G, W)
    return GW + np.swapaxes(GW, 1, 2)


def compatibility_residual(omega: ConnectionForm, points: np.ndarray) -> float:
    return float(np.max(np.abs(compatibility_tensor(omega, points))))


def _as_constant(K: Any, size: int) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.shape != (size, size):
        raise InvalidInputError(f"endomorphism shape {K.shape} does not match rank {size}")
    return K


def endo_cov_deriv(omega: ConnectionForm, K: Any) -> MatrixForm:
    """dK + omega K - K omega as a matrix of 1-forms.

    K is a degree-0 MatrixForm or a constant matrix of frame components.
    """
    w = omega.require_symbolic("endo_cov_deriv")
    if not isinstance(K, MatrixForm):
        K = MatrixForm.constant(_as_constant(K, w.rows), w.m)
    if K.shape != w.shape or K.degree != 0:
        raise InvalidInputError(f"endomorphism shape {K.shape} does not match {w.shape}")
    return matrix_ext_d(K) + mwedge(w, K) - mwedge(K, w)


def cov_deriv_values(omega: ConnectionForm, K: np.ndarray, points: np.ndarray) -> np.ndarray:
    """omega_k K - K omega_k for constant frame components K, shape (N, r, r, m)."""
    W = omega.coefficients(points)
    K = _as_constant(K, omega.size)
    return np.einsum("pabk,bc->pack", W, K) - np.einsum("ab,pbck->pack", K, W)


# --- factorization of nabla J ------------------------------------------------


def omega_condition_residual(
    omega: ConnectionForm,
    eps: int,
    mu: int,
    points: np.ndarray,
) -> Tuple[float, np.ndarray]:
    """Residual of the line groups characterizing nabla J = alpha (x) N.

    mu is the sign relating N to J (N_e = M_mu I' Lambda_n I' M_mu). Returns
    the max residual and alpha read off the first equation, shape (N, m).
    """
    W = omega.coefficients(points)
    n = omega.n
    s = [eps if i == 1 else 1 for i in range(1, n + 1)]
    alpha = mu * (_w(W, n + 1, 1) + s[0] * _w(W, 3 * n + 1, 2 * n + 1))
    worst = 0.0
    for i in range(1, n + 1):
        si = s[i - 1]
        for j in range(1, n + 1):
            sj = s[j - 1]
            delta = alpha if i == j else 0.0
            lines = (
                mu * (_w(W, n + i, j) + si * _w(W, 3 * n + i, 2 * n + j)) - delta,
                _w(W, n + i, 2 * n + j) + si * _w(W, 3 * n + i, j) - delta,
                _w(W, i, j) - _w(W, 2 * n + i, 2 * n + j),
                _w(W, i, 2 * n + j) - _w(W, 2 * n + i, j),
                _w(W, n + i, n + j) - si * sj * _w(W, 3 * n + i, 3 * n + j),
                _w(W, n + i, 3 * n + j) - si * sj * _w(W, 3 * n + i, n + j),
            )
            worst = max(worst, max(float(np.max(np.abs(line))) for line in lines))
    return worst, alpha


def pair_equation_residual(omega: ConnectionForm, eps: int, mu: int, points: np.ndarray) -> float:
    """n = 1: |omega^3_2 + eps omega^4_1 - mu (omega^4_3 + eps omega^2_1)|."""
    W = omega.coefficients(points)
    left = _w(W, 3, 2) + eps * _w(W, 4, 1)
    right = _w(W, 4, 3) + eps * _w(W, 2, 1)
    return float(np.max(np.abs(left - mu * right)))


@dataclass
class FactorizationReport:
    holds: bool
    mu: int
    eps: int
    alpha: np.ndarray = field(repr=False)
    N: NilpotentStructure = field(repr=False)
    residual: float
    condition_residual: float
    compatibility_residual: float
    pair_residual: Optional[float] = None

    @property
    def pair_mu(self) -> int:
        """The sign of omega^3_2 + eps omega^4_1 = mu (omega^4_3 + eps omega^2_1)."""
        return self.eps * self.mu

    def to_dict(self) -> Dict[str, Any]:
        return {
            "holds": self.holds,
            "mu": self.mu,
            "pair_mu": self.pair_mu,
            "eps": self.eps,
            "residual": self.residual,
            "condition_residual": self.condition_residual,
            "compatibility_residual": self.compatibility_residual,
            "pair_residual": self.pair_residual,
            "alpha_min_norm": float(np.min(np.linalg.norm(self.alpha, axis=-1))) if self.alpha.size else 0.0,
        }


def _factorize_with(
    omega: ConnectionForm,
    J: ParacomplexStructure,
    mu: int,
    points: np.ndarray,
    compat: float,
) -> FactorizationReport:
    N_e = nilpotent_component_matrix(J.n, J.eps, mu)
    C = cov_deriv_values(omega, J.component, points)
    # alpha_k = <C_k, N> / <N, N>, the best scalar multiple
    alpha_fit = np.einsum("pabk,ab->pk", C, N_e) / float(np.sum(N_e * N_e))
    residual = float(np.max(np.abs(C - np.einsum("pk,ab->pabk", alpha_fit, N_e)))) if C.size else 0.0
    condition, alpha = omega_condition_residual(omega, J.eps, mu, points)
    pair = pair_equation_residual(omega, J.eps, J.eps * mu, points) if J.n == 1 else None
    N = NilpotentStructure(J.frame, J.eps, N_e, mu)
    return FactorizationReport(False, mu, J.eps, alpha, N, residual, condition, compat, pair)


def factorization_check(
    omega: ConnectionForm,
    J: ParacomplexStructure,
    points: np.ndarray,
    mu: Optional[int] = None,
    tol: float = 1e-9,
) -> FactorizationReport:
    """Whether nabla J = alpha (x) N with N related to J by (e, mu).

    With mu=None both signs are tried and the better fit is reported.

    Raises:
        PreconditionError: omega is not metric compatible.
    """
    if omega.size != 4 * J.n:
        raise InvalidInputError(f"connection rank {omega.size} does not match J (n={J.n})")
    compat = compatibility_residual(omega, points)
    if compat > tol:
        raise PreconditionError(f"connection form is not metric compatible (residual {compat:.3e})")
    candidates = (1, -1) if mu is None else (mu,)
    reports = [_factorize_with(omega, J, sign, points, compat) for sign in candidates]
    best = min(reports, key=lambda r: max(r.residual, r.condition_residual))
    best.holds = best.residual <= tol and best.condition_residual <= tol
    if best.pair_residual is not None and best.holds != (best.pair_residual <= tol):
        logger.warning(
            "pair equation residual %.3e disagrees with the factorization (residual %.3e)",
            best.pair_residual,
            best.residual,
        )
    logger.info(
        "factorization mu=%+d: residual=%.3e condition=%.3e holds=%s",
        best.mu,
        best.residual,
        best.condition_residual,
        best.holds,
    )
    return best


# --- bivector sections (n = 1) ---------------------------------------------


def bivector_cov_deriv(omega: ConnectionForm, Omega: np.ndarray, points: np.ndarray) -> np.ndarray:
    """omega_k B + B omega_k^t for constant frame components B, shape (N, m, 4, 4)."""
    if omega.size != 4:
        raise InvalidInputError("bivector derivatives need n = 1")
    W = omega.coefficients(points)
    B = np.asarray(Omega, dtype=float)
    WB = np.einsum("pabk,bc->pkac", W, B)
    return WB - np.swapaxes(WB, 2, 3)


@dataclass
class LightlikeReport:
    holds: bool
    eps: int
    mu: Optional[int]
    alpha: Optional[np.ndarray] = field(repr=False)
    Omega0: Optional[np.ndarray] = field(repr=False)
    null_residual: float = 0.0
    min_derivative_norm: float = 0.0
    section_residual: Optional[float] = None
    reason: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "holds": self.holds,
            "eps": self.eps,
            "mu": self.mu,
            "null_residual": self.null_residual,
            "min_derivative_norm": self.min_derivative_norm,
            "section_residual": self.section_residual,
            "Omega0": None if self.Omega0 is None else bivector_components(self.Omega0).tolist(),
            "reason": self.reason,
            "certified_on": "sample set",
        }


def admissible_mu(left: np.ndarray, right: np.ndarray, tol: float) -> set:
    """Signs mu with left = mu right at every decisive direction (either side > 10 tol)."""
    allowed = {1, -1}
    decisive = np.maximum(np.abs(left), np.abs(right)) > 10 * tol
    if not np.any(decisive):
        return allowed
    l, r = left[decisive], right[decisive]
    scale = np.maximum(1.0, np.maximum(np.abs(l), np.abs(r)))
    if np.any(np.abs(l - r) > tol * scale):
        allowed.discard(1)
    if np.any(np.abs(l + r) > tol * scale):
        allowed.discard(-1)
    return allowed


def fully_lightlike_check(
    omega: ConnectionForm,
    eps: int,
    points: np.ndarray,
    tol: float = 1e-9,
) -> LightlikeReport:
    """Whether the derivative of Omega_(eps,2) is light-like and nowhere zero.

    On success Omega0 = Omega_(-eps,1) + mu Omega_(eps,3) and
    nabla Omega = alpha (x) Omega0 with alpha = omega^3_2 + eps omega^4_1.
    Nowhere-vanishing is certified on the sample set only.
    """
    D = bivector_cov_deriv(omega, timelike_section(eps), points)
    gram = hat_metric(D[:, :, None], D[:, None, :])
    null = float(np.max(np.abs(gram))) if gram.size else 0.0
    norms = np.max(np.abs(D), axis=(1, 2, 3))
    min_norm = float(np.min(norms)) if norms.size else 0.0
    report = LightlikeReport(False, eps, None, None, None, null, min_norm)
    if null > tol:
        report.reason = "derivative is not light-like"
        return report
    if min_norm <= tol:
        report.reason = "derivative vanishes at a sample point"
        return report

    W = omega.coefficients(points)
    left = _w(W, 3, 2) + eps * _w(W, 4, 1)
    right = _w(W, 4, 3) + eps * _w(W, 2, 1)
    allowed = admissible_mu(left, right, tol)
    if not allowed:
        report.reason = "mixed mu"
        logger.warning("no constant mu realizes the light-like derivative on the sample set")
        return report
    mu = 1 if 1 in allowed else -1
    Omega0 = lightlike_section(eps, mu)
    alpha = left
    section = float(np.max(np.abs(D - np.einsum("pk,ab->pkab", alpha, Omega0))))
    report.mu, report.alpha, report.Omega0, report.section_residual = mu, alpha, Omega0, section
    report.holds = section <= tol * max(1.0, float(np.max(np.abs(alpha))))
    if not report.holds:
        report.reason = "derivative is not a multiple of the light-like section"
    return report


# --- horizontality and gauges ----------------------------------------------


def _horizontal_form(omega: ConnectionForm, eps: int) -> DifferentialForm:
    w = omega.require_symbolic("horizontality")
    if w.rows != 4:
        raise InvalidInputError("horizontality needs n = 1")
    return w.form(4, 2) - w.form(3, 1).scale(float(eps))


def horizontality_residual(omega: ConnectionForm, eps: int, points: np.ndarray) -> float:
    """max |d(omega^4_2 - eps omega^3_1)| over the sample set."""
    form = _horizontal_form(omega, eps)
    if omega.m < 2:
        return 0.0
    return float(np.max(np.abs(ext_d(form).evaluate(points))))


def horizontality_check(omega: ConnectionForm, eps: int, points: np.ndarray, tol: float = 1e-9) -> bool:
    return horizontality_residual(omega, eps, points) <= tol


def boost_matrix(f: ExprLike, m: int) -> MatrixForm:
    """Rotation of the (e_2, e_4) plane: e'_2 = cosh f e_2 + sinh f e_4, e'_4 = sinh f e_2 + cosh f e_4."""
    f = as_expr(f)
    ch, sh = cosh(f), sinh(f)
    return MatrixForm.from_scalars(
        [[1.0, 0.0, 0.0, 0.0], [0.0, ch, 0.0, sh], [0.0, 0.0, 1.0, 0.0], [0.0, sh, 0.0, ch]],
        m,
    )


def _pseudo_inverse(P: MatrixForm) -> MatrixForm:
    G = MatrixForm.constant(neutral_metric(P.rows // 4), P.m)
    return mwedge(mwedge(G, P.transpose()), G)


def gauge_transform(omega: ConnectionForm, P: MatrixForm, points: Optional[np.ndarray] = None) -> ConnectionForm:
    """Connection form of the frame e P: P^-1 omega P + P^-1 dP (P pseudo-orthonormal)."""
    P_inv = _pseudo_inverse(P)
    frame = None
    if omega.frame is not None and omega.frame.symbolic is not None:
        frame = FrameField(omega.frame.n, omega.frame.m, symbolic=mwedge(omega.frame.symbolic, P))
    if omega.symbolic is not None:
        w = mwedge(mwedge(P_inv, omega.symbolic), P) + mwedge(P_inv, matrix_ext_d(P))
        return ConnectionForm(symbolic=w, frame=frame)
    grid = omega.points if points is None else points
    W = omega.coefficients(grid)
    Pv, Pinv_v = P.values(grid), P_inv.values(grid)
    dP = coefficient_tensor(matrix_ext_d(P), grid)
    W_new = np.einsum("pab,pbck,pcd->padk", Pinv_v, W, Pv) + np.einsum("pab,pbck->pack", Pinv_v, dP)
    return ConnectionForm(samples=W_new, points=grid)


def gauge_horizontal(
    frame: FrameField,
    omega: ConnectionForm,
    f: ExprLike,
    eps: int,
    points: np.ndarray,
    tol: float = 1e-9,
) -> Tuple[FrameField, ConnectionForm]:
    """Boost e_2, e_4 by f so that omega'^4_2 - eps omega'^3_1 = 0.

    Raises:
        PreconditionError: omega^4_2 - eps omega^3_1 differs from -df.
    """
    f = as_expr(f)
    form = _horizontal_form(omega, eps)
    target = DifferentialForm.differential(f, omega.m)
    mismatch = float(np.max(np.abs((form + target).evaluate(points))))
    if mismatch > tol:
        raise PreconditionError(f"omega^4_2 - eps omega^3_1 is not -df (residual {mismatch:.3e})")
    R = boost_matrix(f, omega.m)
    if frame.symbolic is None:
        raise InvalidInputError("gauge_horizontal needs a symbolic frame")
    boosted = FrameField(frame.n, frame.m, symbolic=mwedge(frame.symbolic, R))
    gauged = gauge_transform(ConnectionForm(symbolic=omega.symbolic), R)
    gauged.frame = boosted
    logger.debug("gauge residual before boost %.3e", mismatch)
    return boosted, gauged


# --- Walker distributions --------------------------------------------------


def walker_distribution(n: int, eps: int, mu: int = 1) -> np.ndarray:
    """Frame components of the generators of D_J: e_i - mu e_(2n+i), e_(n+i) + s_i mu e_(3n+i)."""
    return sign_matrix(n, mu) @ xi_components(n, eps)


def walker_matrix(omega: ConnectionForm, D: np.ndarray, points: np.ndarray) -> np.ndarray:
    """h(nabla_k xi_a, xi_b) for constant generators, shape (N, m, 2n, 2n)."""
    W = omega.coefficients(points)
    D = np.asarray(D, dtype=float)
    G = neutral_metric(omega.n)
    moved = np.einsum("pabk,bi->pkai", W, D)
    return np.einsum("pkai,ab,bj->pkij", moved, G, D)


def walker_closed_forms(omega: ConnectionForm, eps: int, mu: int, points: np.ndarray) -> np.ndarray:
    """The same matrix from the index formulas in terms of omega^i_j."""
    W = omega.coefficients(points)
    n = omega.n
    out = np.zeros((W.shape[0], W.shape[3], 2 * n, 2 * n))
    s = [eps if i == 1 else 1 for i in range(1, n + 1)]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            si, sj = s[i - 1], s[j - 1]
            out[:, :, i - 1, j - 1] = (
                _w(W, j, i) - mu * _w(W, j, 2 * n + i) + mu * _w(W, 2 * n + j, i) - _w(W, 2 * n + j, 2 * n + i)
            )
            mixed = (
                _w(W, n + j, i)
                - mu * _w(W, n + j, 2 * n + i)
                - mu * sj * _w(W, 3 * n + j, i)
                + sj * _w(W, 3 * n + j, 2 * n + i)
            )
            out[:, :, i - 1, n + j - 1] = mixed
            out[:, :, n + j - 1, i - 1] = -mixed
            out[:, :, n + i - 1, n + j - 1] = (
                _w(W, n + j, n + i)
                + mu * si * _w(W, n + j, 3 * n + i)
                - mu * sj * _w(W, 3 * n + j, n + i)
                - si * sj * _w(W, 3 * n + j, 3 * n + i)
            )
    return out


def walker_residual(omega: ConnectionForm, D: np.ndarray, points: np.ndarray) -> float:
    M = walker_matrix(omega, D, points)
    return float(np.max(np.abs(M))) if M.size else 0.0


def walker_check(omega: ConnectionForm, D: np.ndarray, points: np.ndarray, tol: float = 1e-9) -> bool:
    """Whether nabla_X xi_i stays in the distribution for every coordinate direction X."""
    G = neutral_metric(omega.n)
    isotropy = float(np.max(np.abs(np.asarray(D).T @ G @ np.asarray(D))))
    if isotropy > tol:
        raise PreconditionError(f"distribution generators are not light-like ({isotropy:.3e})")
    residual = walker_residual(omega, D, points)
    logger.debug("walker residual %.3e", residual)
    return residual <= tol


def walker_modification(h: ExprLike, eps: int, m: int) -> MatrixForm:
    """I' T(h) I' with T(h) the frame change keeping xi_1, xi_2 in the distribution."""
    h = as_expr(h)
    h2 = power(h, 2)
    T = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, (h2 + 2.0) / 2.0, h, -h2 / 2.0],
        [0.0, h, 1.0, -h],
        [0.0, h2 / 2.0, h, -(h2 - 2.0) / 2.0],
    ]
    Ip = MatrixForm.constant(i_prime(1, eps), m)
    return mwedge(mwedge(Ip, MatrixForm.from_scalars(T, m)), Ip)


@dataclass
class WalkerParacomplexResult:
    J: ParacomplexStructure
    omega: ConnectionForm = field(repr=False)
    factorization: FactorizationReport
    clause_min_norm: float
    distribution_residual: float
    related_residual: float
    frame_residual: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "factorization": self.factorization.to_dict(),
            "clause_min_norm": self.clause_min_norm,
            "distribution_residual": self.distribution_residual,
            "related_residual": self.related_residual,
            "frame_residual": self.frame_residual,
        }


def walker_to_paracomplex(
    frame: FrameField,
    omega: ConnectionForm,
    eps: int,
    hfn: Expr,
    points: np.ndarray,
    tol: float = 1e-9,
) -> WalkerParacomplexResult:
    """J with nabla J = alpha (x) N and D_J = D for a Walker distribution D = pi_N.

    frame is an admissible frame of the eps-nilpotent structure N and omega
    its connection form. The frame is modified by I' T(hfn) I'; hfn must
    make the resulting alpha nowhere zero on the sample set.

    Raises:
        PreconditionError: the Walker condition fails or alpha vanishes at a sample point.
    """
    if omega.size != 4:
        raise InvalidInputError("walker_to_paracomplex needs n = 1")
    W = omega.coefficients(points)
    Ip = i_prime(1, eps)
    Wf = np.einsum("ab,pbck,cd->padk", Ip, W, Ip)
    left = _w(Wf, 3, 2) + _w(Wf, 4, 1)
    right = _w(Wf, 4, 3) + _w(Wf, 2, 1)
    walker = float(np.max(np.abs(left - right)))
    if walker > tol:
        raise PreconditionError(f"distribution is not Walker (residual {walker:.3e})")

    h_values = evaluate_many(hfn, points)[:, None]
    dh = DifferentialForm.differential(hfn, omega.m).evaluate(points)
    clause = dh - (h_values**2 - 2.0) / 2.0 * left + h_values**2 / 2.0 * right + h_values * (
        _w(Wf, 4, 2) - _w(Wf, 3, 1)
    )
    clause_norm = float(np.min(np.linalg.norm(clause, axis=-1)))
    if clause_norm <= tol:
        raise PreconditionError(
            f"modified alpha vanishes on the sample set (min norm {clause_norm:.3e}); choose another h"
        )

    P = walker_modification(hfn, eps, omega.m)
    if frame.symbolic is None:
        raise InvalidInputError("walker_to_paracomplex needs a symbolic frame")
    modified = FrameField(frame.n, frame.m, symbolic=mwedge(frame.symbolic, P))
    omega_tilde = gauge_transform(omega, P, points)
    omega_tilde.frame = modified
    J = ParacomplexStructure(modified, eps, paracomplex_component_matrix(1, eps))
    report = factorization_check(omega_tilde, J, points, mu=1, tol=tol)

    original = NilpotentStructure(frame, eps, nilpotent_component_matrix(1, eps, 1), 1)
    related = float(np.max(np.abs(report.N.matrix(points) - original.matrix(points))))
    spans = np.concatenate([original.generators(points), report.N.generators(points)], axis=2)
    ranks = np.linalg.matrix_rank(spans, tol=1e-8)
    distribution = float(np.max(np.abs(ranks - 2)))
    frame_res = modified.residuals(points)
    frame_residual = frame_res["pseudo_orthonormal"] if frame_res["min_det"] > 0 else float("inf")
    return WalkerParacomplexResult(J, omega_tilde, report, clause_norm, distribution, related, frame_residual)


# --- square norm ------------------------------------------------------------


def _base_inverse(m: int, size: int, base_metric: Optional[np.ndarray]) -> np.ndarray:
    if base_metric is None:
        base_metric = neutral_metric(size // 4) if m == size else np.eye(m)
    base_metric = np.asarray(base_metric, dtype=float)
    if base_metric.shape != (m, m):
        raise InvalidInputError(f"base metric must be {m}x{m}")
    return np.linalg.inv(base_metric)


def square_norm_values(
    omega: ConnectionForm,
    J: ParacomplexStructure,
    points: np.ndarray,
    base_metric: Optional[np.ndarray] = None,
) -> np.ndarray:
    """sum g^kl sum_j eps_j h((nabla_k J) e_j, (nabla_l J) e_j) per point."""
    C = cov_deriv_values(omega, J.component, points)
    G = neutral_metric(omega.n)
    g_inv = _base_inverse(omega.m, omega.size, base_metric)
    # tr(G C_k^t G C_l)
    pairing = np.einsum("ab,pcak,cd,pdbl->pkl", G, C, G, C)
    return np.einsum("kl,pkl->p", g_inv, pairing)


def omega_star(J: ParacomplexStructure) -> np.ndarray:
    """Frame components Omega*_jk = h(e_j, J e_k)."""
    return neutral_metric(J.n) @ J.component


def omega_star_norm_values(
    omega: ConnectionForm,
    J: ParacomplexStructure,
    points: np.ndarray,
    base_metric: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Triple sum of eps_j eps_q ((nabla_k Omega*)(e_j, e_q))^2 with nabla Omega* = -omega^t Omega* - Omega* omega."""
    W = omega.coefficients(points)
    S = omega_star(J)
    nabla = -np.einsum("pajk,aq->pkjq", W, S) - np.einsum("ja,paqk->pkjq", S, W)
    signs = np.diag(neutral_metric(omega.n))
    g_inv = _base_inverse(omega.m, omega.size, base_metric)
    return np.einsum("kl,pkjq,pljq,j,q->p", g_inv, nabla, nabla, signs, signs)


def square_norm(
    omega: ConnectionForm,
    J: ParacomplexStructure,
    points: np.ndarray,
    base_metric: Optional[np.ndarray] = None,
) -> float:
    """Signed value of largest magnitude of the square norm of nabla J over the samples."""
    values = square_norm_values(omega, J, points, base_metric)
    oracle = omega_star_norm_values(omega, J, points, base_metric)
    gap = float(np.max(np.abs(values - oracle))) if values.size else 0.0
    if gap > 1e-9 * max(1.0, float(np.max(np.abs(values)))):
        logger.warning("square norm and Omega* triple sum differ by %.3e", gap)
    if not values.size:
        return 0.0
    return float(values[int(np.argmax(np.abs(values)))])


def isotropic_parakahler(
    omega: ConnectionForm,
    J: ParacomplexStructure,
    points: np.ndarray,
    tol: float = 1e-9,
    base_metric: Optional[np.ndarray] = None,
) -> bool:
    """Square norm zero while nabla J does not vanish identically on the samples."""
    norm = square_norm(omega, J, points, base_metric)
    C = cov_deriv_values(omega, J.component, points)
    return abs(norm) <= tol and float(np.max(np.abs(C))) > tol
