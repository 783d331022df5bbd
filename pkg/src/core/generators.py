"""Explicit flat connections and the twistor-section solutions built from them.

The flat families assemble omega from n x n blocks D11 (skew) and D31
(symmetric) around the half-differential blocks 1/2 df I. Every family is
exact, omega = dx, and `family_potential` returns x. Pair solutions give a
4 x 4 connection form whose time-like sections Omega_(+,2) and Omega_(-,2)
both have light-like covariant derivative.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from src.core.connection import ConnectionForm, compatible_completion
from src.core.expr import ZERO, Expr, exp, neg, parse
from src.core.exterior import (
    DifferentialForm,
    MatrixForm,
    coefficient_tensor,
    ext_d,
    flatness_residual,
    matrix_ext_d,
    mwedge,
    potential_commutes,
    wedge,
)
from src.core.neutral import neutral_metric
from src.core.structures import FrameField, i_prime, sign_matrix
from src.domain.errors import ExprDomainError, InvalidInputError, PreconditionError
from src.domain.models import FlatFamilySpec, PairSpec

logger = logging.getLogger(__name__)

BRANCH_LABELS = ("A", "B", "both", "neither")


def _max_abs(values: np.ndarray) -> float:
    return float(np.max(np.abs(values))) if values.size else 0.0


def _form_residual(form: MatrixForm, points: np.ndarray) -> float:
    return _max_abs(form.evaluate(points))


# --- flat families -------------------------------------------------------------


def _diagonal(entry: DifferentialForm, n: int) -> MatrixForm:
    return MatrixForm.from_entries(n, n, entry.degree, entry.m, {(i, i): entry for i in range(1, n + 1)})


def _assemble(X11: MatrixForm, X31: MatrixForm, H: MatrixForm) -> MatrixForm:
    return MatrixForm.from_blocks(
        [
            [X11, -H, X31, H],
            [H, X11, H, X31],
            [X31, H, X11, -H],
            [H, X31, H, X11],
        ]
    )


def symmetry_residuals(D11: MatrixForm, D31: MatrixForm, points: np.ndarray) -> Dict[str, float]:
    return {
        "D11_skew": _form_residual(D11 + D11.transpose(), points),
        "D31_symmetric": _form_residual(D31 - D31.transpose(), points),
    }


def structure_residuals(D11: MatrixForm, D31: MatrixForm, points: np.ndarray) -> Dict[str, float]:
    """Residuals of the block structure equations under d omega + omega ^ omega = 0.

    dD11 + D11 ^ D11 + D31 ^ D31 = 0 and dD31 + D31 ^ D11 + D11 ^ D31 = 0.
    """
    first = matrix_ext_d(D11) + mwedge(D11, D11) + mwedge(D31, D31)
    second = matrix_ext_d(D31) + mwedge(D31, D11) + mwedge(D11, D31)
    return {"dD11": _form_residual(first, points), "dD31": _form_residual(second, points)}


def build_flat_omega(
    D11: MatrixForm,
    D31: MatrixForm,
    f: Expr,
    points: np.ndarray,
    tol: float = 1e-9,
) -> ConnectionForm:
    """Assemble the 4n x 4n connection form from D11, D31 and df.

    Raises:
        PreconditionError: D11 is not skew, D31 not symmetric, or the
            structure equations fail on the sample set.
    """
    if D11.shape != D31.shape or D11.rows != D11.cols:
        raise InvalidInputError(f"D11 {D11.shape} and D31 {D31.shape} must be square of one size")
    if D11.degree != 1 or D31.degree != 1 or D11.m != D31.m:
        raise InvalidInputError("D11 and D31 must be matrices of 1-forms on one R^m")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    for name, residual in symmetry_residuals(D11, D31, points).items():
        if residual > tol:
            raise PreconditionError(f"{name} violated (residual {residual:.3e})")
    for name, residual in structure_residuals(D11, D31, points).items():
        if residual > tol:
            raise PreconditionError(f"structure equation {name} fails (residual {residual:.3e})")
    half = DifferentialForm.differential(f, D11.m).scale(0.5)
    omega = _assemble(D11, D31, _diagonal(half, D11.rows))
    logger.debug("assembled flat omega of rank %d on R^%d", omega.rows, omega.m)
    return ConnectionForm(symbolic=omega)


def _zero_block(n: int, m: int) -> MatrixForm:
    return MatrixForm.zeros(n, n, 0, m)


def _quaternion_block(a: Expr, b: Expr) -> List[List[Expr]]:
    return [
        [ZERO, neg(a), ZERO, neg(b)],
        [a, ZERO, b, ZERO],
        [ZERO, neg(b), ZERO, neg(a)],
        [b, ZERO, a, ZERO],
    ]


def _block_tridiagonal(diagonal: List[List[Expr]], off: List[List[Expr]], blocks: int) -> List[List[Expr]]:
    size = len(diagonal)
    rows = [[ZERO] * (size * blocks) for _ in range(size * blocks)]
    for b in range(blocks):
        for other, source in ((b, diagonal), (b - 1, off), (b + 1, off)):
            if not 0 <= other < blocks:
                continue
            for r in range(size):
                for c in range(size):
                    rows[b * size + r][other * size + c] = source[r][c]
    return rows


def family_blocks(spec: FlatFamilySpec) -> Tuple[MatrixForm, MatrixForm]:
    """Degree-0 potentials (X11, X31) with D11 = dX11 and D31 = dX31."""
    n, m, fns = spec.n, spec.m, spec.functions
    if spec.variant == "symmetric-potential":
        return _zero_block(n, m), MatrixForm.from_scalars([[fns["phi"] * float(c) for c in row] for row in spec.C0], m)
    if spec.variant == "skew-potential":
        return MatrixForm.from_scalars([[fns["psi"] * float(c) for c in row] for row in spec.C0], m), _zero_block(n, m)
    if spec.variant == "tridiagonal":
        rows = _block_tridiagonal([[fns["f1"]]], [[fns["f2"]]], n)
        return _zero_block(n, m), MatrixForm.from_scalars(rows, m)
    rows = _block_tridiagonal(
        _quaternion_block(fns["a1"], fns["b1"]),
        _quaternion_block(fns["a2"], fns["b2"]),
        spec.p,
    )
    return MatrixForm.from_scalars(rows, m), _zero_block(n, m)


def family_identities(spec: FlatFamilySpec, points: np.ndarray) -> Dict[str, float]:
    """The wedge identities that make a family satisfy the structure equations."""
    X11, X31 = family_blocks(spec)
    D11, D31 = matrix_ext_d(X11), matrix_ext_d(X31)
    if spec.variant == "tridiagonal":
        return {"D31^D31": _form_residual(mwedge(D31, D31), points)}
    if spec.variant == "quaternion-blocks":
        fns = spec.functions
        C1 = matrix_ext_d(MatrixForm.from_scalars(_quaternion_block(fns["a1"], fns["b1"]), spec.m))
        C2 = matrix_ext_d(MatrixForm.from_scalars(_quaternion_block(fns["a2"], fns["b2"]), spec.m))
        return {
            "C1^C1": _form_residual(mwedge(C1, C1), points),
            "C2^C2": _form_residual(mwedge(C2, C2), points),
            "C1^C2+C2^C1": _form_residual(mwedge(C1, C2) + mwedge(C2, C1), points),
            "D11^D11": _form_residual(mwedge(D11, D11), points),
        }
    return {}


def sign_conjugator(n: int, eps: int, mu: int) -> np.ndarray:
    """Q = M_mu I'_eps; diagonal with entries +-1, so Q^-1 = Q."""
    return sign_matrix(n, mu) @ i_prime(n, eps)


def conjugate_signs(omega: ConnectionForm, eps: int, mu: int) -> ConnectionForm:
    """The (eps, mu) variant Q omega Q of a family built for eps = mu = +."""
    Q = sign_conjugator(omega.n, eps, mu)
    if omega.symbolic is not None:
        Qm = MatrixForm.constant(Q, omega.m)
        return ConnectionForm(symbolic=mwedge(mwedge(Qm, omega.symbolic), Qm))
    samples = np.einsum("ab,pbck,cd->padk", Q, omega.samples, Q)
    return ConnectionForm(samples=samples, points=omega.points)


def family_potential(spec: FlatFamilySpec) -> MatrixForm:
    """x with omega = dx, in the same sign variant as family_omega(spec)."""
    X11, X31 = family_blocks(spec)
    half = DifferentialForm.scalar(spec.f * 0.5, spec.m)
    x = _assemble(X11, X31, _diagonal(half, spec.n))
    if (spec.eps, spec.mu) != (1, 1):
        Q = MatrixForm.constant(sign_conjugator(spec.n, spec.eps, spec.mu), spec.m)
        x = mwedge(mwedge(Q, x), Q)
    return x


def family_omega(spec: FlatFamilySpec, points: np.ndarray, tol: float = 1e-9) -> ConnectionForm:
    """Connection form of a flat family; alpha = mu df for the (eps, mu) variant.

    Raises:
        PreconditionError: a family identity or structure equation fails.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    for name, residual in family_identities(spec, points).items():
        if residual > tol:
            raise PreconditionError(f"family identity {name} fails (residual {residual:.3e})")
    X11, X31 = family_blocks(spec)
    omega = build_flat_omega(matrix_ext_d(X11), matrix_ext_d(X31), spec.f, points, tol)
    if (spec.eps, spec.mu) != (1, 1):
        omega = conjugate_signs(omega, spec.eps, spec.mu)
    logger.info("family %s n=%d m=%d eps=%+d mu=%+d", spec.variant, spec.n, spec.m, spec.eps, spec.mu)
    return omega


def family_alpha(spec: FlatFamilySpec) -> DifferentialForm:
    return DifferentialForm.differential(spec.f, spec.m).scale(float(spec.mu))


# --- frame integration ------------------------------------------------------


@dataclass
class FrameIntegration:
    frame: FrameField
    method: str
    metric_residual: float
    closure_residual: float
    loops: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "metric_residual": self.metric_residual,
            "closure_residual": self.closure_residual,
            "loops": self.loops,
        }


def _transport(
    omega: MatrixForm,
    starts: np.ndarray,
    ends: np.ndarray,
    initial: np.ndarray,
    max_step: float,
) -> np.ndarray:
    """Solve dE/dt = E omega(x'(t)) along the segments starts -> ends, batched."""
    delta = ends - starts
    length = float(np.max(np.linalg.norm(delta, axis=1))) if delta.size else 0.0
    if length == 0.0:
        return initial.copy()
    batch, size = initial.shape[0], initial.shape[1]

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        E = y.reshape(batch, size, size)
        W = coefficient_tensor(omega, starts + t * delta)
        return (E @ np.einsum("pabk,pk->pab", W, delta)).ravel()

    solution = solve_ivp(
        rhs,
        (0.0, 1.0),
        initial.ravel(),
        method="RK45",
        max_step=max_step / length,
        rtol=1e-10,
        atol=1e-12,
    )
    if not solution.success:
        raise ExprDomainError(f"frame transport failed: {solution.message}")
    result = solution.y[:, -1].reshape(batch, size, size)
    if not np.all(np.isfinite(result)):
        raise ExprDomainError("frame transport produced non-finite values")
    return result


def _axis_path_transport(
    omega: MatrixForm,
    basepoint: np.ndarray,
    points: np.ndarray,
    E0: np.ndarray,
    max_step: float,
) -> np.ndarray:
    current = np.tile(basepoint, (points.shape[0], 1))
    E = np.tile(E0, (points.shape[0], 1, 1))
    for k in range(points.shape[1]):
        target = current.copy()
        target[:, k] = points[:, k]
        E = _transport(omega, current, target, E, max_step)
        current = target
    return E


def loop_closure(
    omega: ConnectionForm,
    box: Sequence[Tuple[float, float]],
    rng: np.random.Generator,
    loops: int = 10,
    max_step: float = 1e-2,
) -> float:
    """Max |T - I| of the transport around random coordinate rectangles in the box."""
    w = omega.require_symbolic("loop_closure")
    m = w.m
    if m < 2 or loops < 1:
        return 0.0
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    width = hi - lo
    corners = np.zeros((loops, m))
    legs: List[np.ndarray] = [np.zeros((loops, m)) for _ in range(2)]
    for i in range(loops):
        k, l = rng.choice(m, size=2, replace=False)
        for leg, axis in zip(legs, (k, l)):
            leg[i, axis] = rng.uniform(0.1, 0.5) * width[axis]
        corners[i] = lo + rng.uniform(0.0, 1.0, m) * (width - legs[0][i] - legs[1][i])
    T = np.tile(np.eye(w.rows), (loops, 1, 1))
    position = corners
    for step in (legs[0], legs[1], -legs[0], -legs[1]):
        T = _transport(w, position, position + step, T, max_step)
        position = position + step
    closure = _max_abs(T - np.eye(w.rows))
    logger.debug("loop closure %.3e over %d rectangles", closure, loops)
    return closure


def frame_integrate(
    omega: ConnectionForm,
    basepoint: Sequence[float],
    E0: np.ndarray,
    points: np.ndarray,
    box: Optional[Sequence[Tuple[float, float]]] = None,
    potential: Optional[MatrixForm] = None,
    method: str = "auto",
    max_step: float = 1e-2,
    tol: float = 1e-9,
    seed: int = 0,
    loops: int = 10,
) -> FrameIntegration:
    """Frame field e with nabla e = e omega and e(basepoint) = E0, on the sample grid.

    method="exp" uses E = E0 exp(-x(p0)) exp(x(p)) and needs a potential x
    with omega = dx commuting with omega pointwise; "integrate" transports
    along axis-ordered paths; "auto" takes the closed form when it applies.

    Raises:
        PreconditionError: omega is not flat, E0 is not pseudo-orthonormal,
            or the closed form was requested but does not apply.
    """
    w = omega.require_symbolic("frame_integrate")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    basepoint = np.asarray(basepoint, dtype=float)
    E0 = np.asarray(E0, dtype=float)
    if basepoint.shape != (w.m,):
        raise InvalidInputError(f"basepoint must have {w.m} coordinates")
    if method not in ("auto", "exp", "integrate"):
        raise InvalidInputError(f"unknown integration method {method!r}")
    G = neutral_metric(omega.n)
    if E0.shape != G.shape or _max_abs(E0.T @ G @ E0 - G) > tol:
        raise PreconditionError("initial frame is not pseudo-orthonormal")
    flatness = flatness_residual(w, points)
    if flatness > tol:
        raise PreconditionError(f"connection form is not flat (residual {flatness:.3e})")

    commutes = False
    if potential is not None and method != "integrate":
        commutes = potential_commutes(potential, w, points, tol)
    if method == "exp" and not commutes:
        raise PreconditionError("the closed-form frame needs a potential commuting with omega")

    if w.is_zero():
        used, E = "constant", np.tile(E0, (points.shape[0], 1, 1))
    elif commutes:
        used = "exp"
        base = E0 @ expm(-potential.values(basepoint[None, :])[0])
        E = base @ expm(potential.values(points))
    else:
        used = "integrate"
        E = _axis_path_transport(w, basepoint, points, E0, max_step)

    metric = _max_abs(np.einsum("pji,jk,pkl->pil", E, G, E) - G)
    if box is None:
        box = list(zip(points.min(axis=0), points.max(axis=0)))
    closure = loop_closure(omega, box, np.random.default_rng(seed), loops, max_step)
    if metric > 1e-7:
        logger.warning("integrated frame drifted from pseudo-orthonormal (%.3e)", metric)
    logger.info("frame integration via %s: metric=%.3e closure=%.3e", used, metric, closure)
    frame = FrameField(omega.n, w.m, samples=E, points=points)
    return FrameIntegration(frame, used, metric, closure, loops if w.m >= 2 else 0)


# --- twistor sections with light-like derivative -----------------------------


def nonvanishing_margin(g: Expr, m: int, points: np.ndarray) -> float:
    """min |dg| over the sample set."""
    dg = DifferentialForm.differential(g, m).evaluate(points)
    return float(np.min(np.linalg.norm(dg, axis=-1))) if dg.size else 0.0


def require_nonvanishing(g: Expr, m: int, points: np.ndarray, tol: float, name: str = "dg") -> float:
    margin = nonvanishing_margin(g, m, points)
    if margin <= tol:
        raise PreconditionError(f"{name} vanishes at a sample point (min |{name}| = {margin:.3e})")
    return margin


def _with_validation(points: np.ndarray, validation: Optional[np.ndarray]) -> np.ndarray:
    if validation is None:
        return points
    return np.vstack([points, np.atleast_2d(np.asarray(validation, dtype=float))])


@dataclass
class SingleSideResult:
    omega: ConnectionForm
    residual: float
    residuals: Dict[str, float]
    alpha: DifferentialForm = field(repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {"residual": self.residual, "residuals": dict(self.residuals)}


def single_eps_omega(
    f: Expr,
    g: Expr,
    w21: DifferentialForm,
    w31: DifferentialForm,
    w32: DifferentialForm,
    mu: int,
    eps: int,
    points: np.ndarray,
    tol: float = 1e-9,
    validation: Optional[np.ndarray] = None,
) -> SingleSideResult:
    """Complete omega from omega^2_1, omega^3_1, omega^3_2 and the functions f, g.

    omega^4_1 = eps E dg - eps omega^3_2, omega^4_2 = eps omega^3_1 - df and
    omega^4_3 = mu E dg - eps omega^2_1 with E = exp(mu f). The reported
    residual is that of the three remaining exterior equations.

    Raises:
        PreconditionError: dg vanishes at a sample point or on the validation grid.
    """
    m = w21.m
    if any(w.m != m or w.degree != 1 for w in (w21, w31, w32)):
        raise InvalidInputError("omega^2_1, omega^3_1, omega^3_2 must be 1-forms on one R^m")
    if mu not in (1, -1) or eps not in (1, -1):
        raise InvalidInputError("mu and eps must be +1 or -1")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    require_nonvanishing(g, m, _with_validation(points, validation), tol)
    E = exp(f * float(mu))
    df = DifferentialForm.differential(f, m)
    dg = DifferentialForm.differential(g, m)
    Edg = dg.scale(E)
    w41 = Edg.scale(float(eps)) - w32.scale(float(eps))
    w42 = w31.scale(float(eps)) - df
    w43 = Edg.scale(float(mu)) - w21.scale(float(eps))
    lower = MatrixForm.from_entries(
        4, 4, 1, m, {(2, 1): w21, (3, 1): w31, (3, 2): w32, (4, 1): w41, (4, 2): w42, (4, 3): w43}
    )
    omega = ConnectionForm(symbolic=compatible_completion(lower))

    e_mu = float(eps * mu)
    dfdg = wedge(df, dg).scale(E)
    equations = {
        "d omega^2_1": ext_d(w21)
        - (wedge(w31, w32).scale(2.0) - wedge(w31, dg).scale(E) + wedge(w32, df).scale(float(eps)) + dfdg.scale(float(eps))),
        "d omega^3_1": ext_d(w31)
        - (wedge(w21, w32).scale(2.0) - wedge(w21, dg).scale(E) + wedge(w32, dg).scale(E * e_mu)),
        "d omega^3_2": ext_d(w32)
        - (
            wedge(w21, w31).scale(-2.0)
            + wedge(w21, df).scale(float(eps))
            - wedge(w31, dg).scale(E * e_mu)
            + dfdg.scale(float(mu))
        ),
    }
    residuals = {name: _max_abs(form.evaluate(points)) for name, form in equations.items()}
    residual = max(residuals.values())
    logger.debug("single side eps=%+d mu=%+d residual %.3e", eps, mu, residual)
    return SingleSideResult(omega, residual, residuals, Edg)


def expected_side_mu(spec: PairSpec, eps: int) -> int:
    """Branch A keeps mu on both sides; branch B flips it on the - side."""
    if spec.branch == "B" and eps < 0:
        return -spec.mu
    return spec.mu


def expected_alpha(spec: PairSpec, eps: int) -> DifferentialForm:
    """exp(mu_eps f^eps) dg^eps."""
    mu = expected_side_mu(spec, eps)
    return DifferentialForm.differential(spec.g(eps), spec.m).scale(exp(spec.f(eps) * float(mu)))


def pair_omega(
    spec: PairSpec, points: np.ndarray, tol: float = 1e-9, validation: Optional[np.ndarray] = None
) -> ConnectionForm:
    """Connection form whose sections Omega_(+,2) and Omega_(-,2) both have light-like derivative.

    Raises:
        PreconditionError: dg+ or dg- vanishes at a sample point or on the validation grid.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    m, mu = spec.m, float(spec.mu)
    checked = _with_validation(points, validation)
    require_nonvanishing(spec.g_plus, m, checked, tol, "dg+")
    require_nonvanishing(spec.g_minus, m, checked, tol, "dg-")
    df_plus = DifferentialForm.differential(spec.f_plus, m)
    df_minus = DifferentialForm.differential(spec.f_minus, m)
    plus = expected_alpha(spec, 1)
    minus = expected_alpha(spec, -1)
    total, diff = (plus + minus).scale(0.5), (plus - minus).scale(0.5)
    entries = {
        (3, 1): (df_plus - df_minus).scale(0.5),
        (4, 2): (df_plus + df_minus).scale(-0.5),
        (3, 2): total,
        (4, 1): diff,
    }
    if spec.branch == "A":
        entries[(2, 1)] = diff.scale(mu)
        entries[(4, 3)] = total.scale(mu)
    else:
        entries[(2, 1)] = total.scale(mu)
        entries[(4, 3)] = diff.scale(mu)
    lower = MatrixForm.from_entries(4, 4, 1, m, entries)
    logger.info("pair connection branch %s mu=%+d on R^%d", spec.branch, spec.mu, m)
    return ConnectionForm(symbolic=compatible_completion(lower))


def branch_classify(omega: ConnectionForm, mu: int, points: np.ndarray, tol: float = 1e-9) -> str:
    """Which relation set holds: A (omega^4_1 = mu omega^2_1, omega^4_3 = mu omega^3_2)
    or B (omega^3_2 = mu omega^2_1, omega^4_3 = mu omega^4_1)."""
    if omega.size != 4:
        raise InvalidInputError("branch classification needs n = 1")
    W = omega.coefficients(points)

    def w(i: int, j: int) -> np.ndarray:
        return W[:, i - 1, j - 1, :]

    a = max(_max_abs(w(4, 1) - mu * w(2, 1)), _max_abs(w(4, 3) - mu * w(3, 2))) <= tol
    b = max(_max_abs(w(3, 2) - mu * w(2, 1)), _max_abs(w(4, 3) - mu * w(4, 1))) <= tol
    if a and b:
        return "both"
    return "A" if a else "B" if b else "neither"


# --- random pair data -----------------------------------------------------------

# each term has partial derivatives bounded by 1 on [-1, 1]^m
_BOUNDED_TERMS = ("sin(x{j})", "cos(x{j})", "x{j}^2/2", "exp(x{j})/3", "x{j}*x{l}/2", "sin(x{j}*x{l})/2")
_FUNCTION_TERMS = ("x{j}", "x{j}*x{l}", "sin(x{j})", "exp(x{j}/2)", "x{j}^2", "cos(x{j}+x{l})")


def _term(template: str, rng: np.random.Generator, m: int) -> str:
    j, l = (int(v) + 1 for v in rng.integers(0, m, size=2))
    return template.format(j=j, l=l)


def _random_g(rng: np.random.Generator, m: int) -> str:
    k = int(rng.integers(1, m + 1))
    slope = float(rng.choice([-1.0, 1.0]) * rng.uniform(1.0, 2.0))
    wobble = float(rng.uniform(-0.25, 0.25))
    return f"{slope!r}*x{k} + {wobble!r}*{_term(str(rng.choice(_BOUNDED_TERMS)), rng, m)}"


def _random_f(rng: np.random.Generator, m: int) -> str:
    scale = float(rng.uniform(-1.0, 1.0))
    return f"{scale!r}*({_term(str(rng.choice(_FUNCTION_TERMS)), rng, m)})"


def random_pair_spec(rng: np.random.Generator, m: int, branch: str = "A", mu: int = 1) -> PairSpec:
    """Random f+-, g+- with |dg+-| >= 3/4 on the box [-1, 1]^m."""
    texts = [_random_f(rng, m), _random_f(rng, m), _random_g(rng, m), _random_g(rng, m)]
    f_plus, f_minus, g_plus, g_minus = (parse(text, m) for text in texts)
    return PairSpec(f_plus, f_minus, g_plus, g_minus, m, branch, mu)
