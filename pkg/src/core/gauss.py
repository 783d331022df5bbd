"""Time-like minimal surfaces in E^3_1 and their conformal Gauss maps into S^4_2.

Surfaces come from two null curves, iota(u, v) = A(u + v) + B(u - v), with
u = x1 and v = x2. Geometric quantities are Expr trees in (u, v) so every
ambient derivative is exact; projections onto frames and normal spaces are
numeric per sample. E^3_1 carries (+, +, -) and E^5_2 carries (+, +, +, -, -).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space

from src.core.connection import (
    ConnectionForm,
    FactorizationReport,
    LightlikeReport,
    factorization_check,
    fully_lightlike_check,
    walker_check,
)
from src.core.expr import Expr, coordinate, evaluate_many, log, partial, sqrt, substitute
from src.core.generators import branch_classify
from src.core.structures import FrameField, ParacomplexStructure, paracomplex_component_matrix
from src.domain.errors import InvalidInputError, PreconditionError

logger = logging.getLogger(__name__)

LORENTZ3 = np.diag([1.0, 1.0, -1.0])
NEUTRAL5 = np.diag([1.0, 1.0, 1.0, -1.0, -1.0])
FRAME_SIGNS = np.array([1.0, 1.0, -1.0, -1.0])
FD_STEP = 1e-5

Vector = List[Expr]


def _dot3(a: Sequence[Expr], b: Sequence[Expr]) -> Expr:
    return a[0] * b[0] + a[1] * b[1] - a[2] * b[2]


def _values(exprs: Sequence[Expr], points: np.ndarray) -> np.ndarray:
    """Stack of evaluated components, shape (N, len(exprs))."""
    cache: Dict[int, np.ndarray] = {}
    return np.stack([evaluate_many(e, points, cache) for e in exprs], axis=-1)


def _d(vector: Sequence[Expr], k: int) -> Vector:
    return [partial(c, k) for c in vector]


def inner5(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...i,ij,...j->...", a, NEUTRAL5, b)


def lightcone_embed(p: np.ndarray) -> np.ndarray:
    """((<p,p> - 1)/2, p, (<p,p> + 1)/2) on the slice x^5 = x^1 + 1 of the light cone."""
    p = np.asarray(p, dtype=float)
    q = np.einsum("...i,ij,...j->...", p, LORENTZ3, p)[..., None]
    return np.concatenate([(q - 1.0) / 2.0, p, (q + 1.0) / 2.0], axis=-1)


def _lightcone_exprs(p: Sequence[Expr]) -> Vector:
    q = _dot3(p, p)
    return [(q - 1.0) * 0.5, p[0], p[1], p[2], (q + 1.0) * 0.5]


@dataclass
class NullCurve:
    """Curve t -> (c1(t), c2(t), c3(t)) in E^3_1 written in the variable x1."""

    components: Tuple[Expr, Expr, Expr]

    def __post_init__(self) -> None:
        if len(self.components) != 3:
            raise InvalidInputError("a null curve has three components")
        self.components = tuple(self.components)

    def derivative(self) -> Vector:
        return _d(self.components, 1)

    def null_residual(self, ts: np.ndarray) -> float:
        velocity = _values(self.derivative(), np.asarray(ts, dtype=float).reshape(-1, 1))
        return float(np.max(np.abs(np.einsum("ni,ij,nj->n", velocity, LORENTZ3, velocity))))

    def compose(self, argument: Expr) -> Vector:
        return [substitute(c, {1: argument}) for c in self.components]


@dataclass
class TimelikeMinimalSurface:
    A: NullCurve
    B: NullCurve
    box: Tuple[Tuple[float, float], Tuple[float, float]]
    iota: Vector = field(init=False, repr=False)

    def __post_init__(self) -> None:
        u, v = coordinate(1), coordinate(2)
        plus, minus = self.A.compose(u + v), self.B.compose(u - v)
        self.iota = [a + b for a, b in zip(plus, minus)]
        self.iota_u, self.iota_v = _d(self.iota, 1), _d(self.iota, 2)
        self.iota_uu, self.iota_uv, self.iota_vv = _d(self.iota_u, 1), _d(self.iota_u, 2), _d(self.iota_v, 2)
        conformal = _dot3(self.iota_u, self.iota_u)
        self.lam = log(conformal) * 0.5
        cross = [
            self.iota_u[1] * self.iota_v[2] - self.iota_u[2] * self.iota_v[1],
            self.iota_u[2] * self.iota_v[0] - self.iota_u[0] * self.iota_v[2],
            self.iota_u[0] * self.iota_v[1] - self.iota_u[1] * self.iota_v[0],
        ]
        # G (a x b) is orthogonal to a and b; (iota_u, iota_v, normal) is then positively oriented
        raw = [cross[0], cross[1], -cross[2]]
        scale = sqrt(_dot3(raw, raw))
        self.normal = [c / scale for c in raw]
        self.l = _dot3(self.iota_uu, self.normal)
        self.m = _dot3(self.iota_uv, self.normal)
        self.e2lam = conformal
        self.curvature = (self.m * self.m - self.l * self.l) / (conformal * conformal)

    def residuals(self, points: np.ndarray) -> Dict[str, float]:
        """Conformality, minimality and normal residuals on the sample set."""
        iu, iv = _values(self.iota_u, points), _values(self.iota_v, points)
        uu, vv = _values(self.iota_uu, points), _values(self.iota_vv, points)
        n = _values(self.normal, points)

        def ip(a: np.ndarray, b: np.ndarray) -> np.ndarray:
            return np.einsum("ni,ij,nj->n", a, LORENTZ3, b)

        return {
            "conformality": float(np.max(np.abs(ip(iu, iu) + ip(iv, iv)))),
            "orthogonality": float(np.max(np.abs(ip(iu, iv)))),
            "minimality": float(np.max(np.abs(uu - vv))),
            "unit_normal": float(np.max(np.abs(ip(n, n) - 1.0))),
            "normal_orthogonality": float(max(np.max(np.abs(ip(n, iu))), np.max(np.abs(ip(n, iv))))),
        }


def surface_from_null_curves(
    A: NullCurve,
    B: NullCurve,
    box: Sequence[Sequence[float]],
    samples: int = 200,
    tol: float = 1e-10,
) -> TimelikeMinimalSurface:
    """iota(u, v) = A(u + v) + B(u - v) over the (u, v) box.

    Raises:
        PreconditionError: a curve is not null, or <A', B'> is not positive,
            so the surface is not time-like somewhere in the box.
    """
    (u0, u1), (v0, v1) = (tuple(map(float, b)) for b in box)
    if not (u0 < u1 and v0 < v1):
        raise InvalidInputError("surface box bounds must satisfy min < max")
    for name, curve, lo, hi in (("A", A, u0 + v0, u1 + v1), ("B", B, u0 - v1, u1 - v0)):
        residual = curve.null_residual(np.linspace(lo, hi, samples))
        if residual > tol:
            raise PreconditionError(f"curve {name} is not null (residual {residual:.3e})")
    surface = TimelikeMinimalSurface(A, B, ((u0, u1), (v0, v1)))
    u, v = np.meshgrid(np.linspace(u0, u1, 15), np.linspace(v0, v1, 15))
    grid = np.column_stack([u.ravel(), v.ravel()])
    u_, v_ = coordinate(1), coordinate(2)
    velocity_a = [substitute(c, {1: u_ + v_}) for c in A.derivative()]
    velocity_b = [substitute(c, {1: u_ - v_}) for c in B.derivative()]
    pairing = evaluate_many(_dot3(velocity_a, velocity_b), grid)
    if float(np.min(pairing)) <= 0.0:
        raise PreconditionError("<A'(u+v), B'(u-v)> is not positive on the box; the surface is not time-like there")
    logger.info("time-like minimal surface on u in (%g, %g), v in (%g, %g)", u0, u1, v0, v1)
    return surface


@dataclass
class FundamentalData:
    points: np.ndarray
    lam: np.ndarray
    l: np.ndarray
    m: np.ndarray
    curvature: np.ndarray
    regular: np.ndarray
    mask: np.ndarray
    intrinsic_gap: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "regular_fraction": float(np.mean(self.regular)) if self.regular.size else 0.0,
            "mask_fraction": float(np.mean(self.mask)) if self.mask.size else 0.0,
            "intrinsic_gap": self.intrinsic_gap,
        }


def fundamental_data(s: TimelikeMinimalSurface, points: np.ndarray, tol: float = 1e-8) -> FundamentalData:
    """lambda, l, m and K^M = (m^2 - l^2) e^(-4 lambda) on the sample set.

    K^M is cross-checked against the intrinsic -e^(-2 lambda)(lambda_uu - lambda_vv).

    Raises:
        PreconditionError: the induced metric degenerates at a sample point.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    conformal = evaluate_many(s.e2lam, points)
    if float(np.min(conformal)) <= tol:
        raise PreconditionError("degenerate metric: e^(2 lambda) vanishes at a sample point")
    lam = 0.5 * np.log(conformal)
    l_values, m_values = evaluate_many(s.l, points), evaluate_many(s.m, points)
    curvature = (m_values**2 - l_values**2) / conformal**2
    laplace = partial(partial(s.lam, 1), 1) - partial(partial(s.lam, 2), 2)
    intrinsic = -evaluate_many(laplace, points) / conformal
    gap = float(np.max(np.abs(curvature - intrinsic)))
    if gap > 1e-6 * max(1.0, float(np.max(np.abs(curvature)))):
        logger.warning("Gauss equation and intrinsic curvature differ by %.3e", gap)
    regular = np.abs(curvature) > tol
    mask = regular & (l_values**2 > m_values**2)
    logger.debug("fundamental data: %d of %d samples in the mask", int(mask.sum()), mask.size)
    return FundamentalData(points, lam, l_values, m_values, curvature, regular, mask, gap)


@dataclass
class SphereMap:
    """Conformal Gauss map F = (<n, iota>, n, <n, iota>) with light-like normals iota-hat and nu."""

    surface: TimelikeMinimalSurface
    F: Vector = field(repr=False)
    lift: Vector = field(repr=False)

    def derivatives(self) -> Tuple[Vector, Vector]:
        return _d(self.F, 1), _d(self.F, 2)

    def values(self, points: np.ndarray) -> Dict[str, np.ndarray]:
        Fu, Fv = self.derivatives()
        return {
            "F": _values(self.F, points),
            "F_u": _values(Fu, points),
            "F_v": _values(Fv, points),
            "lift": _values(self.lift, points),
        }

    def nu(self, points: np.ndarray) -> np.ndarray:
        """The light-like normal with <nu, iota-hat> = -1, found in the normal space of F."""
        data = self.values(points)
        out = np.zeros_like(data["F"])
        for p in range(out.shape[0]):
            tangent = np.stack([data["F"][p], data["F_u"][p], data["F_v"][p]]) @ NEUTRAL5
            basis = null_space(tangent)
            if basis.shape[1] != 2:
                raise PreconditionError("normal space of the Gauss map is not 2-dimensional")
            lift = data["lift"][p]
            pairings = np.array([inner5(basis[:, i], lift) for i in range(2)])
            w = basis[:, int(np.argmax(np.abs(pairings)))]
            c = inner5(w, lift)
            nu = w - inner5(w, w) / (2.0 * c) * lift
            out[p] = -nu / c
        return out


def conformal_gauss(s: TimelikeMinimalSurface, data: FundamentalData, tol: float = 1e-7) -> Tuple[SphereMap, Dict[str, float]]:
    """The conformal Gauss map and its residuals on the mask.

    Raises:
        PreconditionError: the mask is empty.
    """
    if not np.any(data.mask):
        raise PreconditionError("mask is empty: K^M vanishes or l^2 <= m^2 on every sample")
    support = _dot3(s.normal, s.iota)
    F = [support, s.normal[0], s.normal[1], s.normal[2], support]
    gauss = SphereMap(s, F, _lightcone_exprs(s.iota))
    points = data.points[data.mask]
    values = gauss.values(points)
    F_values, Fu, Fv, lift = values["F"], values["F_u"], values["F_v"], values["lift"]
    conformal = np.exp(2.0 * data.lam[data.mask])
    K = data.curvature[data.mask]

    # E^3_1 part of the derivative formula for the unit normal
    gamma_u, gamma_v = _values(_d(s.normal, 1), points), _values(_d(s.normal, 2), points)
    iu, iv = _values(s.iota_u, points), _values(s.iota_v, points)
    l_v, m_v = data.l[data.mask][:, None], data.m[data.mask][:, None]
    scale = 1.0 / conformal[:, None]
    gugv = max(
        float(np.max(np.abs(gamma_u - scale * (-l_v * iu + m_v * iv)))),
        float(np.max(np.abs(gamma_v - scale * (-m_v * iu + l_v * iv)))),
    )
    residuals = {
        "unit_sphere": float(np.max(np.abs(inner5(F_values, F_values) - 1.0))),
        "lift_orthogonality": float(np.max(np.abs(inner5(F_values, lift)))),
        "lift_null": float(np.max(np.abs(inner5(lift, lift)))),
        "sphere_tangency": float(max(np.max(np.abs(inner5(F_values, Fu))), np.max(np.abs(inner5(F_values, Fv))))),
        "induced_metric": float(
            max(
                np.max(np.abs(inner5(Fu, Fu) + K * conformal)),
                np.max(np.abs(inner5(Fv, Fv) - K * conformal)),
                np.max(np.abs(inner5(Fu, Fv))),
            )
        ),
        "normal_derivative": gugv,
    }
    if residuals["normal_derivative"] > tol:
        logger.warning("normal derivative formula off by %.3e", gugv)
    return gauss, residuals


@dataclass
class ShapeOperators:
    A_iota: np.ndarray = field(repr=False)
    A_nu: np.ndarray = field(repr=False)
    closed_form_gap: float = 0.0
    trace: float = 0.0
    nu_norm: float = 0.0
    nu_spread: float = 0.0
    nu_derivative: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "closed_form_gap": self.closed_form_gap,
            "trace": self.trace,
            "A_nu": self.nu_norm,
            "nu_spread": self.nu_spread,
            "nu_derivative": self.nu_derivative,
        }


def _shape_matrix(gauss: SphereMap, normal: np.ndarray, points: np.ndarray) -> np.ndarray:
    """g^-1 h with h_ab = <F_ab, normal>, columns giving A(d_u), A(d_v) in (F_u, F_v)."""
    Fu, Fv = gauss.derivatives()
    second = [_d(Fu, 1), _d(Fu, 2), _d(Fv, 2)]
    uu, uv, vv = (_values(vec, points) for vec in second)
    fu, fv = _values(Fu, points), _values(Fv, points)
    g = np.stack(
        [np.stack([inner5(fu, fu), inner5(fu, fv)], -1), np.stack([inner5(fv, fu), inner5(fv, fv)], -1)], -2
    )
    h = np.stack(
        [
            np.stack([inner5(uu, normal), inner5(uv, normal)], -1),
            np.stack([inner5(uv, normal), inner5(vv, normal)], -1),
        ],
        -2,
    )
    return np.linalg.solve(g, h)


def shape_ops(gauss: SphereMap, data: FundamentalData, h: float = FD_STEP) -> ShapeOperators:
    """Shape operators of F along iota-hat and nu on the mask."""
    points = data.points[data.mask]
    if not points.size:
        raise PreconditionError("shape operators need a nonempty mask")
    lift = _values(gauss.lift, points)
    nu = gauss.nu(points)
    A_iota = _shape_matrix(gauss, lift, points)
    A_nu = _shape_matrix(gauss, nu, points)

    l_v, m_v = data.l[data.mask], data.m[data.mask]
    factor = np.exp(2.0 * data.lam[data.mask]) / (l_v**2 - m_v**2)
    closed = factor[:, None, None] * np.stack(
        [np.stack([l_v, m_v], -1), np.stack([-m_v, -l_v], -1)], -2
    )
    unit = nu / np.linalg.norm(nu, axis=-1, keepdims=True)
    spread = float(np.max(np.linalg.norm(unit - unit[0], axis=-1)))
    derivative = 0.0
    for k in range(2):
        step = np.zeros(2)
        step[k] = h
        fd = (gauss.nu(points + step) - gauss.nu(points - step)) / (2.0 * h)
        derivative = max(derivative, float(np.max(np.abs(fd))))
    return ShapeOperators(
        A_iota=A_iota,
        A_nu=A_nu,
        closed_form_gap=float(np.max(np.abs(A_iota - closed))),
        trace=float(np.max(np.abs(np.trace(A_iota, axis1=1, axis2=2)))),
        nu_norm=float(np.max(np.abs(A_nu))),
        nu_spread=spread,
        nu_derivative=derivative,
    )


@dataclass
class SphereFrame:
    """Frame e_1 .. e_4 of the pulled back tangent bundle, as vectors in E^5_2."""

    points: np.ndarray
    vectors: np.ndarray = field(repr=False)
    orientation: int = 1

    def gram_residual(self) -> float:
        gram = np.einsum("pia,ij,pjb->pab", self.vectors, NEUTRAL5, self.vectors)
        return float(np.max(np.abs(gram - np.diag(FRAME_SIGNS))))


@dataclass
class GaussConnection:
    frame: SphereFrame
    omega: ConnectionForm
    closed_form: np.ndarray = field(repr=False)
    l_tilde: np.ndarray = field(repr=False)
    m_tilde: np.ndarray = field(repr=False)
    coframe_scale: np.ndarray = field(repr=False)
    closed_form_gap: float = 0.0
    compatibility: float = 0.0


def _frame_vectors(gauss: SphereMap, points: np.ndarray) -> np.ndarray:
    s = gauss.surface
    data = gauss.values(points)
    conformal = evaluate_many(s.e2lam, points)
    K = evaluate_many(s.curvature, points)
    scale = np.sqrt(-K * conformal)[:, None]
    nu = gauss.nu(points)
    lift = data["lift"]
    e1, e3 = data["F_u"] / scale, data["F_v"] / scale
    e2, e4 = (nu - lift) / np.sqrt(2.0), (nu + lift) / np.sqrt(2.0)
    return np.stack([e1, e2, e3, e4], axis=-1)


def gauss_frame_and_omega(gauss: SphereMap, data: FundamentalData, h: float = FD_STEP) -> GaussConnection:
    """The frame e and its connection form, numerically and in closed form.

    Numerically omega^i_j(d_k) = eps_i <d_k e_j, e_i>, the ambient derivative
    projected onto the frame (central differences). The closed form has
    omega^2_1 = omega^4_1 = -(l~ e^1 + m~ e^3), omega^3_2 = omega^4_3 = -(m~ e^1 + l~ e^3).

    Raises:
        PreconditionError: K^M >= 0 at a mask sample.
    """
    points = data.points[data.mask]
    K = data.curvature[data.mask]
    if not points.size or np.any(K >= 0.0):
        raise PreconditionError("the Gauss frame needs K^M < 0 on every mask sample")
    E = _frame_vectors(gauss, points)
    F = gauss.values(points)["F"]
    orientation = 1 if np.all(np.linalg.det(np.concatenate([F[:, :, None], E], axis=-1)) > 0) else -1
    frame = SphereFrame(points, E, orientation)

    W = np.zeros((points.shape[0], 4, 4, 2))
    for k in range(2):
        step = np.zeros(2)
        step[k] = h
        dE = (_frame_vectors(gauss, points + step) - _frame_vectors(gauss, points - step)) / (2.0 * h)
        W[..., k] = FRAME_SIGNS[None, :, None] * np.einsum("pxi,xy,pyj->pij", E, NEUTRAL5, dE)
    omega = ConnectionForm(samples=W, points=points)

    conformal = np.exp(2.0 * data.lam[data.mask])
    l_v, m_v = data.l[data.mask], data.m[data.mask]
    denominator = np.sqrt(2.0) * (l_v**2 - m_v**2)
    l_tilde, m_tilde = l_v * conformal / denominator, m_v * conformal / denominator
    # e^1 = s du, e^3 = s dv with s = sqrt(-K) e^lambda
    s = np.sqrt(-K * conformal)
    closed = np.zeros_like(W)
    first = -np.stack([l_tilde * s, m_tilde * s], -1)
    second = -np.stack([m_tilde * s, l_tilde * s], -1)
    for (i, j), value in (((2, 1), first), ((4, 1), first), ((3, 2), second), ((4, 3), second)):
        closed[:, i - 1, j - 1, :] = value
    pairs = ((2, 1), (4, 1), (3, 2), (4, 3))
    gap = max(float(np.max(np.abs(W[:, i - 1, j - 1] - closed[:, i - 1, j - 1]))) for i, j in pairs)
    G = np.diag(FRAME_SIGNS)
    GW = np.einsum("ab,pbck->pack", G, W)
    compatibility = float(np.max(np.abs(GW + np.swapaxes(GW, 1, 2))))
    logger.info("Gauss frame: orientation %+d, closed form gap %.3e", orientation, gap)
    return GaussConnection(frame, omega, closed, l_tilde, m_tilde, s, gap, compatibility)


@dataclass
class LiftVerification:
    lightlike: Dict[int, LightlikeReport] = field(repr=False)
    factorization: Dict[int, FactorizationReport] = field(repr=False)
    residuals: Dict[str, float] = field(default_factory=dict)
    branch: str = "neither"
    walker: Dict[int, bool] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "residuals": dict(self.residuals),
            "branch": self.branch,
            "walker": {("+" if eps > 0 else "-"): ok for eps, ok in self.walker.items()},
            "lightlike": {("+" if eps > 0 else "-"): r.to_dict() for eps, r in self.lightlike.items()},
        }


def verify_lifts(connection: GaussConnection, tol: float = 1e-5) -> LiftVerification:
    """Both lifts Omega_(+-,2) have light-like derivative alpha (x) Omega_0 with the closed-form alpha."""
    omega = connection.omega
    points = omega.points
    placeholder = FrameField.identity(1, omega.m)
    result = LiftVerification({}, {})
    for eps in (1, -1):
        label = "+" if eps > 0 else "-"
        report = fully_lightlike_check(omega, eps, points, tol)
        result.lightlike[eps] = report
        result.residuals[f"lightlike {label}"] = max(report.null_residual, report.section_residual or 0.0)
        expected = -(eps * connection.l_tilde + connection.m_tilde) * connection.coframe_scale
        expected_alpha = expected[:, None] * np.array([1.0, float(eps)])[None, :]
        if report.alpha is not None:
            result.residuals[f"alpha {label}"] = float(np.max(np.abs(report.alpha - expected_alpha)))
        else:
            result.residuals[f"alpha {label}"] = float("inf")
        J = ParacomplexStructure(placeholder, eps, paracomplex_component_matrix(1, eps))
        factor = factorization_check(omega, J, points, tol=tol)
        result.factorization[eps] = factor
        result.residuals[f"factorization {label}"] = factor.residual
        D = factor.N.generators(points[:1])[0]
        result.walker[eps] = walker_check(omega, D, points, tol)
    result.branch = branch_classify(omega, 1, points, tol)
    logger.info("lift verification: branch %s, residuals %s", result.branch, result.residuals)
    return result
