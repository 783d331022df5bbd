"""factorize, walker-check and norm - checks on one connection form."""

from __future__ import annotations

import logging
from typing import Optional, Tuple

import numpy as np

from src.core.connection import (
    ConnectionForm,
    compatibility_residual,
    factorization_check,
    horizontality_residual,
    isotropic_parakahler,
    omega_star_norm_values,
    square_norm,
    square_norm_values,
    walker_closed_forms,
    walker_distribution,
    walker_matrix,
    walker_residual,
    walker_to_paracomplex,
)
from src.core.exterior import flatness_residual
from src.core.generators import expected_alpha, family_alpha
from src.core.neutral import neutral_metric
from src.core.structures import FrameField, ParacomplexStructure, paracomplex_from_frame
from src.domain.errors import InvalidInputError
from src.domain.models import RunConfig, VerificationReport
from src.evaluate.stages import StageRecorder, max_abs
from src.io.config_loader import (
    ConnectionSource,
    bound_expressions,
    connection_from_config,
    lookup,
    mapping_param,
    matrix_param,
    sign_param,
)
from src.utils.sampling import sample_points

logger = logging.getLogger(__name__)


def load_connection(config: RunConfig) -> Tuple[np.ndarray, ConnectionSource, int]:
    """Sample grid, connection source and the eps of J (params.eps, else the family's)."""
    points = sample_points(config.box, config.samples, config.seed)
    source = connection_from_config(config, points)
    if source.omega.size != 4 * config.n:
        raise InvalidInputError(f"connection rank {source.omega.size} does not match n = {config.n}")
    default_eps = source.family.eps if source.family is not None else 1
    return points, source, sign_param(config.params, "eps", default_eps)


def standard_J(config: RunConfig, eps: int) -> ParacomplexStructure:
    return paracomplex_from_frame(FrameField.identity(config.n, config.m), eps)


def _expected_alpha(source: ConnectionSource, eps: int, points: np.ndarray) -> Optional[np.ndarray]:
    if source.family is not None:
        return family_alpha(source.family).evaluate(points)
    if source.pair is not None:
        return expected_alpha(source.pair, eps).evaluate(points)
    return None


def run_factorize(config: RunConfig) -> VerificationReport:
    """nabla J = alpha (x) N for the standard J_eps in the frame of omega.

    params: omega, eps, mu (omitted: both signs are tried).
    """
    recorder = StageRecorder("factorize", config.tol)
    points, source, eps = load_connection(config)
    omega = source.omega
    mu = config.params.get("mu")
    if mu is not None:
        mu = sign_param(config.params, "mu")
    N = points.shape[0]

    report = factorization_check(omega, standard_J(config, eps), points, mu=mu, tol=config.tol)
    recorder.record("compatibility", report.compatibility_residual, N)
    recorder.record("factorization", report.residual, N)
    recorder.record("omega condition", report.condition_residual, N)
    if report.pair_residual is not None:
        recorder.record("pair equation", report.pair_residual, N)
    expected = _expected_alpha(source, eps, points)
    if expected is not None:
        recorder.record("alpha", max_abs(report.alpha - expected), N)
    if omega.symbolic is not None:
        recorder.note(flatness=flatness_residual(omega.symbolic, points))
    recorder.note(eps=eps, source=source.describe(), factorization=report.to_dict(), certified_on="sample set")
    return recorder.report()


def run_norm(config: RunConfig) -> VerificationReport:
    """Square norm of nabla J and the isotropic paraKahler flag.

    params: omega, eps, base_metric (matrix, default the neutral metric when m = 4n, else identity).
    """
    recorder = StageRecorder("norm", config.tol)
    points, source, eps = load_connection(config)
    omega = source.omega
    J = standard_J(config, eps)
    base_metric = config.params.get("base_metric")
    if base_metric is not None:
        base_metric = matrix_param(config, base_metric)
    N = points.shape[0]

    compat = compatibility_residual(omega, points)
    recorder.record("compatibility", compat, N)
    value = square_norm(omega, J, points, base_metric)
    values = square_norm_values(omega, J, points, base_metric)
    oracle = omega_star_norm_values(omega, J, points, base_metric)
    recorder.record("square norm", abs(value), N)
    recorder.record("omega star agreement", max_abs(values - oracle), N)
    recorder.note(
        eps=eps,
        square_norm=value,
        isotropic_parakahler=isotropic_parakahler(omega, J, points, config.tol, base_metric),
        source=source.describe(),
    )
    return recorder.report()


def _distribution(config: RunConfig, omega: ConnectionForm, eps: int, points: np.ndarray) -> Tuple[np.ndarray, Optional[Tuple[int, int]]]:
    block = mapping_param(config.params, "distribution")
    if "matrix" in block:
        return matrix_param(config, block["matrix"]), None
    d_eps = sign_param(block, "eps", eps)
    mu = block.get("mu", 1)
    if mu == "auto":
        J = paracomplex_from_frame(FrameField.identity(omega.n, omega.m), d_eps)
        mu = factorization_check(omega, J, points, tol=config.tol).mu
    mu = sign_param({"mu": mu}, "mu")
    return walker_distribution(omega.n, d_eps, mu), (d_eps, mu)


def run_walker_check(config: RunConfig) -> VerificationReport:
    """h(nabla_X xi_i, xi_j) = 0 for the generators of a light-like distribution.

    params: omega, eps, distribution ({"eps", "mu" | "auto"} or {"matrix"}),
    h (Walker to paracomplex modification, n = 1).
    """
    recorder = StageRecorder("walker-check", config.tol)
    points, source, eps = load_connection(config)
    omega = source.omega
    N = points.shape[0]

    D, signs = _distribution(config, omega, eps, points)
    if D.shape != (omega.size, 2 * omega.n):
        raise InvalidInputError(f"distribution needs {2 * omega.n} generators in R^{omega.size}")
    G = neutral_metric(omega.n)
    recorder.record("distribution isotropy", max_abs(D.T @ G @ D), 1)
    recorder.record("walker", walker_residual(omega, D, points), N)
    if signs is not None:
        closed = walker_closed_forms(omega, signs[0], signs[1], points)
        recorder.record("walker closed forms", max_abs(walker_matrix(omega, D, points) - closed), N)
        recorder.note(distribution={"eps": signs[0], "mu": signs[1]})

    if "h" in config.params:
        if omega.n != 1:
            raise InvalidInputError("the paracomplex modification needs n = 1")
        h = lookup(bound_expressions(config), config.params["h"], config)
        frame = FrameField.identity(1, config.m)
        result = walker_to_paracomplex(frame, omega, eps, h, points, config.tol)
        alpha_norm = np.linalg.norm(result.factorization.alpha, axis=-1)
        recorder.record("paracomplex factorization", result.factorization.residual, N)
        recorder.record("paracomplex alpha nonvanishing", float(np.min(alpha_norm)), N, kind="min")
        recorder.record("paracomplex distribution", result.distribution_residual, N)
        recorder.record("paracomplex related", result.related_residual, N)
        recorder.record("paracomplex frame", result.frame_residual, N)
        recorder.note(paracomplex=result.to_dict())
    if omega.symbolic is not None and omega.n == 1:
        recorder.note(horizontality=horizontality_residual(omega, eps, points))
    recorder.note(eps=eps, source=source.describe(), certified_on="sample set")
    return recorder.report()
