"""flat-gen, pair-gen and classify - generated connection forms and their certificates."""

from __future__ import annotations

import logging
from typing import Any, Dict, List, Mapping, Optional

import numpy as np

from src.conf.config import settings
from src.core.connection import (
    ConnectionForm,
    compatibility_residual,
    factorization_check,
    fully_lightlike_check,
    horizontality_residual,
    square_norm,
    walker_residual,
)
from src.core.exterior import MatrixForm, flatness_residual, matrix_ext_d
from src.core.generators import (
    branch_classify,
    expected_alpha,
    expected_side_mu,
    family_alpha,
    family_blocks,
    family_identities,
    family_omega,
    family_potential,
    frame_integrate,
    pair_omega,
    random_pair_spec,
    single_eps_omega,
    structure_residuals,
    symmetry_residuals,
)
from src.core.structures import FrameField, paracomplex_from_frame
from src.domain.errors import InvalidInputError
from src.domain.models import BRANCHES, PairSpec, RunConfig, VerificationReport
from src.evaluate.stages import StageRecorder, max_abs
from src.io.config_loader import (
    connection_from_config,
    family_from_params,
    float_array,
    float_param,
    int_param,
    mapping_param,
    pair_from_params,
    sign_param,
)
from src.utils.sampling import center, draw_rng, sample_points, validation_points

logger = logging.getLogger(__name__)

FRAME_METRIC_TOL = 1e-7
LOOP_CLOSURE_TOL = 1e-6


def _integration_stages(
    recorder: StageRecorder,
    config: RunConfig,
    omega: ConnectionForm,
    potential: Optional[MatrixForm],
    settings_block: Mapping[str, Any],
) -> None:
    count = int_param(settings_block, "points", min(config.samples, 10), minimum=1)
    grid = sample_points(config.box, count, config.seed + 1)
    basepoint = float_array(settings_block.get("basepoint", center(config.box)), "integrate.basepoint", ndim=1)
    E0 = float_array(settings_block.get("E0", np.eye(omega.size)), "integrate.E0", ndim=2)
    method = settings_block.get("method", "auto")
    max_step = float_param(settings_block, "max_step", settings.MAX_STEP)
    result = frame_integrate(
        omega, basepoint, E0, grid, box=config.box, potential=potential, method=method,
        max_step=max_step, tol=config.tol, seed=config.seed,
    )
    recorder.record("frame metric", result.metric_residual, count, FRAME_METRIC_TOL)
    recorder.record("loop closure", result.closure_residual, max(result.loops, 1), LOOP_CLOSURE_TOL)
    if result.method == "exp":
        numeric = frame_integrate(
            omega, basepoint, E0, grid, box=config.box, method="integrate",
            max_step=max_step, tol=config.tol, seed=config.seed, loops=0,
        )
        gap = max_abs(result.frame.values(grid) - numeric.frame.values(grid))
        recorder.record("exp vs integrator", gap, count, FRAME_METRIC_TOL)
    recorder.note(integration=result.to_dict())


def run_flat_gen(config: RunConfig) -> VerificationReport:
    """One flat family: structure equations, flatness, factorization and frame integration.

    params: family {variant, f, functions, C0, eps, mu}, integrate {points, basepoint, E0, method, max_step}.
    """
    recorder = StageRecorder("flat-gen", config.tol)
    block = config.params.get("family")
    if not isinstance(block, Mapping):
        raise InvalidInputError("flat-gen needs params.family")
    spec = family_from_params(config, block)
    points = sample_points(config.box, config.samples, config.seed)
    N = points.shape[0]

    X11, X31 = family_blocks(spec)
    D11, D31 = matrix_ext_d(X11), matrix_ext_d(X31)
    recorder.record_many("symmetry", symmetry_residuals(D11, D31, points), N)
    recorder.record_many("structure", structure_residuals(D11, D31, points), N)
    recorder.record_many("identity", family_identities(spec, points), N)

    omega = family_omega(spec, points, config.tol)
    recorder.record("flatness", flatness_residual(omega.symbolic, points), N)
    recorder.record("compatibility", compatibility_residual(omega, points), N)

    J = paracomplex_from_frame(FrameField.identity(spec.n, spec.m), spec.eps)
    report = factorization_check(omega, J, points, mu=spec.mu, tol=config.tol)
    recorder.record("factorization", report.residual, N)
    recorder.record("omega condition", report.condition_residual, N)
    recorder.record("alpha", max_abs(report.alpha - family_alpha(spec).evaluate(points)), N)
    recorder.record("square norm", abs(square_norm(omega, J, points)), N)
    generators = report.N.generators(points[:1])[0]
    recorder.record("walker", walker_residual(omega, generators, points), N)
    if spec.n == 1:
        recorder.record("horizontality", horizontality_residual(omega, spec.eps, points), N)

    _integration_stages(recorder, config, omega, family_potential(spec), mapping_param(config.params, "integrate"))
    recorder.note(family=spec.to_dict(), factorization=report.to_dict())
    return recorder.report()


# --- pair-gen ------------------------------------------------------------------


def _side_label(eps: int) -> str:
    return "+" if eps > 0 else "-"


def _pair_residuals(spec: PairSpec, points: np.ndarray, tol: float, validation: np.ndarray) -> Dict[str, float]:
    """Every certificate of one pair connection, keyed by stage name."""
    omega = pair_omega(spec, points, tol, validation)
    W = omega.coefficients(points)
    out: Dict[str, float] = {
        "flatness": flatness_residual(omega.symbolic, points),
        "compatibility": compatibility_residual(omega, points),
    }
    for eps in (1, -1):
        side = _side_label(eps)
        light = fully_lightlike_check(omega, eps, points, tol)
        out[f"lightlike {side}"] = max(light.null_residual, light.section_residual or 0.0) if light.holds else np.inf
        out[f"lightlike {side} mu"] = 0.0 if light.mu == expected_side_mu(spec, eps) else np.inf
        expected = expected_alpha(spec, eps).evaluate(points)
        out[f"alpha {side}"] = max_abs(light.alpha - expected) if light.alpha is not None else np.inf

        J = paracomplex_from_frame(FrameField.identity(1, spec.m), eps)
        factor = factorization_check(omega, J, points, tol=tol)
        out[f"factorization {side}"] = max(factor.residual, factor.condition_residual)
        out[f"square norm {side}"] = abs(square_norm(omega, J, points))
        out[f"walker {side}"] = walker_residual(omega, factor.N.generators(points[:1])[0], points)
        out[f"horizontality {side}"] = horizontality_residual(omega, eps, points)

        w = omega.symbolic
        single = single_eps_omega(
            spec.f(eps), spec.g(eps), w.form(2, 1), w.form(3, 1), w.form(3, 2),
            expected_side_mu(spec, eps), eps, points, tol, validation=validation,
        )
        out[f"single side {side}"] = single.residual
        out[f"single side {side} completion"] = max_abs(single.omega.coefficients(points) - W)
    out["branch"] = 0.0 if branch_classify(omega, spec.mu, points, tol) == spec.branch else np.inf
    return out


def _pair_specs(config: RunConfig) -> List[PairSpec]:
    if "pair" in config.params:
        return [pair_from_params(config, config.params["pair"])]
    block = config.params.get("random")
    if not isinstance(block, Mapping):
        raise InvalidInputError("pair-gen needs params.pair or params.random")
    branch = block.get("branch", "A")
    if branch not in BRANCHES:
        raise InvalidInputError(f"branch must be one of {BRANCHES}, got {branch!r}")
    mu = sign_param(block, "mu")
    count = int_param(block, "count", 20, minimum=1)
    return [random_pair_spec(draw_rng(config.seed, i), config.m, branch, mu) for i in range(count)]


def run_pair_gen(config: RunConfig) -> VerificationReport:
    """Pair connections with both time-like sections fully light-like.

    params: pair {f+, f-, g+, g-, branch, mu} or random {count, branch, mu}.
    With m = 4 the run covers the tangent bundle case, the walker stages
    then certify both distributions.
    """
    if config.n != 1:
        raise InvalidInputError("pair-gen needs n = 1")
    recorder = StageRecorder("pair-gen", config.tol)
    specs = _pair_specs(config)
    points = sample_points(config.box, config.samples, config.seed)
    validation = validation_points(config.box, config.seed)
    worst: Dict[str, float] = {}
    for spec in specs:
        for name, value in _pair_residuals(spec, points, config.tol, validation).items():
            worst[name] = max(worst.get(name, 0.0), value)
    for name, value in worst.items():
        recorder.record(name, value, points.shape[0] * len(specs))
    recorder.note(
        specs=[spec.to_dict() for spec in specs],
        tangent_bundle=config.m == 4,
        validation_samples=validation.shape[0],
        certified_on="sample set",
    )
    return recorder.report()


def run_classify(config: RunConfig) -> VerificationReport:
    """Branch label of a connection whose sections Omega_(+-,2) both have light-like derivative.

    params: omega, mu (defaults to the pair's mu), expect (optional branch label).
    """
    if config.n != 1:
        raise InvalidInputError("classify needs n = 1")
    recorder = StageRecorder("classify", config.tol)
    points = sample_points(config.box, config.samples, config.seed)
    source = connection_from_config(config, points)
    default_mu = source.pair.mu if source.pair is not None else 1
    mu = sign_param(config.params, "mu", default_mu)
    N = points.shape[0]

    for eps in (1, -1):
        light = fully_lightlike_check(source.omega, eps, points, config.tol)
        residual = max(light.null_residual, light.section_residual or 0.0) if light.holds else np.inf
        recorder.record(f"lightlike {_side_label(eps)}", residual, N)
    label = branch_classify(source.omega, mu, points, config.tol)
    expect: Optional[str] = config.params.get("expect")
    if expect is not None:
        recorder.require("branch", label == expect, N)
    recorder.note(branch=label, mu=mu, source=source.describe())
    return recorder.report()
