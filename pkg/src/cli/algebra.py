"""so-check and group-sample - membership and determinant checks in SO(2n, 2n)."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.conf.config import settings
from src.core.neutral import (
    GROUP_KINDS,
    block_condition_residual,
    cross,
    p_cross_formula,
    p_matrices,
    commutes_with_lambda,
    determinant_check,
    preserves_W,
    random_group_params,
    w_membership,
    xy_block_member,
    sample_group,
    so_member,
    so_residuals,
    stabilizer_random,
)
from src.domain.errors import InvalidInputError, PreconditionError
from src.domain.models import RunConfig, VerificationReport
from src.evaluate.stages import StageRecorder, max_abs
from src.io.config_loader import int_param, matrix_param
from src.utils.sampling import draw_rng

logger = logging.getLogger(__name__)


def run_so_check(config: RunConfig) -> VerificationReport:
    """Membership of one matrix in SO(2n, 2n), and the P / P^x determinants when it preserves W."""
    recorder = StageRecorder("so-check", config.tol)
    name = config.params.get("matrix", "A")
    A = matrix_param(config, name)
    size = 4 * config.n
    if A.shape != (size, size):
        raise InvalidInputError(f"matrix must be {size}x{size} for n = {config.n}, got {A.shape}")

    metric, det = so_residuals(A)
    recorder.record("metric", metric, 1)
    recorder.record("determinant", det, 1)
    recorder.record("cross involution", max_abs(cross(cross(A)) - A), 1)

    membership = w_membership(A, config.tol)
    preserves = membership["preserves"]
    recorder.note(
        n=config.n,
        so_member=so_member(A, config.tol),
        preserves_W=preserves,
        W_membership=membership,
        cross_preserves_W=preserves_W(cross(A), config.tol),
        commutes_with_lambda=commutes_with_lambda(A, config.tol),
    )
    if config.params.get("require_W", False):
        recorder.record("W block condition", block_condition_residual(A), 1)
    if preserves:
        report = determinant_check(A, config.tol)
        P, P_cross = p_matrices(A, config.tol)
        recorder.record("det P det Px", report.product_residual, 1)
        if report.det_p_residual is not None:
            recorder.record("det P", report.det_p_residual, 1)
        recorder.record("Px closed form", max_abs(p_cross_formula(A) - P_cross), 1)
        if config.params.get("expect_p_differs", False):
            recorder.record("P differs from Px", max_abs(P - P_cross), 1, kind="min")
        recorder.note(determinants=report.to_dict())
    return recorder.report()


# --- group-sample -----------------------------------------------------------


@dataclass
class _Draw:
    category: str
    kind: str
    index: int


def _member_residuals(A: np.ndarray, tol: float) -> Dict[str, float]:
    metric, det = so_residuals(A)
    out = {
        "so": max(metric, det),
        "preserves W": block_condition_residual(A),
        "cross involution": max_abs(cross(cross(A)) - A),
        "cross preserves W": block_condition_residual(cross(A)),
    }
    try:
        P, P_cross = p_matrices(A, tol)
    except PreconditionError:
        out["P = Px"] = out["det P"] = float("inf")
    else:
        out["P = Px"] = max_abs(P - P_cross)
        out["det P"] = abs(float(np.linalg.det(P)) - 1.0)
    return out


def _random_member(kind: str, n: int, rng: np.random.Generator, tol: float) -> np.ndarray:
    return sample_group(kind, random_group_params(kind, n, rng, equal_c=True), n, tol)


def _evaluate(draw: _Draw, n: int, seed: int, kinds: Sequence[str], max_factors: int, tol: float) -> Dict[str, float]:
    rng = draw_rng(seed, draw.index)
    if draw.category == "members":
        return _member_residuals(_random_member(draw.kind, n, rng, tol), tol)
    if draw.category == "products":
        A = np.eye(4 * n)
        for _ in range(int(rng.integers(1, max_factors + 1))):
            A = A @ _random_member(str(rng.choice(list(kinds))), n, rng, tol)
        return _member_residuals(A, tol)
    if draw.kind == "C":
        params = random_group_params("C", n, rng)
        A = sample_group("C", params, n, tol)
    else:
        A = stabilizer_random(n, int(rng.integers(2**32)))
    report = determinant_check(A, tol)
    return {"det P det Px": report.product_residual}


def _plan(kinds: Sequence[str], draws: int, products: int, stabilizers: int, n: int) -> List[_Draw]:
    plan: List[_Draw] = []
    for kind in kinds:
        plan.extend(_Draw("members", kind, len(plan) + j) for j in range(draws))
    plan.extend(_Draw("products", "product", len(plan) + j) for j in range(products))
    plan.extend(_Draw("stabilizer", "projected", len(plan) + j) for j in range(stabilizers))
    if n == 1:
        plan.extend(_Draw("stabilizer", "C", len(plan) + j) for j in range(stabilizers))
    return plan


def _quarter_turn_blocks(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """X = I and Y a quarter turn in the first two coordinates."""
    X, Y = np.eye(n), np.eye(n)
    Y[:2, :2] = [[0.0, -1.0], [1.0, 0.0]]
    return X, Y


def run_group_sample(config: RunConfig, workers: Optional[int] = None) -> VerificationReport:
    """Random members of G1, G2, G3, H (and B, C for n = 1), their products and W-stabilizer draws.

    params: kinds, draws (per kind), products, max_factors, stabilizers.
    """
    recorder = StageRecorder("group-sample", config.tol)
    n = config.n
    default_kinds = GROUP_KINDS if n == 1 else ("G1", "G2", "G3", "H")
    kinds = config.params.get("kinds", default_kinds)
    if not isinstance(kinds, (list, tuple)):
        raise InvalidInputError(f"kinds must be a list of group names, got {kinds!r}")
    kinds = tuple(kinds)
    unknown = [k for k in kinds if k not in GROUP_KINDS]
    if unknown:
        raise InvalidInputError(f"unknown group kinds {unknown}; expected a subset of {GROUP_KINDS}")
    if n != 1 and any(k in ("B", "C") for k in kinds):
        raise InvalidInputError("families B and C exist for n = 1 only")
    draws = int_param(config.params, "draws", config.samples)
    products = int_param(config.params, "products", config.samples)
    stabilizers = int_param(config.params, "stabilizers", config.samples)
    max_factors = int_param(config.params, "max_factors", 3, minimum=1)
    workers = workers or settings.WORKERS

    plan = _plan(kinds, draws, products, stabilizers, n)
    logger.info("Sampling %d draws for n=%d with %d workers", len(plan), n, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(
            pool.map(lambda d: _evaluate(d, n, config.seed, kinds, max_factors, config.tol), plan)
        )

    worst: Dict[Tuple[str, str], float] = {}
    counts: Dict[Tuple[str, str], int] = {}
    for draw, residuals in zip(plan, results):
        label = draw.kind if draw.category == "members" else draw.category
        for name, value in residuals.items():
            key = (label, name)
            worst[key] = max(worst.get(key, 0.0), value)
            counts[key] = counts.get(key, 0) + 1
    for (label, name), value in worst.items():
        recorder.record(f"{label} {name}", value, counts[(label, name)])

    if n >= 2:
        A = xy_block_member(*_quarter_turn_blocks(n))
        P, P_cross = p_matrices(A, config.tol)
        recorder.record("quarter turn det P", abs(float(np.linalg.det(P)) - 1.0), 1)
        recorder.record("quarter turn P differs from Px", max_abs(P - P_cross), 1, kind="min")
    recorder.note(n=n, kinds=list(kinds), draws=draws, products=products, stabilizers=stabilizers, seed=config.seed)
    return recorder.report()
