"""gauss-verify command - conformal Gauss map of a time-like minimal surface and its lifts."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from src.conf.config import settings
from src.core.expr import parse
from src.core.gauss import (
    NullCurve,
    conformal_gauss,
    fundamental_data,
    gauss_frame_and_omega,
    shape_ops,
    surface_from_null_curves,
    verify_lifts,
)
from src.domain.errors import InvalidInputError
from src.domain.models import RunConfig, VerificationReport
from src.evaluate.stages import StageRecorder
from src.io.config_loader import int_param
from src.utils.sampling import sample_points

logger = logging.getLogger(__name__)

# the helicoid-type pair used when params.A / params.B are omitted; box u in (-1, 1), v in (0.3, pi - 0.3)
DEFAULT_A = ("sin(x1)", "-cos(x1)", "x1")
DEFAULT_B = ("-sin(x1)", "cos(x1)", "-x1")
LIFT_TOL = 1e-5


def _curve(config: RunConfig, name: str, default: Sequence[str]) -> NullCurve:
    texts = config.params.get(name, list(default))
    if not isinstance(texts, (list, tuple)) or len(texts) != 3 or not all(isinstance(t, str) for t in texts):
        raise InvalidInputError(f"params.{name} must list three expressions in x1")
    return NullCurve(tuple(parse(t, 1) for t in texts))


def run_gauss_verify(config: RunConfig) -> VerificationReport:
    """Surface, Gauss map, frame and connection form, then both light-like lifts.

    params: A, B (null curves, three expressions in x1 each), mask_min (minimum
    number of mask samples, default 1).
    """
    if config.m != 2:
        raise InvalidInputError("gauss-verify works on (u, v), set m = 2")
    recorder = StageRecorder("gauss-verify", config.tol)
    A, B = _curve(config, "A", DEFAULT_A), _curve(config, "B", DEFAULT_B)
    surface = surface_from_null_curves(A, B, config.box, tol=config.tol)
    points = sample_points(config.box, config.samples, config.seed)
    N = points.shape[0]

    for name, value in surface.residuals(points).items():
        recorder.record(f"surface {name}", value, N)
    data = fundamental_data(surface, points, config.tol)
    masked = int(np.count_nonzero(data.mask))
    mask_min = int_param(config.params, "mask_min", 1)
    recorder.record("mask samples", float(masked), N, tol=float(mask_min), kind="min")
    recorder.record(
        "intrinsic curvature",
        data.intrinsic_gap / max(1.0, float(np.max(np.abs(data.curvature)))),
        N,
        settings.FD_TOL,
    )

    gauss, residuals = conformal_gauss(surface, data, settings.FD_TOL)
    recorder.record_many("gauss", residuals, masked, settings.FD_TOL)
    shapes = shape_ops(gauss, data, settings.FD_STEP)
    recorder.record("shape closed form", shapes.closed_form_gap, masked, settings.FD_TOL)
    recorder.record("shape trace", shapes.trace, masked, settings.FD_TOL)
    recorder.record("shape A_nu", shapes.nu_norm, masked, settings.FD_TOL)
    recorder.record("nu derivative", shapes.nu_derivative, masked, LIFT_TOL)

    connection = gauss_frame_and_omega(gauss, data, settings.FD_STEP)
    recorder.record("frame gram", connection.frame.gram_residual(), masked, settings.FD_TOL)
    recorder.record("omega closed form", connection.closed_form_gap, masked, LIFT_TOL)
    recorder.record("omega compatibility", connection.compatibility, masked, LIFT_TOL)

    lifts = verify_lifts(connection, LIFT_TOL)
    recorder.record_many("lift", lifts.residuals, masked, LIFT_TOL)
    recorder.require("branch", lifts.branch == "A", masked)
    for eps, ok in sorted(lifts.walker.items(), reverse=True):
        recorder.require(f"walker {'+' if eps > 0 else '-'}", ok, masked)

    recorder.note(
        orientation=connection.frame.orientation,
        fundamental=data.to_dict(),
        shape=shapes.to_dict(),
        lifts=lifts.to_dict(),
        certified_on="mask samples",
    )
    return recorder.report()
