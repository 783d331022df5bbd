"""structure-check - nilpotent and paracomplex invariants over random admissible frames."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Optional

import numpy as np

from src.conf.config import settings
from src.core.neutral import lambda_matrix, random_group_params, sample_group
from src.core.structures import (
    FrameField,
    i_prime,
    induced_2nvector,
    lightlike_section,
    nilpotent_from_frame,
    nilpotent_from_section,
    paracomplex_from_frame,
    paracomplex_from_section,
    random_frame,
    section_from_nilpotent,
    section_from_paracomplex,
    timelike_section,
)
from src.domain.models import RunConfig, VerificationReport
from src.evaluate.stages import StageRecorder, max_abs
from src.io.config_loader import int_param
from src.utils.sampling import draw_rng

logger = logging.getLogger(__name__)

_ORIGIN = np.zeros((1, 1))
_CHANGE_KINDS = ("G1", "G2", "G3", "H")


def _admissible_change(n: int, eps: int, rng: np.random.Generator, tol: float) -> np.ndarray:
    """I' A I' for a product A of up to three W-preserving members with P = P^x."""
    A = np.eye(4 * n)
    for _ in range(int(rng.integers(1, 4))):
        kind = str(rng.choice(list(_CHANGE_KINDS)))
        A = A @ sample_group(kind, random_group_params(kind, n, rng), n, tol)
    Ip = i_prime(n, eps)
    return Ip @ A @ Ip


def _frame_residuals(index: int, n: int, seed: int, tol: float) -> Dict[str, float]:
    rng = draw_rng(seed, index)
    frame = random_frame(n, int(rng.integers(2**32)))
    out: Dict[str, float] = {}
    for eps in (1, -1):
        label = "+" if eps > 0 else "-"
        N = nilpotent_from_frame(frame, eps)
        for name, value in N.invariants(_ORIGIN, rng).items():
            out[f"nilpotent {label} {name}"] = value
        for name, value in paracomplex_from_frame(frame, eps).invariants(_ORIGIN).items():
            out[f"paracomplex {label} {name}"] = value

        E = frame.values(_ORIGIN)[0]
        changed = FrameField.constant(E @ _admissible_change(n, eps, rng, tol), 1)
        before = induced_2nvector(N, _ORIGIN)
        after = induced_2nvector(nilpotent_from_frame(changed, eps), _ORIGIN)
        out[f"2n-vector {label} invariance"] = max_abs(after - before) / max(1.0, max_abs(before))
    return out


def run_structure_check(config: RunConfig, workers: Optional[int] = None) -> VerificationReport:
    """Lambda_n, structure invariants on random frames and the n = 1 section bridges.

    params: frames (number of random frames, default samples).
    """
    recorder = StageRecorder("structure-check", config.tol)
    n = config.n
    frames = int_param(config.params, "frames", config.samples, minimum=1)
    workers = workers or settings.WORKERS

    for k in range(1, 5):
        L = lambda_matrix(k)
        recorder.record(f"lambda {k} square", max_abs(L @ L), 1)
        recorder.record(f"lambda {k} rank", abs(int(np.linalg.matrix_rank(L)) - 2 * k), 1)

    logger.info("Checking structures on %d random frames (n=%d)", frames, n)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda i: _frame_residuals(i, n, config.seed, config.tol), range(frames)))
    worst: Dict[str, float] = {}
    for residuals in results:
        for name, value in residuals.items():
            worst[name] = max(worst.get(name, 0.0), value)
    for name, value in worst.items():
        recorder.record(name, value, frames)

    if n == 1:
        for eps in (1, -1):
            label = "+" if eps > 0 else "-"
            for mu in (1, -1):
                Omega0 = lightlike_section(eps, mu)
                back = section_from_nilpotent(nilpotent_from_section(Omega0, eps, config.tol))
                recorder.record(f"light-like {label} mu={mu:+d} round trip", max_abs(back - Omega0), 1)
            Omega = timelike_section(eps)
            J = paracomplex_from_section(Omega, eps, config.tol)
            recorder.record(f"time-like {label} round trip", max_abs(section_from_paracomplex(J) - Omega), 1)
            recorder.record(f"time-like {label} square", max_abs(J @ J - np.eye(4)), 1)
    recorder.note(n=n, frames=frames, seed=config.seed)
    return recorder.report()
