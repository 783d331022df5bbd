"""Command dispatch - config in, VerificationReport out."""

from __future__ import annotations

import logging
from typing import Callable, Dict, Optional

from src.cli.algebra import run_group_sample, run_so_check
from src.cli.connection import run_factorize, run_norm, run_walker_check
from src.cli.gauss import run_gauss_verify
from src.cli.generators import run_classify, run_flat_gen, run_pair_gen
from src.cli.structures import run_structure_check
from src.domain.errors import InvalidInputError
from src.domain.models import RunConfig, VerificationReport

logger = logging.getLogger(__name__)

Runner = Callable[[RunConfig], VerificationReport]

RUNNERS: Dict[str, Runner] = {
    "so-check": run_so_check,
    "factorize": run_factorize,
    "walker-check": run_walker_check,
    "norm": run_norm,
    "flat-gen": run_flat_gen,
    "pair-gen": run_pair_gen,
    "classify": run_classify,
    "gauss-verify": run_gauss_verify,
}

# commands that fan out over a thread pool
POOLED: Dict[str, Callable[..., VerificationReport]] = {
    "group-sample": run_group_sample,
    "structure-check": run_structure_check,
}


def run(config: RunConfig, workers: Optional[int] = None) -> VerificationReport:
    if config.command in POOLED:
        return POOLED[config.command](config, workers=workers)
    if config.command not in RUNNERS:
        raise InvalidInputError(f"no runner for command {config.command!r}")
    logger.debug("Running %s with %d samples", config.command, config.samples)
    return RUNNERS[config.command](config)
