from __future__ import annotations

import math
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from src.conf.config import settings
from src.domain.errors import InvalidInputError

Box = List[Tuple[float, float]]


def _bounds(lo: Any, hi: Any) -> Tuple[float, float]:
    try:
        lo, hi = float(lo), float(hi)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"box bounds must be numbers, got {lo!r}, {hi!r}") from exc
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise InvalidInputError(f"box bounds must be finite with min < max, got [{lo}, {hi}]")
    return lo, hi


def parse_box(box: Optional[Any], m: int) -> Box:
    """Normalize a box to m (lo, hi) pairs.

    Accepts None (the NT_BOX default), "lo,hi", [lo, hi] for every axis, or
    one [lo, hi] pair per axis.
    """
    if box is None:
        box = settings.BOX
    if isinstance(box, str):
        parts = box.split(",")
        if len(parts) != 2:
            raise InvalidInputError(f"box string must be 'lo,hi', got {box!r}")
        box = parts
    if isinstance(box, Sequence) and len(box) == 2 and not isinstance(box[0], (list, tuple)):
        return [_bounds(box[0], box[1])] * m
    if not isinstance(box, Sequence) or len(box) != m:
        raise InvalidInputError(f"box needs {m} [lo, hi] pairs")
    out: Box = []
    for pair in box:
        if not isinstance(pair, Sequence) or len(pair) != 2:
            raise InvalidInputError(f"box entry {pair!r} is not a [lo, hi] pair")
        out.append(_bounds(pair[0], pair[1]))
    return out


def sample_points(box: Box, count: int, seed: int) -> np.ndarray:
    """count uniform points in the box, shape (count, m)."""
    if count < 1:
        raise InvalidInputError(f"sample count must be positive, got {count}")
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return lo + rng.uniform(0.0, 1.0, size=(count, len(box))) * (hi - lo)


def center(box: Box) -> np.ndarray:
    return np.array([(lo + hi) / 2.0 for lo, hi in box])


def draw_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for draw `index`, so parallel draws do not depend on order."""
    return np.random.default_rng([seed, index])


# stream index of the validation grid, distinct from the run samples
_VALIDATION_STREAM = 7919


def validation_points(box: Box, seed: int, count: Optional[int] = None) -> np.ndarray:
    """Seeded grid of NT_VALIDATION_SAMPLES points for nowhere-zero checks."""
    count = settings.VALIDATION_SAMPLES if count is None else count
    if count < 1:
        raise InvalidInputError(f"validation sample count must be positive, got {count}")
    rng = np.random.default_rng([seed, _VALIDATION_STREAM])
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return lo + rng.uniform(0.0, 1.0, size=(count, len(box))) * (hi - lo)
