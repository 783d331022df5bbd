"""RunConfig JSON documents and the domain objects they describe."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import numpy as np

from src.conf.config import settings
from src.core.connection import ConnectionForm, compatible_completion
from src.core.expr import Expr, parse, parse_bindings
from src.core.exterior import DifferentialForm, MatrixForm
from src.core.generators import family_omega, family_potential, pair_omega
from src.domain.errors import InvalidInputError, ParseError
from src.domain.models import FAMILY_FUNCTIONS, FlatFamilySpec, PairSpec, RunConfig
from src.utils.sampling import parse_box, validation_points

logger = logging.getLogger(__name__)

COMMANDS = (
    "so-check",
    "group-sample",
    "structure-check",
    "factorize",
    "walker-check",
    "norm",
    "flat-gen",
    "pair-gen",
    "classify",
    "gauss-verify",
)

_KEYS = {"command", "m", "n", "expressions", "matrices", "box", "samples", "seed", "tol", "params"}


def _int(data: Mapping[str, Any], key: str, default: int, minimum: int) -> int:
    value = data.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidInputError(f"{key!r} must be an integer, got {value!r}")
    if value < minimum:
        raise InvalidInputError(f"{key!r} must be >= {minimum}, got {value}")
    return value


def int_param(params: Mapping[str, Any], key: str, default: int, minimum: int = 0) -> int:
    """An integer entry of params; floats with an integral value are accepted."""
    value = params.get(key, default)
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    return _int({key: value}, key, default, minimum)


def float_param(params: Mapping[str, Any], key: str, default: float) -> float:
    value = params.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
        raise InvalidInputError(f"{key!r} must be a finite number, got {value!r}")
    return float(value)


def mapping_param(params: Mapping[str, Any], key: str) -> Mapping[str, Any]:
    value = params.get(key, {})
    if not isinstance(value, Mapping):
        raise InvalidInputError(f"params.{key} must be a JSON object, got {value!r}")
    return value


def float_array(value: Any, what: str, ndim: Optional[int] = None) -> np.ndarray:
    """A finite float array from nested JSON lists."""
    try:
        array = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{what} must be a rectangular array of numbers: {exc}") from exc
    if ndim is not None and array.ndim != ndim:
        raise InvalidInputError(f"{what} must be a {ndim}-d array, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise InvalidInputError(f"{what} must be finite")
    return array


def config_from_dict(
    data: Mapping[str, Any],
    command: Optional[str] = None,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
) -> RunConfig:
    """Validate a parsed document; command, seed and tol override the document."""
    if not isinstance(data, Mapping):
        raise InvalidInputError("config document must be a JSON object")
    unknown = sorted(set(data) - _KEYS)
    if unknown:
        raise InvalidInputError(f"unknown config keys {unknown}")

    command = command or data.get("command")
    if command not in COMMANDS:
        raise InvalidInputError(f"unknown command {command!r}; expected one of {COMMANDS}")
    if data.get("command") not in (None, command):
        logger.warning("config names command %s, running %s", data["command"], command)

    m = _int(data, "m", 1, 1)
    n = _int(data, "n", 1, 1)
    samples = _int(data, "samples", settings.SAMPLES, 1)
    seed = _int(data, "seed", settings.SEED, 0) if seed is None else seed

    if tol is None:
        tol = data.get("tol", settings.TOL)
    if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not np.isfinite(tol) or tol <= 0:
        raise InvalidInputError(f"tol must be a positive number, got {tol!r}")

    expressions = data.get("expressions", {})
    if not isinstance(expressions, Mapping) or not all(isinstance(v, str) for v in expressions.values()):
        raise InvalidInputError("expressions must map names to source text")
    matrices = data.get("matrices", {})
    if not isinstance(matrices, Mapping):
        raise InvalidInputError("matrices must map names to nested arrays")
    arrays = {name: float_array(value, f"matrix {name!r}", ndim=2) for name, value in matrices.items()}
    params = data.get("params", {})
    if not isinstance(params, Mapping):
        raise InvalidInputError("params must be a JSON object")

    return RunConfig(
        command=command,
        m=m,
        n=n,
        expressions=dict(expressions),
        matrices={name: array.tolist() for name, array in arrays.items()},
        box=parse_box(data.get("box"), m),
        samples=samples,
        seed=seed,
        tol=float(tol),
        params=dict(params),
    )


def load_config(
    path: Path,
    command: Optional[str] = None,
    seed: Optional[int] = None,
    tol: Optional[float] = None,
) -> RunConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise InvalidInputError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ParseError(f"config {path} is not UTF-8", exc.start) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"config {path}: {exc.msg}", exc.pos) from exc
    config = config_from_dict(data, command, seed, tol)
    logger.info("Loaded %s config from %s (m=%d, n=%d, seed=%d)", config.command, path, config.m, config.n, config.seed)
    return config


# --- bound names ------------------------------------------------------------


def bound_expressions(config: RunConfig) -> Dict[str, Expr]:
    return parse_bindings(config.expressions, config.m)


def lookup(exprs: Mapping[str, Expr], name: Any, config: RunConfig) -> Expr:
    """A bound expression by name, or inline source text when the name is unbound."""
    if not isinstance(name, str):
        raise InvalidInputError(f"expression reference must be a string, got {name!r}")
    if name in exprs:
        return exprs[name]
    try:
        return parse(name, config.m)
    except ParseError as exc:
        raise InvalidInputError(f"{name!r} is neither a bound expression nor valid source text: {exc}") from exc


def sign_param(params: Mapping[str, Any], key: str, default: int = 1) -> int:
    value = params.get(key, default)
    if value not in (1, -1):
        raise InvalidInputError(f"{key!r} must be +1 or -1, got {value!r}")
    return int(value)


def matrix_param(config: RunConfig, value: Any) -> np.ndarray:
    """A matrix literal, or the name of one in config.matrices."""
    if isinstance(value, str):
        return config.matrix(value)
    return float_array(value, "matrix parameter", ndim=2)


def family_from_params(config: RunConfig, block: Mapping[str, Any]) -> FlatFamilySpec:
    """{"variant", "f", "functions": {phi: name}, "C0", "eps", "mu"}; names default to themselves."""
    if not isinstance(block, Mapping):
        raise InvalidInputError(f"family block must be a JSON object, got {block!r}")
    exprs = bound_expressions(config)
    variant = block.get("variant")
    if variant not in FAMILY_FUNCTIONS:
        raise InvalidInputError(f"unknown family {variant!r}")
    refs = mapping_param(block, "functions")
    functions = {name: lookup(exprs, refs.get(name, name), config) for name in FAMILY_FUNCTIONS[variant]}
    C0 = block.get("C0", "C0" if variant in ("symmetric-potential", "skew-potential") else None)
    return FlatFamilySpec(
        variant=variant,
        n=config.n,
        m=config.m,
        f=lookup(exprs, block.get("f", "f"), config),
        functions=functions,
        C0=None if C0 is None else matrix_param(config, C0),
        eps=sign_param(block, "eps"),
        mu=sign_param(block, "mu"),
    )


def pair_from_params(config: RunConfig, block: Mapping[str, Any]) -> PairSpec:
    """{"f+", "f-", "g+", "g-", "branch", "mu"}; names default to fp, fm, gp, gm."""
    if not isinstance(block, Mapping):
        raise InvalidInputError(f"pair block must be a JSON object, got {block!r}")
    exprs = bound_expressions(config)
    return PairSpec(
        f_plus=lookup(exprs, block.get("f+", "fp"), config),
        f_minus=lookup(exprs, block.get("f-", "fm"), config),
        g_plus=lookup(exprs, block.get("g+", "gp"), config),
        g_minus=lookup(exprs, block.get("g-", "gm"), config),
        m=config.m,
        branch=block.get("branch", "A"),
        mu=sign_param(block, "mu"),
    )


def omega_from_entries(config: RunConfig, block: Mapping[str, Any]) -> ConnectionForm:
    """Explicit entries [{"row", "col", "coeffs": {"k": expr}}], 1-based, coefficients of dx_k."""
    exprs = bound_expressions(config)
    entries = block.get("entries")
    if not isinstance(entries, list):
        raise InvalidInputError("omega.entries must be a list")
    size = 4 * config.n
    forms: Dict[tuple, DifferentialForm] = {}
    for entry in entries:
        try:
            row, col, coeffs = int(entry["row"]), int(entry["col"]), entry["coeffs"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"omega entry {entry!r} needs row, col and coeffs") from exc
        if not isinstance(coeffs, Mapping):
            raise InvalidInputError(f"coeffs of entry ({row}, {col}) must be an object")
        parsed = {}
        for key, text in coeffs.items():
            try:
                k = int(key)
            except ValueError as exc:
                raise InvalidInputError(f"coefficient key {key!r} must be a direction index 1..{config.m}") from exc
            if not 1 <= k <= config.m:
                raise InvalidInputError(f"direction dx{k} outside R^{config.m}")
            parsed[k] = lookup(exprs, text, config)
        forms[(row, col)] = DifferentialForm.one_form(parsed, config.m)
    lower = MatrixForm.from_entries(size, size, 1, config.m, forms)
    omega = compatible_completion(lower) if block.get("complete", True) else lower
    return ConnectionForm(symbolic=omega)


@dataclass
class ConnectionSource:
    omega: ConnectionForm
    kind: str
    family: Optional[FlatFamilySpec] = None
    pair: Optional[PairSpec] = None
    potential: Optional[MatrixForm] = None

    def describe(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind}
        if self.family is not None:
            out["family"] = self.family.to_dict()
        if self.pair is not None:
            out["pair"] = self.pair.to_dict()
        return out


def connection_from_config(config: RunConfig, points: np.ndarray) -> ConnectionSource:
    """The connection form named by params.omega: a family, a pair, or explicit entries."""
    block = config.params.get("omega")
    if not isinstance(block, Mapping):
        raise InvalidInputError("params.omega must describe a family, a pair or explicit entries")
    if "family" in block:
        spec = family_from_params(config, block["family"])
        return ConnectionSource(family_omega(spec, points, config.tol), "family", family=spec, potential=family_potential(spec))
    if "pair" in block:
        if config.n != 1:
            raise InvalidInputError("pair connections need n = 1")
        spec = pair_from_params(config, block["pair"])
        validation = validation_points(config.box, config.seed)
        return ConnectionSource(pair_omega(spec, points, config.tol, validation), "pair", pair=spec)
    if "entries" in block:
        return ConnectionSource(omega_from_entries(config, block), "entries")
    raise InvalidInputError("params.omega needs one of 'family', 'pair' or 'entries'")
