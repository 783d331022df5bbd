from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.core.expr import Expr, print_expr
from src.domain.errors import InvalidInputError

FAMILY_VARIANTS = ("symmetric-potential", "tridiagonal", "skew-potential", "quaternion-blocks")

FAMILY_FUNCTIONS: Dict[str, Tuple[str, ...]] = {
    "symmetric-potential": ("phi",),
    "tridiagonal": ("f1", "f2"),
    "skew-potential": ("psi",),
    "quaternion-blocks": ("a1", "b1", "a2", "b2"),
}

BRANCHES = ("A", "B")


def _sign(value: Any, name: str) -> int:
    if value not in (1, -1):
        raise InvalidInputError(f"{name} must be +1 or -1, got {value!r}")
    return int(value)


@dataclass
class FlatFamilySpec:
    """One of the explicit flat connection families omega = dx.

    `functions` binds the family's scalar functions (phi; f1, f2; psi;
    a1, b1, a2, b2). eps and mu select the sign variant reached by
    diagonal conjugation.
    """

    variant: str
    n: int
    m: int
    f: Expr
    functions: Dict[str, Expr] = field(default_factory=dict)
    C0: Optional[np.ndarray] = None
    eps: int = 1
    mu: int = 1

    def __post_init__(self) -> None:
        if self.variant not in FAMILY_VARIANTS:
            raise InvalidInputError(f"unknown family {self.variant!r}; expected one of {FAMILY_VARIANTS}")
        if self.n < 1 or self.m < 1:
            raise InvalidInputError("n and m must be positive")
        self.eps = _sign(self.eps, "eps")
        self.mu = _sign(self.mu, "mu")
        missing = [name for name in FAMILY_FUNCTIONS[self.variant] if name not in self.functions]
        if missing:
            raise InvalidInputError(f"family {self.variant} needs functions {missing}")
        if self.variant == "quaternion-blocks" and self.n % 4:
            raise InvalidInputError(f"quaternion blocks need n = 4p, got n = {self.n}")
        if self.variant in ("symmetric-potential", "skew-potential"):
            if self.C0 is None:
                raise InvalidInputError(f"family {self.variant} needs a constant matrix C0")
            self.C0 = np.asarray(self.C0, dtype=float)
            if self.C0.shape != (self.n, self.n):
                raise InvalidInputError(f"C0 must be {self.n}x{self.n}, got {self.C0.shape}")
            sign = 1.0 if self.variant == "symmetric-potential" else -1.0
            if not np.array_equal(self.C0.T, sign * self.C0):
                kind = "symmetric" if sign > 0 else "skew-symmetric"
                raise InvalidInputError(f"C0 must be {kind}")

    @property
    def p(self) -> int:
        return self.n // 4

    def to_dict(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "n": self.n,
            "m": self.m,
            "f": print_expr(self.f),
            "functions": {name: print_expr(e) for name, e in sorted(self.functions.items())},
            "C0": None if self.C0 is None else self.C0.tolist(),
            "eps": self.eps,
            "mu": self.mu,
        }


@dataclass
class PairSpec:
    """Functions f+, f-, g+, g- with dg+ and dg- nowhere zero, plus the branch and mu."""

    f_plus: Expr
    f_minus: Expr
    g_plus: Expr
    g_minus: Expr
    m: int
    branch: str = "A"
    mu: int = 1

    def __post_init__(self) -> None:
        if self.branch not in BRANCHES:
            raise InvalidInputError(f"branch must be one of {BRANCHES}, got {self.branch!r}")
        self.mu = _sign(self.mu, "mu")
        if self.m < 1:
            raise InvalidInputError("m must be positive")

    def f(self, eps: int) -> Expr:
        return self.f_plus if eps > 0 else self.f_minus

    def g(self, eps: int) -> Expr:
        return self.g_plus if eps > 0 else self.g_minus

    def to_dict(self) -> Dict[str, Any]:
        return {
            "f+": print_expr(self.f_plus),
            "f-": print_expr(self.f_minus),
            "g+": print_expr(self.g_plus),
            "g-": print_expr(self.g_minus),
            "m": self.m,
            "branch": self.branch,
            "mu": self.mu,
        }


@dataclass
class RunConfig:
    command: str
    m: int
    n: int = 1
    expressions: Dict[str, str] = field(default_factory=dict)
    matrices: Dict[str, List[List[float]]] = field(default_factory=dict)
    box: List[Tuple[float, float]] = field(default_factory=list)
    samples: int = 100
    seed: int = 0
    tol: float = 1e-9
    params: Dict[str, Any] = field(default_factory=dict)

    def matrix(self, name: str) -> np.ndarray:
        if name not in self.matrices:
            raise InvalidInputError(f"matrix {name!r} is not bound in the config")
        return np.asarray(self.matrices[name], dtype=float)


@dataclass
class StageResult:
    """One named check. kind="max" passes when the residual stays within tol,
    kind="min" when the measured quantity stays at or above it."""

    name: str
    max_residual: float
    points_tested: int
    tol: float
    kind: str = "max"

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.max_residual):
            return False
        if self.kind == "min":
            return self.max_residual >= self.tol
        return self.max_residual <= self.tol

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "max_residual": self.max_residual,
            "points_tested": self.points_tested,
            "tol": self.tol,
            "kind": self.kind,
            "pass": self.passed,
        }


@dataclass
class VerificationReport:
    command: str
    stages: List[StageResult] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.stages) and all(stage.passed for stage in self.stages)

    def failing_stages(self) -> List[str]:
        return [stage.name for stage in self.stages if not stage.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "pass": self.passed,
            "stages": [stage.to_dict() for stage in self.stages],
            "metadata": dict(self.metadata),
        }

