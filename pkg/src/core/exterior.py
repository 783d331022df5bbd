"""Differential forms on R^m with Expr coefficients and matrix-valued forms.

Coefficients are keyed by strictly increasing index tuples (1-based), so
dx1^dx3 is the key (1, 3). Zero coefficients are never stored.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.expr import (
    ONE,
    ZERO,
    Constant,
    Expr,
    ExprLike,
    add,
    as_expr,
    evaluate_many,
    is_zero,
    mul,
    neg,
    partial,
    sub,
)
from src.domain.errors import InvalidInputError, PreconditionError

logger = logging.getLogger(__name__)

Key = Tuple[int, ...]


def basis_keys(m: int, degree: int) -> List[Key]:
    return list(itertools.combinations(range(1, m + 1), degree))


def _merge_keys(a: Key, b: Key) -> Tuple[Optional[Key], int]:
    if set(a) & set(b):
        return None, 0
    merged = a + b
    inversions = sum(
        1
        for i in range(len(merged))
        for j in range(i + 1, len(merged))
        if merged[i] > merged[j]
    )
    return tuple(sorted(merged)), -1 if inversions % 2 else 1


@dataclass(frozen=True)
class DifferentialForm:
    degree: int
    m: int
    coeffs: Mapping[Key, Expr] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.degree < 0 or self.m < 1:
            raise InvalidInputError(f"invalid form degree {self.degree} / dimension {self.m}")
        cleaned: Dict[Key, Expr] = {}
        for key, coeff in self.coeffs.items():
            key = tuple(int(i) for i in key)
            if len(key) != self.degree:
                raise InvalidInputError(f"key {key} does not match degree {self.degree}")
            if any(b <= a for a, b in zip(key, key[1:])):
                raise InvalidInputError(f"key {key} is not strictly increasing")
            if key and (key[0] < 1 or key[-1] > self.m):
                raise InvalidInputError(f"key {key} outside [1, {self.m}]")
            coeff = as_expr(coeff)
            if not is_zero(coeff):
                cleaned[key] = coeff
        object.__setattr__(self, "coeffs", cleaned)

    @classmethod
    def zero(cls, degree: int, m: int) -> "DifferentialForm":
        return cls(degree, m, {})

    @classmethod
    def scalar(cls, expr: ExprLike, m: int) -> "DifferentialForm":
        return cls(0, m, {(): as_expr(expr)})

    @classmethod
    def dx(cls, k: int, m: int, coeff: ExprLike = 1.0) -> "DifferentialForm":
        return cls(1, m, {(k,): as_expr(coeff)})

    @classmethod
    def one_form(cls, coeffs: Mapping[int, ExprLike], m: int) -> "DifferentialForm":
        return cls(1, m, {(k,): as_expr(c) for k, c in coeffs.items()})

    @classmethod
    def differential(cls, expr: ExprLike, m: int) -> "DifferentialForm":
        return ext_d(cls.scalar(expr, m))

    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, key: Key) -> Expr:
        return self.coeffs.get(tuple(key), ZERO)

    def _check_compatible(self, other: "DifferentialForm") -> None:
        if self.m != other.m:
            raise InvalidInputError(f"ambient dimension mismatch: {self.m} vs {other.m}")
        if self.degree != other.degree:
            raise InvalidInputError(f"degree mismatch: {self.degree} vs {other.degree}")

    def __add__(self, other: "DifferentialForm") -> "DifferentialForm":
        self._check_compatible(other)
        coeffs = dict(self.coeffs)
        for key, coeff in other.coeffs.items():
            coeffs[key] = add(coeffs.get(key, ZERO), coeff)
        return DifferentialForm(self.degree, self.m, coeffs)

    def __sub__(self, other: "DifferentialForm") -> "DifferentialForm":
        self._check_compatible(other)
        coeffs = dict(self.coeffs)
        for key, coeff in other.coeffs.items():
            coeffs[key] = sub(coeffs.get(key, ZERO), coeff)
        return DifferentialForm(self.degree, self.m, coeffs)

    def __neg__(self) -> "DifferentialForm":
        return DifferentialForm(self.degree, self.m, {k: neg(c) for k, c in self.coeffs.items()})

    def scale(self, factor: ExprLike) -> "DifferentialForm":
        factor = as_expr(factor)
        return DifferentialForm(self.degree, self.m, {k: mul(factor, c) for k, c in self.coeffs.items()})

    def __mul__(self, factor: ExprLike) -> "DifferentialForm":
        return self.scale(factor)

    __rmul__ = __mul__

    def evaluate(self, points: np.ndarray, cache: Optional[Dict[int, np.ndarray]] = None) -> np.ndarray:
        """Coefficients over the sorted basis of p-tuples.

        Returns:
            Array of shape (N, C(m, p)).
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        keys = basis_keys(self.m, self.degree)
        out = np.zeros((points.shape[0], len(keys)))
        cache = {} if cache is None else cache
        for idx, key in enumerate(keys):
            coeff = self.coeffs.get(key)
            if coeff is not None:
                out[:, idx] = evaluate_many(coeff, points, cache)
        return out

    def to_dict(self) -> Dict[str, str]:
        return {",".join(map(str, k)): c.to_text() for k, c in sorted(self.coeffs.items())}


def wedge(F: DifferentialForm, G: DifferentialForm) -> DifferentialForm:
    """Exterior product F ^ G of degree p + q."""
    if F.m != G.m:
        raise InvalidInputError(f"ambient dimension mismatch: {F.m} vs {G.m}")
    degree = F.degree + G.degree
    if degree > F.m:
        return DifferentialForm.zero(degree, F.m)
    coeffs: Dict[Key, Expr] = {}
    for ka, ca in F.coeffs.items():
        for kb, cb in G.coeffs.items():
            key, sign = _merge_keys(ka, kb)
            if key is None:
                continue
            term = mul(ca, cb)
            coeffs[key] = add(coeffs.get(key, ZERO), term) if sign > 0 else sub(coeffs.get(key, ZERO), term)
    return DifferentialForm(degree, F.m, coeffs)


def ext_d(F: DifferentialForm) -> DifferentialForm:
    """Exterior derivative d(c dx_I) = sum_k dc/dx_k dx_k ^ dx_I."""
    degree = F.degree + 1
    if degree > F.m:
        return DifferentialForm.zero(degree, F.m)
    coeffs: Dict[Key, Expr] = {}
    for key, coeff in F.coeffs.items():
        for k in range(1, F.m + 1):
            if k in key:
                continue
            derivative = partial(coeff, k)
            if is_zero(derivative):
                continue
            new_key = tuple(sorted(key + (k,)))
            before = sum(1 for i in key if i < k)
            current = coeffs.get(new_key, ZERO)
            coeffs[new_key] = sub(current, derivative) if before % 2 else add(current, derivative)
    return DifferentialForm(degree, F.m, coeffs)


Grid = Tuple[Tuple[DifferentialForm, ...], ...]


@dataclass(frozen=True)
class MatrixForm:
    """r x c grid of differential forms of a common degree.

    Entry (i, j) with 0-based indices; ``form(i, j)`` reads the 1-based
    upper/lower index convention omega^i_j (row i, column j).
    """

    entries: Grid

    def __post_init__(self) -> None:
        grid = tuple(tuple(row) for row in self.entries)
        if not grid or not grid[0]:
            raise InvalidInputError("matrix form must have at least one entry")
        cols = len(grid[0])
        if any(len(row) != cols for row in grid):
            raise InvalidInputError("ragged matrix form")
        first = grid[0][0]
        for row in grid:
            for entry in row:
                if entry.degree != first.degree or entry.m != first.m:
                    raise InvalidInputError("matrix form entries must share degree and dimension")
        object.__setattr__(self, "entries", grid)

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @property
    def degree(self) -> int:
        return self.entries[0][0].degree

    @property
    def m(self) -> int:
        return self.entries[0][0].m

    def __getitem__(self, index: Tuple[int, int]) -> DifferentialForm:
        i, j = index
        return self.entries[i][j]

    def form(self, i: int, j: int) -> DifferentialForm:
        return self.entries[i - 1][j - 1]

    @classmethod
    def zeros(cls, rows: int, cols: int, degree: int, m: int) -> "MatrixForm":
        zero = DifferentialForm.zero(degree, m)
        return cls(tuple(tuple(zero for _ in range(cols)) for _ in range(rows)))

    @classmethod
    def from_entries(
        cls,
        rows: int,
        cols: int,
        degree: int,
        m: int,
        entries: Mapping[Tuple[int, int], DifferentialForm],
    ) -> "MatrixForm":
        """Build from a sparse 1-based {(i, j): form} map."""
        zero = DifferentialForm.zero(degree, m)
        grid = [[zero] * cols for _ in range(rows)]
        for (i, j), form in entries.items():
            if not (1 <= i <= rows and 1 <= j <= cols):
                raise InvalidInputError(f"entry ({i}, {j}) outside {rows}x{cols}")
            grid[i - 1][j - 1] = form
        return cls(tuple(tuple(row) for row in grid))

    @classmethod
    def from_scalars(cls, exprs: Sequence[Sequence[ExprLike]], m: int) -> "MatrixForm":
        return cls(tuple(tuple(DifferentialForm.scalar(e, m) for e in row) for row in exprs))

    @classmethod
    def constant(cls, matrix: np.ndarray, m: int) -> "MatrixForm":
        matrix = np.asarray(matrix, dtype=float)
        return cls.from_scalars([[Constant(float(v)) for v in row] for row in matrix], m)

    @classmethod
    def identity(cls, size: int, m: int) -> "MatrixForm":
        return cls.constant(np.eye(size), m)

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence["MatrixForm"]]) -> "MatrixForm":
        rows: List[Tuple[DifferentialForm, ...]] = []
        for block_row in blocks:
            height = block_row[0].rows
            if any(block.rows != height for block in block_row):
                raise InvalidInputError("block heights differ within a block row")
            for r in range(height):
                rows.append(tuple(itertools.chain.from_iterable(block.entries[r] for block in block_row)))
        return cls(tuple(rows))

    def block(self, i: int, j: int, size: int) -> "MatrixForm":
        """The 1-based (i, j) block of side `size`."""
        r0, c0 = (i - 1) * size, (j - 1) * size
        return MatrixForm(tuple(tuple(self.entries[r][c0 : c0 + size]) for r in range(r0, r0 + size)))

    def transpose(self) -> "MatrixForm":
        return MatrixForm(tuple(zip(*self.entries)))

    def _check_shape(self, other: "MatrixForm") -> None:
        if self.shape != other.shape:
            raise InvalidInputError(f"shape mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other: "MatrixForm") -> "MatrixForm":
        self._check_shape(other)
        return MatrixForm(
            tuple(tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(self.entries, other.entries))
        )

    def __sub__(self, other: "MatrixForm") -> "MatrixForm":
        self._check_shape(other)
        return MatrixForm(
            tuple(tuple(a - b for a, b in zip(ra, rb)) for ra, rb in zip(self.entries, other.entries))
        )

    def __neg__(self) -> "MatrixForm":
        return MatrixForm(tuple(tuple(-a for a in row) for row in self.entries))

    def scale(self, factor: ExprLike) -> "MatrixForm":
        return MatrixForm(tuple(tuple(a.scale(factor) for a in row) for row in self.entries))

    def map(self, fn) -> "MatrixForm":
        return MatrixForm(tuple(tuple(fn(a) for a in row) for row in self.entries))

    def is_zero(self) -> bool:
        return all(entry.is_zero() for row in self.entries for entry in row)

    def evaluate(self, points: np.ndarray, cache: Optional[Dict[int, np.ndarray]] = None) -> np.ndarray:
        """Coefficient array of shape (N, rows, cols, C(m, degree))."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        cache = {} if cache is None else cache
        keys = basis_keys(self.m, self.degree)
        out = np.zeros((points.shape[0], self.rows, self.cols, len(keys)))
        for i, row in enumerate(self.entries):
            for j, entry in enumerate(row):
                if not entry.is_zero():
                    out[:, i, j, :] = entry.evaluate(points, cache)
        return out

    def values(self, points: np.ndarray) -> np.ndarray:
        """Matrix values of a degree-0 form, shape (N, rows, cols)."""
        if self.degree != 0:
            raise InvalidInputError("values() needs a degree-0 matrix form")
        return self.evaluate(points)[..., 0]


def mwedge(A: MatrixForm, B: MatrixForm) -> MatrixForm:
    """Matrix product with entry-wise wedge: (A^B)_ik = sum_j A_ij ^ B_jk."""
    if A.cols != B.rows:
        raise InvalidInputError(f"inner dimensions differ: {A.shape} vs {B.shape}")
    if A.m != B.m:
        raise InvalidInputError(f"ambient dimension mismatch: {A.m} vs {B.m}")
    degree = A.degree + B.degree
    rows = []
    for i in range(A.rows):
        row = []
        for k in range(B.cols):
            total = DifferentialForm.zero(degree, A.m)
            for j in range(A.cols):
                a, b = A.entries[i][j], B.entries[j][k]
                if a.is_zero() or b.is_zero():
                    continue
                total = total + wedge(a, b)
            row.append(total)
        rows.append(tuple(row))
    return MatrixForm(tuple(rows))


def matrix_ext_d(A: MatrixForm) -> MatrixForm:
    return A.map(ext_d)


def coefficient_tensor(omega: MatrixForm, points: np.ndarray) -> np.ndarray:
    """dx_k coefficient matrices of a matrix 1-form, shape (N, r, c, m)."""
    if omega.degree != 1:
        raise InvalidInputError("coefficient_tensor needs a matrix 1-form")
    return omega.evaluate(points)


def derivative_tensor(omega: MatrixForm, points: np.ndarray) -> np.ndarray:
    """Partial derivatives of the coefficients: [..., k, l] = d/dx_l of omega_k."""
    if omega.degree != 1:
        raise InvalidInputError("derivative_tensor needs a matrix 1-form")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    m = omega.m
    out = np.zeros((points.shape[0], omega.rows, omega.cols, m, m))
    derivatives: List[Tuple[int, int, int, int, Expr]] = []
    for i, row in enumerate(omega.entries):
        for j, entry in enumerate(row):
            for (k,), coeff in entry.coeffs.items():
                for l in range(1, m + 1):
                    d = partial(coeff, l)
                    if not is_zero(d):
                        derivatives.append((i, j, k - 1, l - 1, d))
    # every derivative tree stays referenced by `derivatives` while the cache lives
    cache: Dict[int, np.ndarray] = {}
    for i, j, k, l, d in derivatives:
        out[:, i, j, k, l] = evaluate_many(d, points, cache)
    return out


def curvature_tensor(omega: MatrixForm, points: np.ndarray) -> np.ndarray:
    """Coefficients of d(omega) + omega^omega on dx_k ^ dx_l, shape (N, r, c, m, m).

    Entry [..., k, l] = d_k omega_l - d_l omega_k + [omega_k, omega_l].
    """
    if omega.rows != omega.cols:
        raise InvalidInputError("curvature needs a square matrix 1-form")
    W = coefficient_tensor(omega, points)
    dW = derivative_tensor(omega, points)
    Wk = np.moveaxis(W, 3, 1)  # (N, m, r, c)
    commutator = np.einsum("nkab,nlbc->nackl", Wk, Wk) - np.einsum("nlab,nkbc->nackl", Wk, Wk)
    # dW[..., k, l] = d_l omega_k, so d_k omega_l is the swapped axes
    exterior = np.swapaxes(dW, 3, 4) - dW
    return exterior + commutator


def flatness_residual(omega: MatrixForm, points: np.ndarray) -> float:
    """Max |coefficient| of d(omega) + omega^omega over points, entries and index pairs."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if omega.m < 2:
        return 0.0
    curvature = curvature_tensor(omega, points)
    residual = float(np.max(np.abs(curvature))) if curvature.size else 0.0
    logger.debug("flatness residual %.3e on %d points", residual, points.shape[0])
    return residual


def potential_commutes(
    x: MatrixForm,
    omega: MatrixForm,
    points: np.ndarray,
    tol: float = 1e-10,
) -> bool:
    """Whether x(p) commutes with every dx_k coefficient of omega = dx.

    Raises:
        PreconditionError: omega differs from ext_d(x) on the sample set.
    """
    if x.degree != 0 or omega.degree != 1:
        raise InvalidInputError("potential_commutes needs a 0-form x and a 1-form omega")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    W = coefficient_tensor(omega, points)
    dX = coefficient_tensor(matrix_ext_d(x), points)
    mismatch = float(np.max(np.abs(W - dX))) if W.size else 0.0
    if mismatch > tol:
        raise PreconditionError(f"omega is not d(x): residual {mismatch:.3e}")
    X = x.values(points)
    worst = 0.0
    for k in range(omega.m):
        Wk = W[..., k]
        commutator = X @ Wk - Wk @ X
        worst = max(worst, float(np.max(np.abs(commutator))))
    logger.debug("potential commutator residual %.3e", worst)
    return worst <= tol
