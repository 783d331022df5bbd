"""Symbolic scalar functions on R^m: parsing, evaluation, exact partial derivatives.

Expressions are immutable trees. Evaluation is vectorised over an (N, m) array
of points; every call evaluates shared sub-trees once.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from src.domain.errors import ExprDomainError, InvalidInputError, ParseError

logger = logging.getLogger(__name__)

Number = Union[int, float]
ExprLike = Union["Expr", int, float]


@dataclass(frozen=True)
class Expr:
    """Base node. Arithmetic operators build folded trees."""

    def children(self) -> Tuple["Expr", ...]:
        return ()

    def rebuild(self, *children: "Expr") -> "Expr":
        return self

    def _eval(self, points: np.ndarray, cache: Dict[int, np.ndarray]) -> np.ndarray:
        raise NotImplementedError

    def _diff(self, k: int, memo: Dict[int, "Expr"]) -> "Expr":
        raise NotImplementedError

    def to_text(self) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.to_text()

    def __add__(self, other: ExprLike) -> "Expr":
        other = _coerce(other)
        return NotImplemented if other is None else add(self, other)

    def __radd__(self, other: ExprLike) -> "Expr":
        other = _coerce(other)
        return NotImplemented if other is None else add(other, self)

    def __sub__(self, other: ExprLike) -> "Expr":
        other = _coerce(other)
        return NotImplemented if other is None else sub(self, other)

    def __rsub__(self, other: ExprLike) -> "Expr":
        other = _coerce(other)
        return NotImplemented if other is None else sub(other, self)

    def __mul__(self, other: ExprLike) -> "Expr":
        other = _coerce(other)
        return NotImplemented if other is None else mul(self, other)

    def __rmul__(self, other: ExprLike) -> "Expr":
        other = _coerce(other)
        return NotImplemented if other is None else mul(other, self)

    def __truediv__(self, other: ExprLike) -> "Expr":
        other = _coerce(other)
        return NotImplemented if other is None else div(self, other)

    def __rtruediv__(self, other: ExprLike) -> "Expr":
        other = _coerce(other)
        return NotImplemented if other is None else div(other, self)

    def __neg__(self) -> "Expr":
        return neg(self)

    def __pow__(self, exponent: int) -> "Expr":
        if not isinstance(exponent, int):
            raise InvalidInputError("only integer powers are supported")
        return power(self, exponent)


def _cached(node: Expr, points: np.ndarray, cache: Dict[int, np.ndarray]) -> np.ndarray:
    key = id(node)
    value = cache.get(key)
    if value is None:
        value = node._eval(points, cache)
        cache[key] = value
    return value


def _derive(node: Expr, k: int, memo: Dict[int, Expr]) -> Expr:
    key = id(node)
    result = memo.get(key)
    if result is None:
        result = node._diff(k, memo)
        memo[key] = result
    return result


@dataclass(frozen=True)
class Constant(Expr):
    value: float

    def _eval(self, points, cache):
        return np.full(points.shape[0], float(self.value))

    def _diff(self, k, memo):
        return ZERO

    def to_text(self) -> str:
        text = repr(float(self.value))
        return f"({text})" if self.value < 0 else text


@dataclass(frozen=True)
class Coordinate(Expr):
    index: int

    def _eval(self, points, cache):
        if not 1 <= self.index <= points.shape[1]:
            raise InvalidInputError(
                f"coordinate x{self.index} outside ambient dimension {points.shape[1]}"
            )
        return points[:, self.index - 1]

    def _diff(self, k, memo):
        return ONE if k == self.index else ZERO

    def to_text(self) -> str:
        return f"x{self.index}"


@dataclass(frozen=True)
class _Binary(Expr):
    left: Expr
    right: Expr

    symbol = "?"

    def children(self):
        return (self.left, self.right)

    def rebuild(self, *children):
        return type(self)(*children)

    def to_text(self) -> str:
        return f"({self.left.to_text()} {self.symbol} {self.right.to_text()})"


@dataclass(frozen=True)
class Add(_Binary):
    symbol = "+"

    def _eval(self, points, cache):
        return _cached(self.left, points, cache) + _cached(self.right, points, cache)

    def _diff(self, k, memo):
        return add(_derive(self.left, k, memo), _derive(self.right, k, memo))


@dataclass(frozen=True)
class Sub(_Binary):
    symbol = "-"

    def _eval(self, points, cache):
        return _cached(self.left, points, cache) - _cached(self.right, points, cache)

    def _diff(self, k, memo):
        return sub(_derive(self.left, k, memo), _derive(self.right, k, memo))


@dataclass(frozen=True)
class Mul(_Binary):
    symbol = "*"

    def _eval(self, points, cache):
        return _cached(self.left, points, cache) * _cached(self.right, points, cache)

    def _diff(self, k, memo):
        return add(
            mul(_derive(self.left, k, memo), self.right),
            mul(self.left, _derive(self.right, k, memo)),
        )


@dataclass(frozen=True)
class Div(_Binary):
    symbol = "/"

    def _eval(self, points, cache):
        denominator = _cached(self.right, points, cache)
        if np.any(denominator == 0.0):
            raise ExprDomainError(f"division by zero in {self.to_text()}")
        return _cached(self.left, points, cache) / denominator

    def _diff(self, k, memo):
        numerator = sub(
            mul(_derive(self.left, k, memo), self.right),
            mul(self.left, _derive(self.right, k, memo)),
        )
        return div(numerator, power(self.right, 2))


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr

    def children(self):
        return (self.operand,)

    def rebuild(self, *children):
        return Neg(children[0])

    def _eval(self, points, cache):
        return -_cached(self.operand, points, cache)

    def _diff(self, k, memo):
        return neg(_derive(self.operand, k, memo))

    def to_text(self) -> str:
        return f"(-{self.operand.to_text()})"


@dataclass(frozen=True)
class IntPow(Expr):
    base: Expr
    exponent: int

    def children(self):
        return (self.base,)

    def rebuild(self, *children):
        return IntPow(children[0], self.exponent)

    def _eval(self, points, cache):
        base = _cached(self.base, points, cache)
        if self.exponent < 0 and np.any(base == 0.0):
            raise ExprDomainError(f"negative power of zero in {self.to_text()}")
        return base ** self.exponent

    def _diff(self, k, memo):
        inner = _derive(self.base, k, memo)
        return mul(mul(Constant(float(self.exponent)), power(self.base, self.exponent - 1)), inner)

    def to_text(self) -> str:
        return f"({self.base.to_text()})^{self.exponent}"


@dataclass(frozen=True)
class _Function(Expr):
    arg: Expr

    name = "?"

    def children(self):
        return (self.arg,)

    def rebuild(self, *children):
        return type(self)(children[0])

    def to_text(self) -> str:
        return f"{self.name}({self.arg.to_text()})"


@dataclass(frozen=True)
class Exp(_Function):
    name = "exp"

    def _eval(self, points, cache):
        return np.exp(_cached(self.arg, points, cache))

    def _diff(self, k, memo):
        return mul(self, _derive(self.arg, k, memo))


@dataclass(frozen=True)
class Log(_Function):
    name = "log"

    def _eval(self, points, cache):
        arg = _cached(self.arg, points, cache)
        if np.any(arg <= 0.0):
            raise ExprDomainError(f"log of non-positive value in {self.to_text()}")
        return np.log(arg)

    def _diff(self, k, memo):
        return div(_derive(self.arg, k, memo), self.arg)


@dataclass(frozen=True)
class Sin(_Function):
    name = "sin"

    def _eval(self, points, cache):
        return np.sin(_cached(self.arg, points, cache))

    def _diff(self, k, memo):
        return mul(cos(self.arg), _derive(self.arg, k, memo))


@dataclass(frozen=True)
class Cos(_Function):
    name = "cos"

    def _eval(self, points, cache):
        return np.cos(_cached(self.arg, points, cache))

    def _diff(self, k, memo):
        return neg(mul(sin(self.arg), _derive(self.arg, k, memo)))


@dataclass(frozen=True)
class Sinh(_Function):
    name = "sinh"

    def _eval(self, points, cache):
        return np.sinh(_cached(self.arg, points, cache))

    def _diff(self, k, memo):
        return mul(cosh(self.arg), _derive(self.arg, k, memo))


@dataclass(frozen=True)
class Cosh(_Function):
    name = "cosh"

    def _eval(self, points, cache):
        return np.cosh(_cached(self.arg, points, cache))

    def _diff(self, k, memo):
        return mul(sinh(self.arg), _derive(self.arg, k, memo))


ZERO = Constant(0.0)
ONE = Constant(1.0)


def as_expr(value: ExprLike) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Constant(float(value))
    raise InvalidInputError(f"cannot convert {value!r} to an expression")


def _coerce(value) -> Optional[Expr]:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Constant(float(value))
    return None


def is_zero(e: Expr) -> bool:
    return isinstance(e, Constant) and e.value == 0.0


def is_one(e: Expr) -> bool:
    return isinstance(e, Constant) and e.value == 1.0


# Folding constructors: 0*x -> 0, x+0 -> x, 1*x -> x and constant arithmetic.


def add(a: Expr, b: Expr) -> Expr:
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value + b.value)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if is_zero(b):
        return a
    if is_zero(a):
        return neg(b)
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value - b.value)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if is_zero(a) or is_zero(b):
        return ZERO
    if is_one(a):
        return b
    if is_one(b):
        return a
    if isinstance(a, Constant) and isinstance(b, Constant):
        return Constant(a.value * b.value)
    if isinstance(a, Constant) and a.value == -1.0:
        return neg(b)
    if isinstance(b, Constant) and b.value == -1.0:
        return neg(a)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if is_one(b):
        return a
    if is_zero(a) and not is_zero(b):
        return ZERO
    if isinstance(a, Constant) and isinstance(b, Constant) and b.value != 0.0:
        return Constant(a.value / b.value)
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Constant):
        return Constant(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def power(a: Expr, exponent: int) -> Expr:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return a
    if isinstance(a, Constant) and (a.value != 0.0 or exponent > 0):
        return Constant(a.value ** exponent)
    return IntPow(a, exponent)


def _fold_function(node_type: type, fn: Callable[[float], float], arg: ExprLike) -> Expr:
    arg = as_expr(arg)
    if isinstance(arg, Constant):
        return Constant(fn(arg.value))
    return node_type(arg)


def exp(arg: ExprLike) -> Expr:
    return _fold_function(Exp, math.exp, arg)


def log(arg: ExprLike) -> Expr:
    arg = as_expr(arg)
    if isinstance(arg, Constant) and arg.value > 0.0:
        return Constant(math.log(arg.value))
    return Log(arg)


def sin(arg: ExprLike) -> Expr:
    return _fold_function(Sin, math.sin, arg)


def cos(arg: ExprLike) -> Expr:
    return _fold_function(Cos, math.cos, arg)


def sinh(arg: ExprLike) -> Expr:
    return _fold_function(Sinh, math.sinh, arg)


def cosh(arg: ExprLike) -> Expr:
    return _fold_function(Cosh, math.cosh, arg)


def sqrt(arg: ExprLike) -> Expr:
    """Square root written as exp(log(x)/2); positive arguments only."""
    arg = as_expr(arg)
    if isinstance(arg, Constant) and arg.value >= 0.0:
        return Constant(math.sqrt(arg.value))
    return exp(mul(Constant(0.5), log(arg)))


def coordinate(k: int) -> Expr:
    return Coordinate(k)


# Evaluation


def evaluate_many(e: Expr, points: np.ndarray, cache: Optional[Dict[int, np.ndarray]] = None) -> np.ndarray:
    """Evaluate e on every row of an (N, m) array.

    Returns:
        Array of shape (N,).

    Raises:
        ExprDomainError: a denominator vanished, a log argument was non-positive,
            or a value overflowed.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if cache is None:
        cache = {}
    with np.errstate(all="ignore"):
        values = _cached(e, points, cache)
    values = np.broadcast_to(values, (points.shape[0],)).astype(float, copy=True)
    if not np.all(np.isfinite(values)):
        raise ExprDomainError(f"non-finite value while evaluating {e.to_text()}")
    return values


def evaluate(e: Expr, p) -> float:
    """Evaluate e at a single point."""
    point = np.asarray(p, dtype=float).reshape(1, -1)
    return float(evaluate_many(e, point)[0])


def partial(e: Expr, k: int) -> Expr:
    """Exact partial derivative with respect to x_k, constant folded."""
    if k < 1:
        raise InvalidInputError(f"coordinate index must be >= 1, got {k}")
    return _derive(e, k, {})


def substitute(e: Expr, mapping: Mapping[int, Expr]) -> Expr:
    """Replace coordinates x_k by mapping[k]; unmapped coordinates stay."""
    memo: Dict[int, Expr] = {}

    def rec(node: Expr) -> Expr:
        key = id(node)
        if key in memo:
            return memo[key]
        if isinstance(node, Coordinate):
            result = mapping.get(node.index, node)
        elif node.children():
            result = node.rebuild(*(rec(child) for child in node.children()))
        else:
            result = node
        memo[key] = result
        return result

    return rec(e)


def print_expr(e: Expr) -> str:
    return e.to_text()


# Parsing

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)

_FUNCTIONS: Dict[str, Callable[[Expr], Expr]] = {
    "exp": Exp,
    "log": Log,
    "sin": Sin,
    "cos": Cos,
    "sinh": Sinh,
    "cosh": Cosh,
}


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> List[_Token]:
    tokens: List[_Token] = []
    position = 0
    while position < len(text):
        if text[position:].strip() == "":
            break
        match = _TOKEN_RE.match(text, position)
        if match is None or match.end() == position:
            stripped = len(text[position:]) - len(text[position:].lstrip())
            bad = position + stripped
            raise ParseError(
                f"unexpected character {text[bad]!r}", len(text[:bad].encode("utf-8"))
            )
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append(_Token(kind, match.group(kind), len(text[:start].encode("utf-8"))))
        position = match.end()
    tokens.append(_Token("end", "", len(text.encode("utf-8"))))
    return tokens


class _Parser:
    def __init__(self, text: str, m: int) -> None:
        self.tokens = _tokenize(text)
        self.position = 0
        self.m = m

    @property
    def current(self) -> _Token:
        return self.tokens[self.position]

    def advance(self) -> _Token:
        token = self.tokens[self.position]
        self.position += 1
        return token

    def expect(self, text: str) -> _Token:
        token = self.current
        if token.text != text or token.kind == "end":
            found = token.text or "end of input"
            raise ParseError(f"expected {text!r}, found {found!r}", token.offset)
        return self.advance()

    def parse(self) -> Expr:
        result = self.expr()
        if self.current.kind != "end":
            raise ParseError(f"unexpected token {self.current.text!r}", self.current.offset)
        return result

    def expr(self) -> Expr:
        left = self.term()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self.advance().text
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self) -> Expr:
        left = self.factor()
        while self.current.kind == "op" and self.current.text in "*/":
            op = self.advance().text
            right = self.factor()
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def factor(self) -> Expr:
        if self.current.kind == "op" and self.current.text == "-":
            self.advance()
            return Neg(self.power())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.current.kind == "op" and self.current.text == "^":
            self.advance()
            sign = 1
            if self.current.kind == "op" and self.current.text == "-":
                self.advance()
                sign = -1
            token = self.current
            if token.kind != "number" or not token.text.isdigit():
                raise ParseError("expected integer exponent", token.offset)
            self.advance()
            return IntPow(base, sign * int(token.text))
        return base

    def atom(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self.advance()
            return Constant(float(token.text))
        if token.kind == "op" and token.text == "(":
            self.advance()
            inner = self.expr()
            self.expect(")")
            return inner
        if token.kind == "ident":
            self.advance()
            return self.identifier(token)
        found = token.text or "end of input"
        raise ParseError(f"unexpected token {found!r}", token.offset)

    def identifier(self, token: _Token) -> Expr:
        name = token.text
        if name in _FUNCTIONS:
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return _FUNCTIONS[name](arg)
        if name in ("u", "v") and self.m == 2:
            return Coordinate(1 if name == "u" else 2)
        match = re.fullmatch(r"x(\d+)", name)
        if match:
            index = int(match.group(1))
            if not 1 <= index <= self.m:
                raise ParseError(
                    f"coordinate {name} out of range for dimension {self.m}", token.offset
                )
            return Coordinate(index)
        raise ParseError(f"unknown identifier {name!r}", token.offset)


def parse(text: str, m: int) -> Expr:
    """Parse text in the expression grammar over coordinates x1..xm.

    Raises:
        ParseError: syntax errors (with byte offset), unknown identifiers and
            coordinates outside [1, m].
    """
    if m < 1:
        raise InvalidInputError(f"ambient dimension must be >= 1, got {m}")
    return _Parser(text, m).parse()


def parse_bindings(bindings: Mapping[str, str], m: int) -> Dict[str, Expr]:
    parsed: Dict[str, Expr] = {}
    for name, text in bindings.items():
        try:
            parsed[name] = parse(str(text), m)
        except ParseError as exc:
            error = ParseError(f"expression {name!r}: {exc}")
            error.offset = exc.offset
            raise error from exc
    logger.debug("Parsed %d expression bindings", len(parsed))
    return parsed
