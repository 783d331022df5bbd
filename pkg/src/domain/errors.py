"""Exception hierarchy shared by the library and the CLI.

Each exception carries the process exit status the CLI reports for it.
"""

from __future__ import annotations

from typing import Optional


class NeutralTwistorError(Exception):
    exit_code = 2


class InvalidInputError(NeutralTwistorError, ValueError):
    """Malformed configuration, shape mismatch or unknown identifier."""

    exit_code = 2


class PreconditionError(InvalidInputError):
    """An operation was called outside its declared domain."""


class ParseError(InvalidInputError):
    def __init__(self, message: str, offset: Optional[int] = None) -> None:
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)


class ExprDomainError(NeutralTwistorError, ArithmeticError):
    """Evaluation hit a singular point (zero denominator, log of non-positive)."""

    exit_code = 3


class CheckFailure(NeutralTwistorError):
    exit_code = 1
