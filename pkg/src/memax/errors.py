"""Pipeline error types with stable stage names and exit codes.

The CLI maps failures to exit codes by exception class: lex and parse
problems exit 1, resolution problems 2, compilation problems 3 and
execution problems 4.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    """Half-open offset range into the source text."""

    start: int
    end: int

    def __str__(self) -> str:
        return f"{self.start}..{self.end}"


class MemaxError(Exception):
    """Base class for every pipeline failure."""

    stage = "internal"
    exit_code = 1

    def __init__(self, message: str, span: SourceSpan | None = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span is not None:
            return f"{self.message} (at {self.span})"
        return self.message


class LexError(MemaxError):
    stage = "lex"
    exit_code = 1


class ParseError(MemaxError):
    stage = "parse"
    exit_code = 1


class ResolveError(MemaxError):
    stage = "resolve"
    exit_code = 2


class CompileError(MemaxError):
    stage = "compile"
    exit_code = 3


class ExecutionError(MemaxError):
    stage = "execute"
    exit_code = 4
