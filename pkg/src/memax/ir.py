"""Parsed query shapes: terms, limits, vectors, matrices, meta directives.

Structural equality ignores source spans and original axis positions,
so re-parsing a rendered program yields an equal value.  The render
functions produce the canonical surface form: single spaces between
limits, no optional whitespace, the default ``=`` comparator omitted
where the grammar allows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal

from .lexer import Token, TokenKind

FUNC_NAMES = frozenset({"grp", "asc", "des", "sum", "cnt", "min", "max", "avg", "last"})
AGGREGATE_TAGS = frozenset({"sum", "cnt", "min", "max", "avg", "last"})
ORDER_TAGS = frozenset({"asc", "des"})

TABLE_SLOT = 2
COLUMN_SLOT = 1
VALUE_SLOT = 0


@dataclass(frozen=True)
class Term:
    """``atom``, ``(mod atom)`` or ``(atom mod atom)``."""

    base: Token | None
    mod: str | None = None
    operand: Token | None = None

    @property
    def is_plain_atom(self) -> bool:
        return self.mod is None

    def render(self) -> str:
        if self.mod is None:
            return render_atom(self.base)
        if self.base is None:
            return f"{self.mod}{render_atom(self.operand)}"
        return f"{render_atom(self.base)}{self.mod}{render_atom(self.operand)}"


@dataclass(frozen=True)
class FuncTag:
    """One colon-prefixed tag: a function name or a ``$var`` binding."""

    name: str
    binding: bool = False

    def render(self) -> str:
        return f":${self.name}" if self.binding else f":{self.name}"


@dataclass(frozen=True)
class Limit:
    """One cell of a vector: optional left term, tags, comparator, values."""

    left: Term | None
    funcs: tuple[FuncTag, ...]
    cmp: str
    right: tuple[Term, ...]
    axis0: int

    @property
    def single_atom(self) -> Token | None:
        """The sole atom when the limit is one bare term, else ``None``."""
        if self.left is None and not self.funcs and self.cmp == "=":
            if len(self.right) == 1 and self.right[0].is_plain_atom:
                return self.right[0].base
        return None

    def _right_is_bare_wildcard(self) -> bool:
        return (
            len(self.right) == 1
            and self.right[0].is_plain_atom
            and self.right[0].base is not None
            and self.right[0].base.kind is TokenKind.WILDCARD
        )

    def render(self) -> str:
        parts: list[str] = []
        if self.left is not None:
            parts.append(self.left.render())
        parts.extend(tag.render() for tag in self.funcs)
        has_head = self.left is not None or bool(self.funcs)
        if self.cmp == "=" and has_head and self._right_is_bare_wildcard():
            return "".join(parts)  # implicit wildcard value
        if self.cmp != "=" or has_head:
            parts.append(self.cmp)
        parts.append(",".join(term.render() for term in self.right))
        return "".join(parts)


@dataclass(frozen=True)
class VectorIR:
    """Limits of one vector, ordered leftmost (highest index) first."""

    limits: tuple[Limit, ...]
    axis1: int = field(compare=False, default=0)

    @property
    def width(self) -> int:
        return len(self.limits)

    @property
    def by_axis0(self) -> dict[int, Limit]:
        return {limit.axis0: limit for limit in self.limits}

    def get(self, axis0: int) -> Limit | None:
        for limit in self.limits:
            if limit.axis0 == axis0:
                return limit
        return None

    def render(self) -> str:
        return " ".join(limit.render() for limit in self.limits)


@dataclass(frozen=True)
class Meta:
    """Compilation directives from ``%m`` vectors."""

    lim: int | None = None
    off: int | None = None
    sim: Decimal | str | None = None  # str names a runtime parameter

    @property
    def is_empty(self) -> bool:
        return self.lim is None and self.off is None and self.sim is None

    def merged(self, other: "Meta") -> "Meta":
        return Meta(
            lim=other.lim if other.lim is not None else self.lim,
            off=other.off if other.off is not None else self.off,
            sim=other.sim if other.sim is not None else self.sim,
        )

    def render(self) -> str:
        parts = ["%m"]
        if self.lim is not None:
            parts.append(f"lim {self.lim}")
        if self.off is not None:
            parts.append(f"off {self.off}")
        if self.sim is not None:
            shown = f"${self.sim}" if isinstance(self.sim, str) else str(self.sim)
            parts.append(f"sim {shown}")
        return " ".join(parts)


@dataclass(frozen=True)
class MatrixIR:
    """One matrix: its query vectors plus any merged meta directives."""

    vectors: tuple[VectorIR, ...]
    meta: Meta = Meta()
    axis2: int = field(compare=False, default=0)

    def render(self) -> str:
        parts = [vector.render() for vector in self.vectors]
        if not self.meta.is_empty:
            parts.append(self.meta.render())
        return ";".join(parts) + ";;"


def render_atom(token: Token | None) -> str:
    if token is None:
        raise ValueError("cannot render a missing atom")
    kind = token.kind
    if kind is TokenKind.QUOT:
        escaped = token.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if kind is TokenKind.INT:
        return str(token.value)
    if kind is TokenKind.DEC:
        return str(token.value)
    if kind is TokenKind.EMB:
        return "[" + ",".join(str(c) for c in token.value) + "]"
    if kind is TokenKind.VAR:
        return f"${token.value}"
    return token.lexeme


def render_program(matrices: list[MatrixIR] | tuple[MatrixIR, ...]) -> str:
    return "".join(matrix.render() for matrix in matrices)


def _atom_dict(token: Token | None):
    if token is None:
        return None
    value = token.value
    if token.kind is TokenKind.DEC:
        value = str(value)
    elif token.kind is TokenKind.EMB:
        value = [str(c) for c in value]
    return {"kind": token.kind.name, "value": value}


def _term_dict(term: Term | None):
    if term is None:
        return None
    return {
        "base": _atom_dict(term.base),
        "mod": term.mod,
        "operand": _atom_dict(term.operand),
    }


def _limit_dict(limit: Limit):
    return {
        "axis0": limit.axis0,
        "left": _term_dict(limit.left),
        "funcs": [tag.render() for tag in limit.funcs],
        "cmp": limit.cmp,
        "right": [_term_dict(term) for term in limit.right],
    }


def _meta_dict(meta: Meta):
    sim = meta.sim
    if isinstance(sim, Decimal):
        sim = str(sim)
    return {"lim": meta.lim, "off": meta.off, "sim": sim}


def program_dict(matrices) -> dict:
    """Stable JSON-ready rendering of a parsed program."""
    return {
        "matrices": [
            {
                "vectors": [
                    {"limits": [_limit_dict(limit) for limit in vector.limits]}
                    for vector in matrix.vectors
                ],
                "meta": _meta_dict(matrix.meta),
            }
            for matrix in matrices
        ]
    }
