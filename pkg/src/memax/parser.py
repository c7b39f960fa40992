"""Single-pass parser: token stream to coordinate-indexed query IR.

The token stream is scanned into a rank-3 grid (matrix, vector, limit),
the limit axis is right-aligned per vector so the rightmost cell always
sits at index 0, and each cell is then read as a limit.  Slot roles are
positional after alignment: index 2 names a table, index 1 a column,
index 0 holds the value term.

Vectors starting with ``%m`` carry compilation directives instead of
coordinates; they are merged into the matrix's meta set and excluded
from the query grid.  Empty vectors and matrices (consecutive or
trailing separators) produce no cells and therefore vanish.
"""

from __future__ import annotations

from decimal import Decimal
from typing import Sequence

from . import axial
from .errors import ParseError, SourceSpan
from .ir import (
    COLUMN_SLOT,
    FUNC_NAMES,
    TABLE_SLOT,
    FuncTag,
    Limit,
    MatrixIR,
    Meta,
    Term,
    VectorIR,
)
from .lexer import ATOM_KINDS, SEPARATOR_RANKS, Token, TokenKind, lex

ARITY = 3

_SLOT_ATOMS = frozenset(
    {
        TokenKind.ALNUM,
        TokenKind.WILDCARD,
        TokenKind.VECTORSAME,
        TokenKind.MATRIXSAME,
    }
)

_SLOT_NAMES = {TABLE_SLOT: "table", COLUMN_SLOT: "column"}

_META_KEYS = ("lim", "off", "sim")


def _span(tokens: Sequence[Token]) -> SourceSpan:
    return SourceSpan(tokens[0].start, tokens[-1].end)


def parse_source(source: str) -> list[MatrixIR]:
    return parse(lex(source))


def parse(tokens: Sequence[Token]) -> list[MatrixIR]:
    """Parse a normalized token stream into one IR per matrix."""
    ranked = [
        axial.RankedToken(token, SEPARATOR_RANKS.get(token.kind)) for token in tokens
    ]
    grid = axial.scan(ranked, ARITY)
    aligned = grid.reindexed(axial.reverse_reindex(grid, 0))

    by_matrix: dict[int, dict[int, dict[int, list[Token]]]] = {}
    for coord in aligned.occupied():
        m, v, a0 = coord
        by_matrix.setdefault(m, {}).setdefault(v, {})[a0] = list(aligned[coord])

    matrices: list[MatrixIR] = []
    for m in sorted(by_matrix):
        vectors: list[VectorIR] = []
        meta = Meta()
        first_token: Token | None = None
        for v in sorted(by_matrix[m]):
            cells = by_matrix[m][v]
            stream_tokens = [tok for a0 in sorted(cells, reverse=True) for tok in cells[a0]]
            if first_token is None:
                first_token = stream_tokens[0]
            if stream_tokens[0].kind is TokenKind.METAMARK:
                meta = meta.merged(parse_meta(stream_tokens))
                continue
            vectors.append(_parse_vector(cells, v))
        if not vectors:
            raise ParseError(
                "matrix contains no query vectors",
                first_token.span if first_token is not None else None,
            )
        matrices.append(MatrixIR(tuple(vectors), meta, axis2=m))
    return matrices


def _parse_vector(cells: dict[int, list[Token]], axis1: int) -> VectorIR:
    width = len(cells)
    if width > 3:
        first = cells[max(cells)][0]
        raise ParseError(
            f"vector has {width} limits; at most 3 (table, column, value) are allowed",
            SourceSpan(first.start, first.end),
        )
    if sorted(cells) != list(range(width)):
        raise ParseError("vector limits are not contiguous after alignment")
    limits = []
    for a0 in sorted(cells, reverse=True):
        limits.append(parse_limit(cells[a0], a0))
    return VectorIR(tuple(limits), axis1=axis1)


def parse_limit(tokens: Sequence[Token], axis0: int) -> Limit:
    """Read one cell's tokens as a limit.

    Table and column slots admit only a single identifier-like atom;
    the value slot admits the full grammar (optional left term, tag
    chain, comparator, comma-separated values).
    """
    if axis0 in _SLOT_NAMES:
        return _parse_slot_limit(tokens, axis0)
    return _parse_value_limit(tokens, axis0)


def _parse_slot_limit(tokens: Sequence[Token], axis0: int) -> Limit:
    slot = _SLOT_NAMES[axis0]
    for token in tokens:
        if token.kind is TokenKind.TAGCOLON:
            raise ParseError(
                f"FUNC tags are only allowed in the value slot, not the {slot} slot",
                token.span,
            )
        if token.kind is TokenKind.COMMA:
            raise ParseError(
                f"value disjunction is not allowed in the {slot} slot", token.span
            )
        if token.kind is TokenKind.CMP:
            raise ParseError(
                f"comparator is not allowed in the {slot} slot", token.span
            )
    if len(tokens) != 1 or tokens[0].kind not in _SLOT_ATOMS:
        raise ParseError(
            f"{slot} slot must be a single identifier-like atom", _span(tokens)
        )
    return Limit(None, (), "=", (Term(tokens[0]),), axis0)


def _parse_value_limit(tokens: Sequence[Token], axis0: int) -> Limit:
    cmp_positions = [i for i, t in enumerate(tokens) if t.kind is TokenKind.CMP]
    if len(cmp_positions) > 1:
        raise ParseError(
            "limit contains more than one comparator",
            tokens[cmp_positions[1]].span,
        )
    if cmp_positions:
        at = cmp_positions[0]
        before, cmp_tok, after = tokens[:at], tokens[at], tokens[at + 1:]
        if not after:
            raise ParseError("missing value after comparator", cmp_tok.span)
        left, funcs = _parse_left(before)
        right = _parse_term_list(after)
        return Limit(left, funcs, cmp_tok.lexeme, right, axis0)

    has_tags = any(t.kind is TokenKind.TAGCOLON for t in tokens)
    if has_tags or tokens[0].kind is TokenKind.MOD:
        left, funcs = _parse_left(tokens)
        wildcard = Token(TokenKind.WILDCARD, "_", "_", tokens[-1].end, tokens[-1].end)
        return Limit(left, funcs, "=", (Term(wildcard),), axis0)

    right = _parse_term_list(tokens)
    return Limit(None, (), "=", right, axis0)


def _parse_left(tokens: Sequence[Token]) -> tuple[Term | None, tuple[FuncTag, ...]]:
    term: Term | None = None
    i = 0
    if tokens and tokens[0].kind is not TokenKind.TAGCOLON:
        term, i = _parse_term(tokens, 0)
    funcs: list[FuncTag] = []
    while i < len(tokens):
        colon = tokens[i]
        if colon.kind is not TokenKind.TAGCOLON:
            raise ParseError("malformed limit before comparator", colon.span)
        if i + 1 >= len(tokens):
            raise ParseError("dangling ':' with no tag name", colon.span)
        name_tok = tokens[i + 1]
        if name_tok.kind is TokenKind.VAR:
            funcs.append(FuncTag(name_tok.value, binding=True))
        elif name_tok.kind is TokenKind.ALNUM:
            if name_tok.lexeme not in FUNC_NAMES:
                raise ParseError(f"unknown tag :{name_tok.lexeme}", name_tok.span)
            funcs.append(FuncTag(name_tok.lexeme))
        else:
            raise ParseError("tag must be a name or a $variable", name_tok.span)
        i += 2
    return term, tuple(funcs)


def _parse_term_list(tokens: Sequence[Token]) -> tuple[Term, ...]:
    for token in tokens:
        if token.kind is TokenKind.TAGCOLON:
            raise ParseError("FUNC tags must precede the comparator", token.span)
    chunks: list[list[Token]] = [[]]
    for token in tokens:
        if token.kind is TokenKind.COMMA:
            chunks.append([])
        else:
            chunks[-1].append(token)
    terms = []
    for chunk in chunks:
        if not chunk:
            raise ParseError("missing term in value list", _span(tokens))
        term, consumed = _parse_term(chunk, 0)
        if consumed != len(chunk):
            raise ParseError("malformed term", chunk[consumed].span)
        terms.append(term)
    return tuple(terms)


def _parse_term(tokens: Sequence[Token], i: int) -> tuple[Term, int]:
    token = tokens[i]
    if token.kind is TokenKind.MOD:
        if i + 1 >= len(tokens) or tokens[i + 1].kind not in ATOM_KINDS:
            raise ParseError(f"modifier {token.lexeme!r} needs an operand", token.span)
        return Term(None, token.lexeme, tokens[i + 1]), i + 2
    if token.kind not in ATOM_KINDS:
        raise ParseError(f"expected a term, found {token.lexeme!r}", token.span)
    if i + 1 < len(tokens) and tokens[i + 1].kind is TokenKind.MOD:
        mod = tokens[i + 1]
        if i + 2 >= len(tokens) or tokens[i + 2].kind not in ATOM_KINDS:
            raise ParseError(f"modifier {mod.lexeme!r} needs an operand", mod.span)
        return Term(token, mod.lexeme, tokens[i + 2]), i + 3
    return Term(token), i + 1


def parse_meta(tokens: Sequence[Token]) -> Meta:
    """Read a ``%m`` vector's tokens (stream order) as meta directives."""
    rest = tokens[1:]
    if len(rest) % 2 != 0:
        raise ParseError("meta key without a value", _span(tokens))
    values: dict[str, object] = {}
    for key_tok, val_tok in zip(rest[::2], rest[1::2]):
        if key_tok.kind is not TokenKind.ALNUM or key_tok.lexeme not in _META_KEYS:
            raise ParseError(f"unknown meta key {key_tok.lexeme!r}", key_tok.span)
        key = key_tok.lexeme
        if key in ("lim", "off"):
            if val_tok.kind is not TokenKind.INT:
                raise ParseError(
                    f"meta {key} requires an integer value", val_tok.span
                )
            values[key] = val_tok.value
        else:  # sim
            if val_tok.kind in (TokenKind.DEC, TokenKind.INT):
                values[key] = Decimal(val_tok.value)
            elif val_tok.kind is TokenKind.VAR:
                values[key] = val_tok.value
            else:
                raise ParseError(
                    "meta sim requires a number or a $variable", val_tok.span
                )
    return Meta(**values)  # type: ignore[arg-type]


_ROLE_NAMES = {TABLE_SLOT: "Table", COLUMN_SLOT: "Column", 0: "Value"}


def coordinate_rows(matrices: list[MatrixIR]) -> list[tuple[tuple[int, int, int], str, str]]:
    """Rows for the coordinate emit: (matrix, vector, limit) index, role, text.

    Vectors missing a table slot get a synthesized ``(@)`` row so the
    inherited table cell is visible.
    """
    rows: list[tuple[tuple[int, int, int], str, str]] = []
    for matrix in matrices:
        for vector in matrix.vectors:
            present = vector.by_axis0
            if TABLE_SLOT not in present:
                rows.append(
                    ((matrix.axis2, vector.axis1, TABLE_SLOT), "Table (carried)", "(@)")
                )
            for a0 in sorted(present, reverse=True):
                rows.append(
                    (
                        (matrix.axis2, vector.axis1, a0),
                        _ROLE_NAMES[a0],
                        present[a0].render(),
                    )
                )
    return rows
