"""Tokenizer for Memelang source text.

Separators come in three ranks: ``;;`` starts the next matrix, ``;``
the next vector, and any whitespace run splits limits.  Everything else
is an atom, a comparator, a modifier, a tag colon or a comma.

Matching is longest-match at each position, with ties going to the most
specific class (so ``;;`` beats two ``;``, ``<=>`` beats ``<=``).  A
sign character starts a numeral only when the previous token is not an
atom, which keeps ``a-b`` arithmetic distinct from ``=-5``.  Whitespace
adjacent to ``;``/``;;`` and at the stream boundaries carries no
information and is dropped after lexing.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from typing import Any

from .errors import LexError, SourceSpan


class TokenKind(Enum):
    SEP2 = "SEP2"
    SEP1 = "SEP1"
    SEP0 = "SEP0"
    ALNUM = "ALNUM"
    QUOT = "QUOT"
    INT = "INT"
    DEC = "DEC"
    WILDCARD = "WILDCARD"
    VECTORSAME = "VECTORSAME"
    MATRIXSAME = "MATRIXSAME"
    VAR = "VAR"
    EMB = "EMB"
    CMP = "CMP"
    MOD = "MOD"
    TAGCOLON = "TAGCOLON"
    COMMA = "COMMA"
    METAMARK = "METAMARK"


@dataclass(frozen=True)
class Token:
    """One lexeme with its parsed value and source span.

    Spans are excluded from equality so token streams from differently
    spaced sources compare equal.
    """

    kind: TokenKind
    lexeme: str
    value: Any
    start: int = field(compare=False, default=0)
    end: int = field(compare=False, default=0)

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.start, self.end)

    def __repr__(self) -> str:
        return f"Token({self.kind.name}, {self.lexeme!r})"


SEPARATOR_RANKS = {TokenKind.SEP2: 2, TokenKind.SEP1: 1, TokenKind.SEP0: 0}

ATOM_KINDS = frozenset(
    {
        TokenKind.ALNUM,
        TokenKind.QUOT,
        TokenKind.INT,
        TokenKind.DEC,
        TokenKind.WILDCARD,
        TokenKind.VECTORSAME,
        TokenKind.MATRIXSAME,
        TokenKind.VAR,
        TokenKind.EMB,
    }
)

COMPARATORS = frozenset({"=", "!=", ">", ">=", "<", "<=", "~", "!~"})
MODIFIERS = frozenset({"<->", "<#>", "<=>", "+", "-", "*", "/", "%"})
VECTOR_MODIFIERS = frozenset({"<->", "<#>", "<=>"})

_NUM_BODY = r"(?:\d+\.\d*|\.\d+)"

# Candidate patterns in tie-break priority order.  The sign-aware number
# patterns are swapped in per position depending on the previous token.
_FIXED_PATTERNS: list[tuple[TokenKind, re.Pattern[str]]] = [
    (TokenKind.SEP2, re.compile(r";;")),
    (TokenKind.SEP1, re.compile(r";")),
    (TokenKind.SEP0, re.compile(r"\s+")),
    (TokenKind.METAMARK, re.compile(r"%m(?![A-Za-z0-9_])")),
    (TokenKind.MOD, re.compile(r"<=>|<->|<#>")),
    (TokenKind.CMP, re.compile(r"<=|>=|!=|!~")),
    (TokenKind.CMP, re.compile(r"[=<>~]")),
    (
        TokenKind.EMB,
        re.compile(r"\[[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:,[+-]?(?:\d+\.\d*|\.\d+|\d+))*\]"),
    ),
]

_DEC_SIGNED = re.compile(r"[+-]?" + _NUM_BODY)
_DEC_UNSIGNED = re.compile(_NUM_BODY)
_INT_SIGNED = re.compile(r"[+-]?\d+")
_INT_UNSIGNED = re.compile(r"\d+")

_TAIL_PATTERNS: list[tuple[TokenKind, re.Pattern[str]]] = [
    (TokenKind.MOD, re.compile(r"[+\-*/%]")),
    (TokenKind.QUOT, re.compile(r'"(?:\\.|[^"\\])*"')),
    (TokenKind.VAR, re.compile(r"\$[A-Za-z_][A-Za-z0-9_]*")),
    (TokenKind.ALNUM, re.compile(r"[A-Za-z_][A-Za-z0-9_]*")),
    (TokenKind.VECTORSAME, re.compile(r"@")),
    (TokenKind.MATRIXSAME, re.compile(r"\^")),
    (TokenKind.TAGCOLON, re.compile(r":")),
    (TokenKind.COMMA, re.compile(r",")),
]


def _candidates(prev_is_atom: bool) -> list[tuple[TokenKind, re.Pattern[str]]]:
    if prev_is_atom:
        numbers = [(TokenKind.DEC, _DEC_UNSIGNED), (TokenKind.INT, _INT_UNSIGNED)]
    else:
        numbers = [(TokenKind.DEC, _DEC_SIGNED), (TokenKind.INT, _INT_SIGNED)]
    return _FIXED_PATTERNS + numbers + _TAIL_PATTERNS


def _unescape_quoted(lexeme: str, offset: int) -> str:
    body = lexeme[1:-1]
    out: list[str] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            nxt = body[i + 1]
            if nxt not in ('"', "\\"):
                raise LexError(
                    f"unsupported escape \\{nxt} in quoted atom",
                    SourceSpan(offset + i + 1, offset + i + 3),
                )
            out.append(nxt)
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _token_value(kind: TokenKind, lexeme: str, start: int):
    if kind is TokenKind.QUOT:
        return _unescape_quoted(lexeme, start)
    if kind is TokenKind.INT:
        return int(lexeme)
    if kind is TokenKind.DEC:
        return Decimal(lexeme)
    if kind is TokenKind.EMB:
        return tuple(Decimal(part) for part in lexeme[1:-1].split(","))
    if kind is TokenKind.VAR:
        return lexeme[1:]
    return lexeme


def _lex_failure(source: str, pos: int) -> LexError:
    ch = source[pos]
    if ch == '"':
        return LexError("unterminated quote", SourceSpan(pos, len(source)))
    if ch == "$":
        return LexError(
            "bare '$' with no identifier", SourceSpan(pos, pos + 1)
        )
    if ch == "[":
        return LexError(
            "malformed embedding literal", SourceSpan(pos, pos + 1)
        )
    return LexError(f"illegal character {ch!r}", SourceSpan(pos, pos + 1))


def lex(source: str) -> list[Token]:
    """Tokenize ``source``, normalizing boundary whitespace away."""
    tokens: list[Token] = []
    pos = 0
    length = len(source)
    prev_is_atom = False
    while pos < length:
        best_kind: TokenKind | None = None
        best_end = pos
        for kind, pattern in _candidates(prev_is_atom):
            match = pattern.match(source, pos)
            if match is not None and match.end() > best_end:
                best_kind = kind
                best_end = match.end()
        if best_kind is None:
            raise _lex_failure(source, pos)
        lexeme = source[pos:best_end]
        if best_kind is TokenKind.ALNUM and lexeme == "_":
            best_kind = TokenKind.WILDCARD
        value = _token_value(best_kind, lexeme, pos)
        tokens.append(Token(best_kind, lexeme, value, pos, best_end))
        prev_is_atom = best_kind in ATOM_KINDS
        pos = best_end
    return _normalize_sep0(tokens)


def _normalize_sep0(tokens: list[Token]) -> list[Token]:
    """Drop SEP0 adjacent to SEP1/SEP2 and at the stream boundaries."""
    higher = (TokenKind.SEP1, TokenKind.SEP2)
    out: list[Token] = []
    for token in tokens:
        if token.kind is TokenKind.SEP0:
            if not out or out[-1].kind in higher:
                continue
            out.append(token)
        else:
            if token.kind in higher and out and out[-1].kind is TokenKind.SEP0:
                out.pop()
            out.append(token)
    if out and out[-1].kind is TokenKind.SEP0:
        out.pop()
    return out


_QUOT_FULL = re.compile(r'"(?:\\.|[^"\\])*"\Z')
_VAR_FULL = re.compile(r"\$[A-Za-z_][A-Za-z0-9_]*\Z")
_ALNUM_FULL = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_EMB_FULL = re.compile(
    r"\[[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:,[+-]?(?:\d+\.\d*|\.\d+|\d+))*\]\Z"
)
_DEC_FULL = re.compile(r"[+-]?(?:\d+\.\d*|\.\d+)\Z")
_INT_FULL = re.compile(r"[+-]?\d+\Z")


def classify_atom(lexeme: str) -> TokenKind:
    """Atom class of a complete lexeme (reserved marks win over ALNUM)."""
    if not lexeme:
        raise ValueError("empty lexeme")
    if lexeme == "_":
        return TokenKind.WILDCARD
    if lexeme == "@":
        return TokenKind.VECTORSAME
    if lexeme == "^":
        return TokenKind.MATRIXSAME
    if _QUOT_FULL.match(lexeme):
        return TokenKind.QUOT
    if _VAR_FULL.match(lexeme):
        return TokenKind.VAR
    if _EMB_FULL.match(lexeme):
        return TokenKind.EMB
    if _DEC_FULL.match(lexeme):
        return TokenKind.DEC
    if _INT_FULL.match(lexeme):
        return TokenKind.INT
    if _ALNUM_FULL.match(lexeme):
        return TokenKind.ALNUM
    raise ValueError(f"unclassifiable atom {lexeme!r}")


def format_token(token: Token) -> str:
    """``KIND<TAB>lexeme<TAB>start..end`` with control characters escaped."""
    shown = token.lexeme.encode("unicode_escape").decode("ascii")
    return f"{token.kind.name}\t{shown}\t{token.start}..{token.end}"
