"""Semantic resolution: query IR to table instances, projections, predicates.

Vectors are walked in source order with a single pass of state:

* The table slot either introduces a new table instance (a fresh alias)
  or attaches to the current one.  An explicit name only creates an
  instance when it differs from the carried table; ``@`` always forces
  a new instance of the prior vector's table (self-join).  An absent
  slot inherits the current instance.
* The column slot names a column on the current instance, copies the
  prior vector's column via ``@``, or projects all columns via ``_``
  (also the case for a value-only vector).
* The value slot yields the vector's value expression: the column,
  possibly modified by a left term such as ``<=>"text"`` or ``*2``.
  Every vector's value expression is projected.  A comparator plus
  right-side terms adds a predicate; ``@`` on the right refers to the
  prior vector's value expression, producing a join condition.

``:$x`` tags bind the current value expression for later ``$x``
references; rebinding shadows.  ``$sim`` (and any name supplied by the
runtime) resolves to a runtime parameter instead.  ``^`` reaches into
the previous matrix's export and is only usable where that export is a
plain literal, since matrices compile to separate statements.

If any projection is grouped or aggregated, grouping completion assigns
the default ``last`` aggregate to every untagged projection so each one
is exactly a grouping key or an aggregate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from decimal import Decimal
from typing import Iterable, Mapping

from . import axial
from .errors import ResolveError
from .ir import (
    AGGREGATE_TAGS,
    COLUMN_SLOT,
    TABLE_SLOT,
    VALUE_SLOT,
    Limit,
    MatrixIR,
    Meta,
    Term,
    VectorIR,
)
from .lexer import Token, TokenKind, VECTOR_MODIFIERS

DEFAULT_RUNTIME_PARAMS = frozenset({"sim"})

_LITERAL_TYPES = {
    TokenKind.QUOT: "text",
    TokenKind.ALNUM: "text",
    TokenKind.INT: "integer",
    TokenKind.DEC: "decimal",
}


@dataclass(frozen=True)
class TableInstance:
    table: str
    alias: str
    introduced_at: axial.Coordinate


@dataclass(frozen=True)
class Literal:
    value: object
    type: str


@dataclass(frozen=True)
class EmbedText:
    """Quoted text that becomes a vector parameter through the embedding hook."""

    text: str


@dataclass(frozen=True)
class VectorValue:
    components: tuple[Decimal, ...]


@dataclass(frozen=True)
class RuntimeParam:
    name: str


@dataclass(frozen=True)
class ColumnExpr:
    """A column reference, optionally modified by one operator.

    ``column`` may be ``"*"`` for a star projection.  When ``op`` is
    set the expression is ``column op operand`` and renders inside
    parentheses.
    """

    instance: TableInstance
    column: str
    op: str | None = None
    operand: "Operand | None" = None

    @property
    def is_star(self) -> bool:
        return self.column == "*"


Operand = Literal | EmbedText | VectorValue | RuntimeParam | ColumnExpr


@dataclass(frozen=True)
class Projection:
    expr: ColumnExpr
    aggregate: str | None = None
    grouping: bool = False


@dataclass(frozen=True)
class Predicate:
    expr: ColumnExpr
    cmp: str
    rhs: tuple[Operand, ...]


@dataclass(frozen=True)
class OrderSpec:
    projection: int  # index into ResolvedQuery.projections
    direction: str  # "asc" | "des"


@dataclass(frozen=True)
class SlotExport:
    """What the last vector of a matrix resolved to, per slot."""

    table: str | None = None
    column: str | None = None
    value_literal: Literal | None = None


@dataclass(frozen=True)
class ResolvedQuery:
    instances: tuple[TableInstance, ...]
    projections: tuple[Projection, ...]
    predicates: tuple[Predicate, ...]
    order_specs: tuple[OrderSpec, ...]
    meta: Meta
    params: tuple[Operand, ...] = ()
    export: SlotExport = field(default=SlotExport(), compare=False)

    @property
    def is_grouped(self) -> bool:
        return any(p.grouping or p.aggregate for p in self.projections)


@dataclass
class _PriorVector:
    table: str
    column: str
    value_expr: ColumnExpr


def resolve_program(
    matrices: Iterable[MatrixIR],
    runtime_params: Iterable[str] = DEFAULT_RUNTIME_PARAMS,
) -> list[ResolvedQuery]:
    """Resolve each matrix in order, threading the cross-matrix export."""
    resolved: list[ResolvedQuery] = []
    export: SlotExport | None = None
    for matrix in matrices:
        query = resolve(matrix, prior_export=export, runtime_params=runtime_params)
        resolved.append(query)
        export = query.export
    return resolved


def resolve(
    matrix: MatrixIR,
    prior_export: SlotExport | None = None,
    runtime_params: Iterable[str] = DEFAULT_RUNTIME_PARAMS,
) -> ResolvedQuery:
    state = _MatrixState(matrix, prior_export, frozenset(runtime_params))
    for vector in matrix.vectors:
        state.resolve_vector(vector)
    return state.finish()


def resolve_value_same(prior: "_PriorVector | None") -> ColumnExpr:
    """The prior vector's value expression, as referenced by ``@``."""
    if prior is None:
        raise ResolveError("'@' reference in the first vector has no prior vector")
    return prior.value_expr


class _MatrixState:
    def __init__(
        self,
        matrix: MatrixIR,
        prior_export: SlotExport | None,
        runtime_params: frozenset[str],
    ):
        self.matrix = matrix
        self.prior_export = prior_export
        self.runtime_params = runtime_params
        self.instances: list[TableInstance] = []
        self.projections: list[Projection] = []
        self.predicates: list[Predicate] = []
        self.order_specs: list[OrderSpec] = []
        self.params: list[Operand] = []
        self.env = axial.Environment()
        self.bound_exprs: dict[str, ColumnExpr] = {}
        self.current: TableInstance | None = None
        self.prior: _PriorVector | None = None
        self._last_limit: Limit | None = None

    # -- table slot -----------------------------------------------------

    def _new_instance(self, table: str, coord: axial.Coordinate) -> TableInstance:
        instance = TableInstance(table, f"t{len(self.instances)}", coord)
        self.instances.append(instance)
        return instance

    def _resolve_table_slot(self, vector: VectorIR, coord: axial.Coordinate) -> None:
        limit = vector.get(TABLE_SLOT)
        if limit is None:
            if self.current is None:
                raise ResolveError(
                    "table slot is absent and there is no prior vector to inherit from"
                )
            return
        atom = limit.single_atom
        if atom is None:
            raise ResolveError("table slot must resolve to a single name")
        if atom.kind is TokenKind.ALNUM:
            if self.current is None or atom.value != self.current.table:
                self.current = self._new_instance(atom.value, coord)
            return
        if atom.kind is TokenKind.VECTORSAME:
            prior = resolve_value_same(self.prior)
            self.current = self._new_instance(prior.instance.table, coord)
            return
        if atom.kind is TokenKind.WILDCARD:
            raise ResolveError(
                "non-fixed table slot: a wildcard table cannot be compiled",
                atom.span,
            )
        raise ResolveError(
            "matrix-same reference is not supported in the table slot", atom.span
        )

    # -- column slot ----------------------------------------------------

    def _resolve_column_slot(self, vector: VectorIR) -> str:
        limit = vector.get(COLUMN_SLOT)
        if limit is None:
            return "*"  # value-only vector projects all columns
        atom = limit.single_atom
        if atom is None:
            raise ResolveError("column slot must resolve to a single name")
        if atom.kind is TokenKind.ALNUM:
            return atom.value
        if atom.kind is TokenKind.WILDCARD:
            return "*"
        if atom.kind is TokenKind.VECTORSAME:
            if self.prior is None:
                raise ResolveError(
                    "'@' reference in the first vector has no prior vector", atom.span
                )
            return self.prior.column
        raise ResolveError(
            "matrix-same reference is not supported in the column slot", atom.span
        )

    # -- value slot -----------------------------------------------------

    def _apply_left_term(self, expr: ColumnExpr, left: Term) -> ColumnExpr:
        if left.mod is None:
            raise ResolveError("bare left term adds nothing; write it as a value")
        if left.base is None:
            base = expr
        else:
            if left.base.kind is not TokenKind.ALNUM:
                raise ResolveError(
                    "left term must start from a column name", left.base.span
                )
            base = ColumnExpr(expr.instance, left.base.value)
        if base.is_star:
            raise ResolveError("a modifier requires a named column, not '*'")
        operand = self._left_operand(left.mod, left.operand)
        return ColumnExpr(base.instance, base.column, left.mod, operand)

    def _left_operand(self, mod: str, token: Token) -> Operand:
        if mod in VECTOR_MODIFIERS:
            if token.kind is TokenKind.QUOT:
                return EmbedText(token.value)
            if token.kind is TokenKind.EMB:
                return VectorValue(token.value)
            raise ResolveError(
                f"operand of {mod!r} must be quoted text or a vector literal",
                token.span,
            )
        if token.kind in (TokenKind.INT, TokenKind.DEC):
            return Literal(token.value, _LITERAL_TYPES[token.kind])
        if token.kind is TokenKind.ALNUM:
            return ColumnExpr(self.current, token.value)
        if token.kind is TokenKind.VAR:
            return self._resolve_var(token)
        raise ResolveError(
            f"operand of {mod!r} must be a number, column, or variable", token.span
        )

    def _resolve_var(self, token: Token) -> Operand:
        name = token.value
        bound = self.bound_exprs.get(name)
        if bound is not None:
            return bound
        if name in self.runtime_params:
            return RuntimeParam(name)
        raise ResolveError(f"unbound variable ${name}", token.span)

    def _rhs_operand(self, term: Term) -> Operand:
        if term.mod is not None:
            raise ResolveError("modifier is not supported in a value list")
        token = term.base
        kind = token.kind
        if kind in _LITERAL_TYPES:
            return Literal(token.value, _LITERAL_TYPES[kind])
        if kind is TokenKind.EMB:
            return VectorValue(token.value)
        if kind is TokenKind.VAR:
            return self._resolve_var(token)
        if kind is TokenKind.VECTORSAME:
            return resolve_value_same(self.prior)
        if kind is TokenKind.MATRIXSAME:
            return self._resolve_matrix_same(token)
        raise ResolveError(f"cannot use {token.lexeme!r} as a value", token.span)

    def _resolve_matrix_same(self, token: Token) -> Operand:
        if self.prior_export is None:
            raise ResolveError(
                "'^' reference has no prior matrix", token.span
            )
        literal = self.prior_export.value_literal
        if literal is None:
            raise ResolveError(
                "'^' reference requires the prior matrix to export a literal value",
                token.span,
            )
        return literal

    # -- per-vector walk --------------------------------------------------

    def resolve_vector(self, vector: VectorIR) -> None:
        coord = (self.matrix.axis2, vector.axis1, VALUE_SLOT)
        self._resolve_table_slot(vector, coord)
        column = self._resolve_column_slot(vector)
        limit = vector.get(VALUE_SLOT)
        if limit is None:
            raise ResolveError("vector has no value slot")

        expr = ColumnExpr(self.current, column)
        if limit.left is not None:
            expr = self._apply_left_term(expr, limit.left)

        aggregate: str | None = None
        grouping = False
        direction: str | None = None
        for tag in limit.funcs:
            if tag.binding:
                if expr.is_star:
                    raise ResolveError("cannot bind '*' to a variable")
                self.env = self.env.bind(tag.name, coord)
                self.bound_exprs[tag.name] = expr
            elif tag.name == "grp":
                if expr.is_star:
                    raise ResolveError("cannot group by '*'")
                grouping = True
            elif tag.name in AGGREGATE_TAGS:
                if expr.is_star:
                    raise ResolveError("cannot aggregate '*'")
                if aggregate is not None and aggregate != tag.name:
                    raise ResolveError(
                        f"conflicting aggregate tags :{aggregate} and :{tag.name}"
                    )
                aggregate = tag.name
            else:  # asc | des, later tag wins
                direction = tag.name

        self._add_predicate(expr, limit)

        self.projections.append(Projection(expr, aggregate, grouping))
        if direction is not None:
            self.order_specs.append(OrderSpec(len(self.projections) - 1, direction))
        self.prior = _PriorVector(self.current.table, column, expr)
        self._last_limit = limit

    def _add_predicate(self, expr: ColumnExpr, limit: Limit) -> None:
        wildcards = [
            t
            for t in limit.right
            if t.is_plain_atom and t.base.kind is TokenKind.WILDCARD
        ]
        if wildcards:
            if len(limit.right) > 1:
                raise ResolveError("wildcard cannot appear in a value disjunction")
            if limit.cmp != "=":
                raise ResolveError(
                    f"wildcard value cannot be constrained with {limit.cmp!r}"
                )
            return  # wildcard adds no constraint
        if expr.is_star:
            raise ResolveError(
                "cannot constrain a wildcard column; name the column to filter on"
            )
        rhs = tuple(self._rhs_operand(term) for term in limit.right)
        if isinstance(expr.operand, (EmbedText, VectorValue, Literal, RuntimeParam)):
            self.params.append(expr.operand)
        for operand in rhs:
            if not isinstance(operand, ColumnExpr):
                self.params.append(operand)
        self.predicates.append(Predicate(expr, limit.cmp, rhs))

    # -- completion -------------------------------------------------------

    def finish(self) -> ResolvedQuery:
        export = self._build_export()
        query = ResolvedQuery(
            tuple(self.instances),
            tuple(self.projections),
            tuple(self.predicates),
            tuple(self.order_specs),
            self.matrix.meta,
            tuple(self.params),
            export,
        )
        if query.is_grouped:
            query = complete_grouping(query)
        return query

    def _build_export(self) -> SlotExport:
        if self.prior is None:
            return SlotExport()
        literal: Literal | None = None
        limit = self._last_limit
        if limit is not None and limit.cmp == "=" and len(limit.right) == 1:
            term = limit.right[0]
            if term.is_plain_atom and term.base.kind in _LITERAL_TYPES:
                literal = Literal(term.base.value, _LITERAL_TYPES[term.base.kind])
        return SlotExport(self.prior.table, self.prior.column, literal)


def complete_grouping(query: ResolvedQuery) -> ResolvedQuery:
    """Give every untagged projection the default ``last`` aggregate.

    Requires at least one grouping key or aggregate already present;
    afterwards every projection is exactly one of the two.
    """
    completed = []
    for projection in query.projections:
        if projection.grouping and projection.aggregate:
            raise ResolveError(
                "projection cannot be both a grouping key and an aggregate"
            )
        if not projection.grouping and projection.aggregate is None:
            if projection.expr.is_star:
                raise ResolveError("a grouped query cannot project '*'")
            projection = replace(projection, aggregate="last")
        completed.append(projection)
    return replace(query, projections=tuple(completed))
