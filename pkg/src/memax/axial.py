"""Coordinate grids induced by rank-tagged separator streams.

A stream mixes opaque atoms with separator tokens, each separator
carrying a rank ``r`` in ``[0, arity)``.  A single left-to-right scan
maintains an ``arity``-length counter: a rank-``r`` separator increments
the rank-``r`` component, zeroes every lower-ranked component, and
leaves higher ranks untouched.  Each atom is stamped with the counter
value in force when it arrives, which places it in a cell of an
``arity``-dimensional grid.

Coordinates are tuples written highest rank first: with ``arity == 3``
the coordinate ``(2, 0, 1)`` means index 2 on the rank-2 axis, 0 on the
rank-1 axis and 1 on the rank-0 axis.  Cells keep their atoms in stream
order, and empty cells are simply absent from the grid.

On top of the raw grid this module provides what a slot-oriented
language needs:

* :func:`reverse_reindex` right-aligns cells along one axis within each
  fixed higher-rank prefix (the map is an involution),
* :func:`carry_forward` inherits a missing cell's value from the
  nearest defined cell at a lower index along one axis,
* :func:`resolve_relative` follows offset-based reference atoms,
* :class:`Environment` holds left-to-right variable bindings.

Everything here is deterministic and value-like; nothing mutates after
construction except :class:`StreamingScanner`, which is a
single-consumer state machine.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Mapping

Coordinate = tuple[int, ...]


class MalformedStreamError(ValueError):
    """A separator's rank falls outside the grid's arity."""


class DanglingReferenceError(LookupError):
    """A relative reference left the non-negative coordinate lattice."""


@dataclass(frozen=True)
class RankedToken:
    """One stream element: an atom (``rank is None``) or a separator."""

    payload: Any
    rank: int | None = None

    @property
    def is_separator(self) -> bool:
        return self.rank is not None


class CellGrid:
    """Partial map from coordinates to the ordered atoms observed there.

    ``occupied()`` yields coordinates in first-occurrence order, which
    is the order cells were first written during the scan.
    """

    __slots__ = ("arity", "_cells")

    def __init__(self, arity: int, cells: dict[Coordinate, list[Any]] | None = None):
        if arity <= 0:
            raise ValueError("grid arity must be positive")
        self.arity = arity
        self._cells: dict[Coordinate, list[Any]] = cells if cells is not None else {}

    def __contains__(self, coordinate: Coordinate) -> bool:
        return coordinate in self._cells

    def __getitem__(self, coordinate: Coordinate) -> tuple[Any, ...]:
        return tuple(self._cells[coordinate])

    def get(self, coordinate: Coordinate, default=None):
        if coordinate in self._cells:
            return self[coordinate]
        return default

    def __len__(self) -> int:
        return len(self._cells)

    def __iter__(self) -> Iterator[Coordinate]:
        return iter(self._cells)

    def occupied(self) -> tuple[Coordinate, ...]:
        return tuple(self._cells)

    def items(self):
        return ((coord, tuple(atoms)) for coord, atoms in self._cells.items())

    def __eq__(self, other) -> bool:
        if not isinstance(other, CellGrid):
            return NotImplemented
        return self.arity == other.arity and self._cells == other._cells

    def __repr__(self) -> str:
        return f"CellGrid(arity={self.arity}, cells={len(self._cells)})"

    def reindexed(self, mapping: "ReindexMap") -> "CellGrid":
        """Return a new grid with every coordinate pushed through ``mapping``.

        The mapping must be bijective on the occupied set; collisions
        indicate a broken reindexing and raise ``ValueError``.
        """
        moved: dict[Coordinate, list[Any]] = {}
        for coord, atoms in self._cells.items():
            target = mapping.forward(coord)
            if target in moved:
                raise ValueError(f"reindexing collides at {target}")
            moved[target] = list(atoms)
        return CellGrid(self.arity, moved)


def scan(tokens: Iterable[RankedToken], arity: int) -> CellGrid:
    """Assign a coordinate to every atom in one left-to-right pass."""
    state = [0] * arity
    cells: dict[Coordinate, list[Any]] = {}
    for token in tokens:
        rank = token.rank
        if rank is None:
            cells.setdefault(tuple(state), []).append(token.payload)
            continue
        if not 0 <= rank < arity:
            raise MalformedStreamError(
                f"separator rank {rank} outside [0, {arity})"
            )
        position = arity - 1 - rank
        state[position] += 1
        for lower in range(position + 1, arity):
            state[lower] = 0
    return CellGrid(arity, cells)


class StreamingScanner:
    """Incremental form of :func:`scan`.

    After any prefix has been fed, :meth:`grid` equals ``scan`` applied
    to that prefix.  Snapshots are independent copies, so feeding more
    tokens never mutates a grid handed out earlier.
    """

    def __init__(self, arity: int):
        if arity <= 0:
            raise ValueError("grid arity must be positive")
        self.arity = arity
        self._state = [0] * arity
        self._cells: dict[Coordinate, list[Any]] = {}

    def feed(self, token: RankedToken) -> None:
        rank = token.rank
        if rank is None:
            self._cells.setdefault(tuple(self._state), []).append(token.payload)
            return
        if not 0 <= rank < self.arity:
            raise MalformedStreamError(
                f"separator rank {rank} outside [0, {self.arity})"
            )
        position = self.arity - 1 - rank
        self._state[position] += 1
        for lower in range(position + 1, self.arity):
            self._state[lower] = 0

    def feed_many(self, tokens: Iterable[RankedToken]) -> None:
        for token in tokens:
            self.feed(token)

    def state(self) -> Coordinate:
        return tuple(self._state)

    def grid(self) -> CellGrid:
        return CellGrid(
            self.arity, {coord: list(atoms) for coord, atoms in self._cells.items()}
        )


@dataclass(frozen=True)
class ReindexMap:
    """Reversal of one axis inside each fixed higher-rank prefix.

    ``widths`` maps a higher-rank prefix (the coordinate components of
    ranks above ``rank``) to the slice width, 1 plus the largest
    occupied index on the reversed axis.  Coordinates at or beyond the
    slice width are left unchanged, so the map is total on the lattice
    and is its own inverse.
    """

    arity: int
    rank: int
    widths: Mapping[Coordinate, int]

    def forward(self, coordinate: Coordinate) -> Coordinate:
        position = self.arity - 1 - self.rank
        prefix = coordinate[:position]
        width = self.widths.get(prefix, 0)
        component = coordinate[position]
        if component < width:
            component = width - 1 - component
        return prefix + (component,) + coordinate[position + 1:]

    def inverse(self, coordinate: Coordinate) -> Coordinate:
        return self.forward(coordinate)


def reverse_reindex(grid: CellGrid, rank: int) -> ReindexMap:
    """Build the rank-``rank`` reversal map for ``grid``'s occupied cells."""
    if not 0 <= rank < grid.arity:
        raise ValueError(f"rank {rank} outside [0, {grid.arity})")
    position = grid.arity - 1 - rank
    widths: dict[Coordinate, int] = {}
    for coord in grid.occupied():
        prefix = coord[:position]
        widths[prefix] = max(widths.get(prefix, 0), coord[position] + 1)
    return ReindexMap(grid.arity, rank, widths)


def carry_forward(cells, rank: int, coordinate: Coordinate):
    """Value at ``coordinate``, inheriting along the rank-``rank`` axis.

    Walks the rank-``rank`` component down toward zero until a defined
    cell is found.  Returns ``None`` when the whole walk is undefined;
    absence is a value here, not an error.  ``cells`` may be any object
    supporting ``in`` and item access (a :class:`CellGrid` or a dict).
    """
    arity = len(coordinate)
    if not 0 <= rank < arity:
        raise ValueError(f"rank {rank} outside [0, {arity})")
    if any(component < 0 for component in coordinate):
        raise ValueError(f"coordinate {coordinate} has a negative component")
    position = arity - 1 - rank
    probe = list(coordinate)
    while True:
        key = tuple(probe)
        if key in cells:
            return cells[key]
        if probe[position] == 0:
            return None
        probe[position] -= 1


def resolve_relative(
    atom: Any,
    at: Coordinate,
    cells,
    offsets: Mapping[Any, Coordinate],
    inheritance_rank: int,
):
    """Follow a reference atom's offset from ``at`` and carry forward.

    Raises :class:`DanglingReferenceError` when the offset leaves the
    non-negative lattice.  The atom must be present in ``offsets``.
    """
    delta = offsets[atom]
    if len(delta) != len(at):
        raise ValueError("offset arity does not match coordinate arity")
    target = tuple(a + d for a, d in zip(at, delta))
    if any(component < 0 for component in target):
        raise DanglingReferenceError(
            f"reference {atom!r} at {at} escapes the grid (offset {delta})"
        )
    return carry_forward(cells, inheritance_rank, target)


class Environment:
    """Variable bindings built left-to-right; later bindings shadow.

    Binding is non-destructive: :meth:`bind` returns a new environment,
    so earlier snapshots stay valid.
    """

    __slots__ = ("_bindings",)

    def __init__(self, bindings: Mapping[str, Coordinate] | None = None):
        self._bindings: dict[str, Coordinate] = dict(bindings or {})

    def bind(self, var: str, coordinate: Coordinate) -> "Environment":
        merged = dict(self._bindings)
        merged[var] = coordinate
        return Environment(merged)

    def lookup(self, var: str) -> Coordinate | None:
        return self._bindings.get(var)

    def __contains__(self, var: str) -> bool:
        return var in self._bindings

    def __len__(self) -> int:
        return len(self._bindings)

    def items(self):
        return self._bindings.items()

    def __repr__(self) -> str:
        return f"Environment({self._bindings!r})"
