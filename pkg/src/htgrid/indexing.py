"""Child index maps, neighborhood cursor encodings and traversal tables.

Children of a coarse cell are ranked by the lexicographic order over their
child coordinates, with axis 0 varying fastest::

    index = c[0] + c[1] * f + c[2] * f**2

Supercursor slots use the same rule on offsets in ``{-1, 0, 1}**d``
(shifted to ``{0, 1, 2}``), so the Moore center slot is ``(3**d - 1) // 2``.
Von Neumann slots keep only the offsets with L1 norm <= 1, in that same
order, which puts the center at index ``d``.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

SUPPORTED_DIMENSIONS = (1, 2, 3)
SUPPORTED_FACTORS = (2, 3)


class Neighborhood(enum.Enum):
    VON_NEUMANN = "von-neumann"
    MOORE = "moore"

    @classmethod
    def parse(cls, value) -> "Neighborhood":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "-")
        for member in cls:
            if member.value == key or member.name.lower().replace("_", "-") == key:
                return member
        raise ValueError(f"unknown neighborhood kind {value!r}")


def _check_df(d: int, f: int) -> None:
    if d not in SUPPORTED_DIMENSIONS:
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
    if f not in SUPPORTED_FACTORS:
        raise ValueError(f"branching factor must be 2 or 3, got {f}")


def child_index(d: int, f: int, coords: Sequence[int]) -> int:
    """Rank of ``coords`` in ``[0, f)**d`` (axis 0 least significant)."""
    if len(coords) != d:
        raise ValueError(f"expected {d} child coordinates, got {len(coords)}")
    index = 0
    weight = 1
    for c in coords:
        if not 0 <= c < f:
            raise ValueError(f"child coordinate {c} outside [0, {f})")
        index += c * weight
        weight *= f
    return index


def child_coords(d: int, f: int, index: int) -> tuple[int, ...]:
    if not 0 <= index < f**d:
        raise ValueError(f"child index {index} outside [0, {f ** d})")
    out = []
    for _ in range(d):
        index, c = divmod(index, f)
        out.append(c)
    return tuple(out)


@lru_cache(maxsize=None)
def _child_coords_table(d: int, f: int) -> tuple[tuple[int, ...], ...]:
    return tuple(child_coords(d, f, i) for i in range(f**d))


def number_of_cursors(kind, d: int) -> int:
    kind = Neighborhood.parse(kind)
    if d not in SUPPORTED_DIMENSIONS:
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
    return 3**d if kind is Neighborhood.MOORE else 2 * d + 1


def center_cursor(kind, d: int) -> int:
    kind = Neighborhood.parse(kind)
    return (3**d - 1) // 2 if kind is Neighborhood.MOORE else d


@lru_cache(maxsize=None)
def _offsets(kind: Neighborhood, d: int) -> tuple[tuple[int, ...], ...]:
    moore = [tuple(c - 1 for c in child_coords(d, 3, r)) for r in range(3**d)]
    if kind is Neighborhood.MOORE:
        return tuple(moore)
    return tuple(o for o in moore if sum(abs(x) for x in o) <= 1)


def cursor_offsets(kind, d: int) -> tuple[tuple[int, ...], ...]:
    """All slot offsets of a neighborhood, in slot order."""
    return _offsets(Neighborhood.parse(kind), d)


def cursor_offset_encoding(kind, d: int, cursor: int) -> tuple[int, ...]:
    offsets = cursor_offsets(kind, d)
    if not 0 <= cursor < len(offsets):
        raise ValueError(f"cursor index {cursor} outside [0, {len(offsets)})")
    return offsets[cursor]


@lru_cache(maxsize=None)
def _slot_lookup(kind: Neighborhood, d: int) -> dict[tuple[int, ...], int]:
    return {o: i for i, o in enumerate(_offsets(kind, d))}


def cursor_index(kind, d: int, offset: Sequence[int]) -> int:
    """Inverse of :func:`cursor_offset_encoding`."""
    lookup = _slot_lookup(Neighborhood.parse(kind), d)
    try:
        return lookup[tuple(offset)]
    except KeyError:
        raise ValueError(f"offset {tuple(offset)} is not a {kind} slot in d={d}") from None


@lru_cache(maxsize=None)
def _corner_table(d: int) -> tuple[tuple[int, ...], ...]:
    rows = []
    for corner in range(2**d):
        bits = child_coords(d, 2, corner)
        # bit 0 -> offsets {-1, 0}, bit 1 -> offsets {0, 1}
        choices = [(-1, 0) if b == 0 else (0, 1) for b in bits]
        slots = sorted(
            cursor_index(Neighborhood.MOORE, d, o) for o in itertools.product(*choices)
        )
        rows.append(tuple(slots))
    return tuple(rows)


def corner_neighbor_cursors(d: int, corner: int) -> tuple[int, ...]:
    """Moore slots of the ``2**d`` cells sharing corner ``corner`` of the center.

    Corners are ranked like binary child coordinates.  The returned slots are
    ascending, which is also the binary rank of their position around the
    corner.
    """
    if d not in SUPPORTED_DIMENSIONS:
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
    if not 0 <= corner < 2**d:
        raise ValueError(f"corner index {corner} outside [0, {2 ** d})")
    return _corner_table(d)[corner]


@dataclass(frozen=True)
class TraversalTables:
    """Child-cursor to parent-cursor and child-cursor to child-index maps.

    ``to_parent_cursor[i][j]`` is the slot of the parent supercursor that
    slot ``j`` of the supercursor centered on child ``i`` derives from;
    ``to_child_index[i][j]`` is the child to descend into when that parent
    slot points at a coarse cell.
    """

    kind: Neighborhood
    dimension: int
    factor: int
    to_parent_cursor: tuple[tuple[int, ...], ...]
    to_child_index: tuple[tuple[int, ...], ...]

    @property
    def number_of_cursors(self) -> int:
        return len(self.to_parent_cursor[0])

    @property
    def number_of_children(self) -> int:
        return len(self.to_parent_cursor)

    @property
    def entry_count(self) -> int:
        """Entries of one table (both tables have this size)."""
        return self.number_of_children * self.number_of_cursors


@lru_cache(maxsize=None)
def _generate(kind: Neighborhood, d: int, f: int) -> TraversalTables:
    offsets = _offsets(kind, d)
    parent_rows = []
    child_rows = []
    for i in range(f**d):
        c = child_coords(d, f, i)
        prow = []
        crow = []
        for w in offsets:
            q = [ck + wk for ck, wk in zip(c, w)]
            parent_offset = tuple(qk // f for qk in q)
            # a face offset from a child crosses at most one parent face, so
            # the parent offset is always a slot of the same neighborhood
            prow.append(cursor_index(kind, d, parent_offset))
            crow.append(child_index(d, f, [qk % f for qk in q]))
        parent_rows.append(tuple(prow))
        child_rows.append(tuple(crow))
    return TraversalTables(kind, d, f, tuple(parent_rows), tuple(child_rows))


def generate_traversal_tables(kind, d: int, f: int) -> TraversalTables:
    _check_df(d, f)
    return _generate(Neighborhood.parse(kind), d, f)


def table_census() -> tuple[int, int]:
    """Number of traversal tables and total entry count over all supported cases."""
    tables = 0
    entries = 0
    for kind in Neighborhood:
        for d in SUPPORTED_DIMENSIONS:
            for f in SUPPORTED_FACTORS:
                t = generate_traversal_tables(kind, d, f)
                # one child-cursor-to-parent table and one child-cursor-to-child table
                tables += 2
                entries += len(t.to_parent_cursor) * t.number_of_cursors
                entries += len(t.to_child_index) * t.number_of_cursors
    return tables, entries


def table_rows_csv(tables: TraversalTables, which: str = "parent") -> str:
    """CSV dump with one row per child index."""
    rows = tables.to_parent_cursor if which == "parent" else tables.to_child_index
    lines = ["child," + ",".join(f"c{j}" for j in range(tables.number_of_cursors))]
    for i, row in enumerate(rows):
        lines.append(f"{i}," + ",".join(str(v) for v in row))
    return "\n".join(lines) + "\n"
