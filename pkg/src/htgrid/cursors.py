"""Cursors over hypertrees and hypertree grids.

Five flavors, from lightest to heaviest:

* :class:`TreeCursor` walks one hypertree (topology only),
* :class:`GridCursor` adds the tree position, global index and mask state,
* :class:`GeometricCursor` also tracks the box of the current cell,
* :class:`VonNeumannSuperCursor` follows the face neighbors of a geometric center,
* :class:`MooreSuperCursor` follows all ``3**d`` neighbors, each with geometry.

Cursors only move down (``to_child``); traversals restart from a root.
A grid cursor whose tree position is outside the grid, or names a missing
tree, is *invalid*: it reports ``is_masked()`` and ``is_leaf()`` as True.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Sequence

from .core import HyperTree, HyperTreeGrid
from .indexing import (
    Neighborhood,
    center_cursor,
    child_coords,
    cursor_offsets,
    generate_traversal_tables,
)


@lru_cache(maxsize=None)
def _child_steps(d: int, f: int) -> tuple[tuple[int, ...], ...]:
    return tuple(child_coords(d, f, i) for i in range(f**d))


class TreeCursor:
    """Depth-first cursor over a single :class:`HyperTree`."""

    __slots__ = ("tree", "vertex", "depth", "_trail")

    def __init__(self, tree: HyperTree | None):
        self.tree = tree
        self.vertex = 0
        self.depth = 0
        self._trail = None

    def is_leaf(self) -> bool:
        return self.tree.is_leaf(self.vertex)

    def number_of_children(self) -> int:
        return self.tree.branch

    def _check_descent(self, i: int) -> None:
        if self.is_leaf():
            raise ValueError("cannot descend from a leaf")
        if not 0 <= i < self.tree.branch:
            raise ValueError(f"child index {i} outside [0, {self.tree.branch})")

    def to_child(self, i: int) -> None:
        self._check_descent(i)
        self._trail = (self._trail, self.vertex, i)
        self.vertex = self.tree.eldest(self.vertex) + i
        self.depth += 1

    def path(self) -> list[tuple[int, int]]:
        """(vertex, child index) pairs taken from the root down to here."""
        out = []
        t = self._trail
        while t is not None:
            t, v, i = t
            out.append((v, i))
        out.reverse()
        return out

    def copy(self):
        out = object.__new__(type(self))
        for cls in type(self).__mro__:
            for name in getattr(cls, "__slots__", ()):
                object.__setattr__(out, name, getattr(self, name))
        return out


class GridCursor(TreeCursor):
    """Tree cursor bound to a tree position of a grid."""

    __slots__ = ("grid", "coords", "start", "masked", "leaf")

    def __init__(self, grid: HyperTreeGrid, coords: Sequence[int]):
        coords = tuple(int(c) for c in coords) + (0,) * (3 - len(coords))
        tree = grid.trees.get(coords) if grid.in_extent(coords) else None
        super().__init__(tree)
        self.grid = grid
        self.coords = coords
        if tree is None:
            self.start = -1
            self.masked = True
        else:
            self.start = grid.start(coords)
            self.masked = grid.mask is not None and bool(grid.mask[self.start])
        self.leaf = self._leaf_state()

    def _leaf_state(self) -> bool:
        if self.masked:
            return True
        e = self.tree.eldest(self.vertex)
        if e < 0:
            return True
        mask = self.grid.mask
        if mask is None:
            return False
        s = self.start + e
        return bool(mask[s: s + self.tree.branch].all())

    @property
    def valid(self) -> bool:
        return self.tree is not None

    @property
    def global_index(self) -> int:
        if self.tree is None:
            raise ValueError("invalid cursor has no global index")
        return self.start + self.vertex

    def is_leaf(self) -> bool:
        return self.leaf

    def is_masked(self) -> bool:
        return self.masked

    def is_strict_leaf(self) -> bool:
        """True only for vertices without children, ignoring the mask."""
        return self.tree is None or self.tree.is_leaf(self.vertex)

    def value(self, field: str) -> float:
        return float(self.grid.fields[field][self.global_index])

    def _child_into(self, out: "GridCursor", i: int) -> None:
        out.tree = self.tree
        out.grid = self.grid
        out.coords = self.coords
        out.start = self.start
        out._trail = (self._trail, self.vertex, i)
        out.vertex = self.tree.eldest(self.vertex) + i
        out.depth = self.depth + 1
        mask = self.grid.mask
        out.masked = self.masked or (mask is not None and bool(mask[out.start + out.vertex]))
        out.leaf = out._leaf_state()

    def child(self, i: int) -> "GridCursor":
        """New cursor at child ``i``; ``self`` is left in place."""
        self._check_descent(i)
        out = object.__new__(GridCursor)
        self._child_into(out, i)
        return out

    def to_child(self, i: int) -> None:
        self._check_descent(i)
        self._child_into(self, i)

    def _check_descent(self, i: int) -> None:
        if self.tree is None:
            raise ValueError("cannot descend from an invalid cursor")
        if self.leaf:
            raise ValueError("cannot descend from a leaf")
        if not 0 <= i < self.tree.branch:
            raise ValueError(f"child index {i} outside [0, {self.tree.branch})")

    def __repr__(self) -> str:
        if self.tree is None:
            return f"{type(self).__name__}(invalid at {self.coords})"
        return (f"{type(self).__name__}(tree={self.coords}, vertex={self.vertex}, "
                f"depth={self.depth}, leaf={self.leaf}, masked={self.masked})")


class GeometricCursor(GridCursor):
    """Grid cursor that also knows the origin and signed size of its cell."""

    __slots__ = ("origin", "size")

    def __init__(self, grid: HyperTreeGrid, coords: Sequence[int]):
        super().__init__(grid, coords)
        if self.tree is None:
            self.origin = None
            self.size = None
        else:
            emb = grid.tree_embedding(self.coords)
            self.origin = emb.origin
            self.size = emb.size

    def _child_into(self, out, i: int) -> None:
        GridCursor._child_into(self, out, i)
        if type(out) is GridCursor:
            return
        f = self.tree.factor
        step = _child_steps(self.tree.dimension, f)[i]
        o = list(self.origin)
        s = list(self.size)
        for k, c in enumerate(step):
            s[k] = s[k] / f
            o[k] = o[k] + c * s[k]
        out.origin = tuple(o)
        out.size = tuple(s)

    def child(self, i: int, plain: bool = False) -> GridCursor:
        self._check_descent(i)
        out = object.__new__(GridCursor if plain else GeometricCursor)
        self._child_into(out, i)
        return out

    def center(self) -> tuple[float, float, float]:
        return tuple(o + 0.5 * s for o, s in zip(self.origin, self.size))

    def box(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """(min corner, max corner) of the cell, whatever the coordinate direction."""
        lo = tuple(min(o, o + s) for o, s in zip(self.origin, self.size))
        hi = tuple(max(o, o + s) for o, s in zip(self.origin, self.size))
        return lo, hi


class _SuperCursor:
    """Neighborhood of cursors descending together (one slot per offset)."""

    kind: Neighborhood
    _geometric_neighbors = True

    def __init__(self, grid: HyperTreeGrid, coords: Sequence[int]):
        coords = tuple(int(c) for c in coords) + (0,) * (3 - len(coords))
        if not grid.in_extent(coords):
            raise IndexError(f"tree coordinates {coords} outside extent {grid.extent}")
        grid._sync()
        d = grid.dimension
        self.grid = grid
        self.dimension = d
        self.tables = generate_traversal_tables(self.kind, d, grid.factor)
        self.offsets = cursor_offsets(self.kind, d)
        self.center_slot = center_cursor(self.kind, d)
        entries = []
        for j, w in enumerate(self.offsets):
            nc = tuple(coords[k] + (w[k] if k < d else 0) for k in range(3))
            if j == self.center_slot or self._geometric_neighbors:
                entries.append(GeometricCursor(grid, nc))
            else:
                entries.append(GridCursor(grid, nc))
        self.entries: list[GridCursor] = entries
        self._trail = None

    @property
    def number_of_cursors(self) -> int:
        return len(self.entries)

    @property
    def center(self) -> GeometricCursor:
        return self.entries[self.center_slot]  # type: ignore[return-value]

    def cursor(self, j: int) -> GridCursor:
        """Entry ``j``; treat as read-only (entries are shared between states)."""
        return self.entries[j]

    def is_leaf(self) -> bool:
        return self.center.leaf

    def is_masked(self) -> bool:
        return self.center.masked

    @property
    def depth(self) -> int:
        return self.center.depth

    @property
    def global_index(self) -> int:
        return self.center.global_index

    def to_child(self, i: int) -> None:
        """Move the whole neighborhood to the neighborhood of child ``i``.

        Every slot is derived from one slot of the current state through the
        traversal tables and descends one level if that cursor is refined.
        """
        center = self.center
        center._check_descent(i)
        parents = self.tables.to_parent_cursor[i]
        children = self.tables.to_child_index[i]
        old = self.entries
        new = []
        geo = self._geometric_neighbors
        cslot = self.center_slot
        for j in range(len(old)):
            c = old[parents[j]]
            if c.leaf:
                new.append(c)
            elif geo or j == cslot:
                new.append(c.child(children[j]))
            elif type(c) is GeometricCursor:
                new.append(c.child(children[j], plain=True))
            else:
                new.append(c.child(children[j]))
        self.entries = new
        self._trail = (self._trail, i)

    def copy(self):
        out = object.__new__(type(self))
        out.__dict__.update(self.__dict__)
        out.entries = list(self.entries)
        return out

    def child_indices(self) -> list[int]:
        """Child indices taken since the root."""
        out = []
        t = self._trail
        while t is not None:
            t, i = t
            out.append(i)
        out.reverse()
        return out


class VonNeumannSuperCursor(_SuperCursor):
    """Geometric center plus plain cursors on the ``2d`` face neighbors."""

    kind = Neighborhood.VON_NEUMANN
    _geometric_neighbors = False


class MooreSuperCursor(_SuperCursor):
    """Geometric cursors on the center and all ``3**d - 1`` neighbors."""

    kind = Neighborhood.MOORE
    _geometric_neighbors = True


_FLAVORS = {
    "tree": None,
    "grid": GridCursor,
    "geometric": GeometricCursor,
    "von-neumann": VonNeumannSuperCursor,
    "moore": MooreSuperCursor,
}


def to_root(grid: HyperTreeGrid, coords: Sequence[int], flavor: str = "geometric"):
    """Cursor of the requested flavor placed at the root of tree ``coords``.

    ``flavor`` is one of ``tree``, ``grid``, ``geometric``, ``von-neumann``
    or ``moore``.
    """
    key = str(flavor).lower().replace("_", "-")
    if key not in _FLAVORS:
        raise ValueError(f"unknown cursor flavor {flavor!r}")
    coords = tuple(int(c) for c in coords) + (0,) * (3 - len(coords))
    if not grid.in_extent(coords):
        raise IndexError(f"tree coordinates {coords} outside extent {grid.extent}")
    if key == "tree":
        return TreeCursor(grid.tree(coords))
    grid._sync()
    return _FLAVORS[key](grid, coords)


def cursor_to_child(cursor, i: int) -> None:
    cursor.to_child(i)


def supercursor_to_child(s: _SuperCursor, i: int) -> None:
    s.to_child(i)


def iter_leaves(grid: HyperTreeGrid, flavor: str = "geometric"):
    """Depth-first walk yielding a cursor at every unmasked effective leaf.

    Trees are visited in root order and children in child-index order.  The
    yielded cursor must not be kept after the next iteration step.
    """
    grid._sync()
    for coords in grid.tree_coords():
        root = to_root(grid, coords, flavor)
        stack = [root]
        while stack:
            c = stack.pop()
            if c.is_masked():
                continue
            if c.is_leaf():
                yield c
                continue
            for i in range(grid.branch - 1, -1, -1):
                child = c.copy()
                child.to_child(i)
                stack.append(child)
