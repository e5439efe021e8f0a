"""Hypertrees, hypertree grids and the canonical memory model.

A :class:`HyperTree` stores only its strict (refined) vertices.  Children of
a vertex are created as one contiguous block of ``f**d`` vertex indices at
the end of the vertex range, so a strict vertex needs the index of its
eldest child and a block needs the index of the vertex that created it::

    eldest_child[v]       eldest child of v, or -1 when v is not strict
    parent_of_block[b-1]  vertex that created block b (block 0 belongs to the root)

``eldest_child`` is indexed by vertex and truncated after the last strict
vertex; its length therefore depends on construction order, which is what
the memory model charges for.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .indexing import SUPPORTED_DIMENSIONS, SUPPORTED_FACTORS

INDEX_BYTES = 4
REAL_BYTES = 8

TreeCoords = tuple[int, int, int]


class HyperTree:
    """Topology of the refinement tree of one root cell."""

    __slots__ = ("dimension", "factor", "branch", "eldest_child", "parent_of_block", "depth")

    def __init__(self, dimension: int, factor: int):
        if dimension not in SUPPORTED_DIMENSIONS:
            raise ValueError(f"dimension must be 1, 2 or 3, got {dimension}")
        if factor not in SUPPORTED_FACTORS:
            raise ValueError(f"branching factor must be 2 or 3, got {factor}")
        self.dimension = dimension
        self.factor = factor
        self.branch = factor**dimension
        self.eldest_child: list[int] = []
        self.parent_of_block: list[int] = []
        self.depth = 0

    @property
    def strict_count(self) -> int:
        if not self.eldest_child:
            return 0
        return len(self.parent_of_block) + 1

    @property
    def vertex_count(self) -> int:
        return 1 + self.strict_count * self.branch

    @property
    def leaf_count(self) -> int:
        return self.vertex_count - self.strict_count

    def __len__(self) -> int:
        return self.vertex_count

    def __repr__(self) -> str:
        return (f"HyperTree(d={self.dimension}, f={self.factor}, "
                f"vertices={self.vertex_count}, depth={self.depth})")

    def eldest(self, vertex: int) -> int:
        """Eldest child of ``vertex``, -1 for a leaf."""
        if vertex < len(self.eldest_child):
            return self.eldest_child[vertex]
        return -1

    def is_leaf(self, vertex: int) -> bool:
        return self.eldest(vertex) < 0

    def parent(self, vertex: int) -> int:
        """Parent vertex; -1 for the root."""
        if vertex == 0:
            return -1
        block = (vertex - 1) // self.branch
        return 0 if block == 0 else self.parent_of_block[block - 1]

    def child_position(self, vertex: int) -> int:
        """Child index of ``vertex`` within its sibling block."""
        if vertex == 0:
            raise ValueError("the root has no child index")
        return (vertex - 1) % self.branch

    def vertex_depth(self, vertex: int) -> int:
        depth = 0
        while vertex > 0:
            vertex = self.parent(vertex)
            depth += 1
        return depth

    def subdivide(self, vertex: int) -> int:
        """Refine leaf ``vertex``; returns the eldest child of the new block."""
        n = self.vertex_count
        if not 0 <= vertex < n:
            raise IndexError(f"vertex {vertex} outside [0, {n})")
        if not self.is_leaf(vertex):
            raise ValueError(f"vertex {vertex} is already refined")
        if vertex >= len(self.eldest_child):
            self.eldest_child.extend([-1] * (vertex + 1 - len(self.eldest_child)))
        if n > 1:
            self.parent_of_block.append(vertex)
        self.eldest_child[vertex] = n
        self.depth = max(self.depth, self.vertex_depth(vertex) + 1)
        return n

    def strict_vertices(self) -> list[int]:
        return [v for v, e in enumerate(self.eldest_child) if e >= 0]

    def topology_entries(self) -> int:
        """Stored index entries: eldest-child slots plus block parents."""
        return len(self.eldest_child) + len(self.parent_of_block)

    def is_breadth_first(self) -> bool:
        """True when blocks were created in increasing vertex order.

        Such trees are fully described by one strict/leaf bit per vertex.
        """
        p = self.parent_of_block
        return all(a < b for a, b in zip(p, p[1:]))

    def refinement_bits(self) -> np.ndarray:
        """One boolean per vertex in index order, True for strict vertices."""
        bits = np.zeros(self.vertex_count, dtype=bool)
        if self.eldest_child:
            e = np.asarray(self.eldest_child)
            bits[: len(e)] = e >= 0
        return bits

    @classmethod
    def from_refinement_bits(cls, dimension: int, factor: int, bits) -> "HyperTree":
        """Rebuild a breadth-first tree from its per-vertex strict bits."""
        tree = cls(dimension, factor)
        bits = np.asarray(bits, dtype=bool)
        strict = np.flatnonzero(bits)
        m = len(strict)
        expected = 1 + m * tree.branch
        if len(bits) != expected:
            raise ValueError(
                f"refinement bitstring has {len(bits)} bits but {m} strict vertices "
                f"require {expected}"
            )
        if m == 0:
            return tree
        eldest = np.full(strict[-1] + 1, -1, dtype=np.int64)
        eldest[strict] = 1 + np.arange(m, dtype=np.int64) * tree.branch
        # the k-th strict vertex must exist before block k is created
        if np.any(strict >= 1 + np.arange(m) * tree.branch):
            raise ValueError("refinement bitstring references a vertex before it exists")
        tree.eldest_child = eldest.tolist()
        tree.parent_of_block = strict[1:].tolist()
        owners = np.repeat(strict, tree.branch)
        depth = np.zeros(expected, dtype=np.int64)
        while True:
            nxt = depth[owners] + 1
            if np.array_equal(nxt, depth[1:]):
                break
            depth[1:] = nxt
        tree.depth = int(depth.max())
        return tree

    def copy(self) -> "HyperTree":
        out = HyperTree(self.dimension, self.factor)
        out.eldest_child = list(self.eldest_child)
        out.parent_of_block = list(self.parent_of_block)
        out.depth = self.depth
        return out

    def eldest_array(self) -> np.ndarray:
        """Eldest child of every vertex (-1 for leaves)."""
        out = np.full(self.vertex_count, -1, dtype=np.int64)
        out[: len(self.eldest_child)] = self.eldest_child
        return out

    def parent_array(self) -> np.ndarray:
        """Parent of every vertex (-1 for the root)."""
        owners = np.array([0] + self.parent_of_block, dtype=np.int64)
        out = np.empty(self.vertex_count, dtype=np.int64)
        out[0] = -1
        out[1:] = np.repeat(owners, self.branch) if self.eldest_child else owners[:0]
        return out

    def depth_array(self) -> np.ndarray:
        parent = self.parent_array()
        depth = np.zeros(self.vertex_count, dtype=np.int64)
        for _ in range(self.depth):
            depth[1:] = depth[parent[1:]] + 1
        return depth

    def breadth_first_order(self) -> list[int]:
        """Vertices in breadth-first order, children in child-index order."""
        order = [0]
        head = 0
        while head < len(order):
            e = self.eldest(order[head])
            if e >= 0:
                order.extend(range(e, e + self.branch))
            head += 1
        return order


@dataclass(frozen=True)
class GeometricEmbedding:
    """Origin, signed size and orientation of a box in grid length units."""

    origin: tuple[float, float, float]
    size: tuple[float, float, float]
    orientation: int = 0

    def bounds(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        lo = tuple(min(o, o + s) for o, s in zip(self.origin, self.size))
        hi = tuple(max(o, o + s) for o, s in zip(self.origin, self.size))
        return lo, hi


@dataclass(frozen=True)
class MemoryReport:
    topology_bytes: int
    coordinates_bytes: int
    mask_bytes: int
    attribute_bytes: int

    @property
    def total_bytes(self) -> int:
        return self.topology_bytes + self.coordinates_bytes + self.mask_bytes + self.attribute_bytes


def world_axes(d: int, orientation: int) -> tuple[int, int, int]:
    """World axis of each internal coordinate slot.

    A 2-dimensional grid with orientation ``o`` lies in the plane normal to
    world axis ``o``; a 1-dimensional grid runs along world axis ``o``.  Used
    slots map to the remaining world axes in increasing order (for d=2) and
    fixed slots follow.
    """
    if d == 3:
        return (0, 1, 2)
    others = tuple(a for a in range(3) if a != orientation)
    if d == 2:
        return others + (orientation,)
    return (orientation,) + others


def _default_orientation(d: int) -> int:
    # d=2 grids lie in the xy-plane (normal z); d=1 grids along x
    return 2 if d == 2 else 0


class HyperTreeGrid:
    """Cartesian arrangement of hypertrees with rectilinear root coordinates.

    Attributes and the material mask are flat arrays addressed by global
    index ``local + start[tree]``.  Starts are (re)computed by
    :meth:`finalize`, which runs implicitly the first time a global index is
    needed after the topology changed.
    """

    def __init__(self, dimension: int, factor: int, extent: Sequence[int],
                 coordinates: Sequence[Sequence[float]], orientation: int | None = None):
        if dimension not in SUPPORTED_DIMENSIONS:
            raise ValueError(f"dimension must be 1, 2 or 3, got {dimension}")
        if factor not in SUPPORTED_FACTORS:
            raise ValueError(f"branching factor must be 2 or 3, got {factor}")
        extent = tuple(int(e) for e in extent) + (1,) * (3 - len(extent))
        if len(extent) != 3 or any(e < 1 for e in extent):
            raise ValueError(f"invalid extent {extent}")
        if any(extent[k] != 1 for k in range(dimension, 3)):
            raise ValueError(f"extent {extent} must be 1 along axes >= {dimension}")
        self.dimension = dimension
        self.factor = factor
        self.extent: TreeCoords = extent  # type: ignore[assignment]
        self.coordinates = self._check_coordinates(dimension, extent, coordinates)
        if orientation is None:
            orientation = _default_orientation(dimension)
        if dimension == 3 and orientation != 0:
            raise ValueError("orientation must be 0 for 3-dimensional grids")
        if not 0 <= orientation <= 2:
            raise ValueError(f"orientation must be 0, 1 or 2, got {orientation}")
        self.orientation = orientation
        self.trees: dict[TreeCoords, HyperTree] = {}
        self.mask: np.ndarray | None = None
        self.fields: dict[str, np.ndarray] = {}
        self._starts: dict[TreeCoords, int] = {}
        self._layout: dict[TreeCoords, tuple[int, int]] = {}
        self._size = 0
        self._dirty = True
        self._explicit_starts = False

    @staticmethod
    def _check_coordinates(d, extent, coordinates) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        coordinates = list(coordinates)
        if len(coordinates) < d or len(coordinates) > 3:
            raise ValueError(f"expected coordinate lists for {d} axes, got {len(coordinates)}")
        out = []
        for k in range(3):
            if k < d:
                c = np.asarray(coordinates[k], dtype=np.float64)
                if c.ndim != 1 or len(c) != extent[k] + 1:
                    raise ValueError(
                        f"axis {k}: expected {extent[k] + 1} coordinates, got {np.shape(c)}"
                    )
                step = np.diff(c)
                if not (np.all(step > 0) or np.all(step < 0)):
                    raise ValueError(f"axis {k}: coordinates are not strictly monotone")
            else:
                # unused axes store the single fixed coordinate
                if k < len(coordinates):
                    c = np.asarray(coordinates[k], dtype=np.float64).reshape(-1)[:1]
                    if len(c) == 0:
                        c = np.zeros(1)
                else:
                    c = np.zeros(1)
            c.setflags(write=False)
            out.append(c)
        return tuple(out)  # type: ignore[return-value]

    # -- topology -----------------------------------------------------------

    @property
    def branch(self) -> int:
        return self.factor**self.dimension

    def root_order(self) -> Iterator[TreeCoords]:
        """All root positions, axis 0 varying fastest."""
        for k in range(self.extent[2]):
            for j in range(self.extent[1]):
                for i in range(self.extent[0]):
                    yield (i, j, k)

    def tree_coords(self) -> list[TreeCoords]:
        """Positions holding a tree, in root order."""
        return [c for c in self.root_order() if c in self.trees]

    def in_extent(self, coords: Sequence[int]) -> bool:
        return all(0 <= c < e for c, e in zip(coords, self.extent))

    def tree(self, coords: Sequence[int]) -> HyperTree:
        coords = tuple(coords)
        if not self.in_extent(coords):
            raise IndexError(f"tree coordinates {coords} outside extent {self.extent}")
        try:
            return self.trees[coords]
        except KeyError:
            raise KeyError(f"no tree at {coords}") from None

    def get_tree(self, coords: Sequence[int]) -> HyperTree | None:
        return self.trees.get(tuple(coords))

    def set_tree(self, coords: Sequence[int], tree: HyperTree) -> None:
        coords = tuple(coords)
        if not self.in_extent(coords):
            raise IndexError(f"tree coordinates {coords} outside extent {self.extent}")
        if tree.dimension != self.dimension or tree.factor != self.factor:
            raise ValueError("tree dimension/factor does not match the grid")
        self.trees[coords] = tree
        self._dirty = True

    def remove_tree(self, coords: Sequence[int]) -> None:
        del self.trees[tuple(coords)]
        self._dirty = True

    def subdivide(self, coords: Sequence[int], vertex: int) -> int:
        e = self.tree(coords).subdivide(vertex)
        self._dirty = True
        return e

    def number_of_trees(self) -> int:
        return len(self.trees)

    def number_of_vertices(self) -> int:
        return sum(t.vertex_count for t in self.trees.values())

    def number_of_leaves(self) -> int:
        return sum(t.leaf_count for t in self.trees.values())

    def max_depth(self) -> int:
        return max((t.depth for t in self.trees.values()), default=0)

    # -- global indexing ----------------------------------------------------

    def finalize(self, starts: dict | None = None) -> "HyperTreeGrid":
        """Fix global index starts and lay out mask/attributes accordingly.

        Without ``starts``, trees are numbered cumulatively in root order.
        Values already attached to a (tree, local index) pair survive.
        """
        order = self.tree_coords()
        if starts is None:
            new = {}
            s = 0
            for c in order:
                new[c] = s
                s += self.trees[c].vertex_count
            self._explicit_starts = False
        else:
            new = {tuple(c): int(v) for c, v in starts.items()}
            if set(new) != set(order):
                raise ValueError("explicit starts must cover exactly the present trees")
            spans = sorted((new[c], new[c] + self.trees[c].vertex_count) for c in order)
            if any(lo < 0 for lo, _ in spans):
                raise ValueError("global index starts must be nonnegative")
            for (a0, a1), (b0, _) in zip(spans, spans[1:]):
                if b0 < a1:
                    raise ValueError("explicit starts give overlapping global index ranges")
            self._explicit_starts = True
        size = max((new[c] + self.trees[c].vertex_count for c in order), default=0)

        def relayout(old: np.ndarray, fill) -> np.ndarray:
            out = np.full(size, fill, dtype=old.dtype)
            for c in order:
                if c in self._layout:
                    s0, n0 = self._layout[c]
                    n = min(n0, self.trees[c].vertex_count)
                    out[new[c]: new[c] + n] = old[s0: s0 + n]
            return out

        if self._layout != {c: (new[c], self.trees[c].vertex_count) for c in order} or size != self._size:
            if self.mask is not None:
                self.mask = relayout(self.mask, False)
            self.fields = {k: relayout(v, 0.0) for k, v in self.fields.items()}
        self._starts = new
        self._layout = {c: (new[c], self.trees[c].vertex_count) for c in order}
        self._size = size
        self._dirty = False
        return self

    def _sync(self) -> None:
        if self._dirty:
            self.finalize()

    @property
    def starts(self) -> dict[TreeCoords, int]:
        self._sync()
        return self._starts

    def start(self, coords: Sequence[int]) -> int:
        self._sync()
        return self._starts[tuple(coords)]

    @property
    def size(self) -> int:
        """Length of every global array (max global index + 1)."""
        self._sync()
        return self._size

    def global_index(self, coords: Sequence[int], local: int) -> int:
        tree = self.tree(coords)
        if not 0 <= local < tree.vertex_count:
            raise IndexError(f"local index {local} outside [0, {tree.vertex_count})")
        return local + self.start(coords)

    # -- mask and attributes --------------------------------------------------

    @property
    def has_mask(self) -> bool:
        return self.mask is not None

    def ensure_mask(self) -> np.ndarray:
        self._sync()
        if self.mask is None:
            self.mask = np.zeros(self._size, dtype=bool)
        return self.mask

    def mask_get(self, index: int) -> bool:
        self._sync()
        if not 0 <= index < self._size:
            raise IndexError(f"global index {index} outside [0, {self._size})")
        return bool(self.mask[index]) if self.mask is not None else False

    def mask_set(self, index: int, flag: bool = True) -> None:
        mask = self.ensure_mask()
        if not 0 <= index < self._size:
            raise IndexError(f"global index {index} outside [0, {self._size})")
        mask[index] = bool(flag)

    def set_mask(self, mask) -> None:
        self._sync()
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (self._size,):
            raise ValueError(f"mask must have length {self._size}")
        self.mask = mask

    def add_field(self, name: str, values=None) -> np.ndarray:
        self._sync()
        if values is None:
            arr = np.zeros(self._size)
        else:
            arr = np.asarray(values, dtype=np.float64)
            if arr.shape != (self._size,):
                raise ValueError(f"field {name!r} must have length {self._size}, got {arr.shape}")
        self.fields[name] = arr
        return arr

    def field(self, name: str) -> np.ndarray:
        self._sync()
        try:
            return self.fields[name]
        except KeyError:
            raise KeyError(f"unknown field {name!r}") from None

    # -- geometry -----------------------------------------------------------

    def tree_embedding(self, coords: Sequence[int]) -> GeometricEmbedding:
        coords = tuple(coords)
        if len(coords) != 3 or not self.in_extent(coords):
            raise IndexError(f"tree coordinates {coords} outside extent {self.extent}")
        origin = []
        size = []
        for k in range(3):
            c = self.coordinates[k]
            if k < self.dimension:
                origin.append(float(c[coords[k]]))
                size.append(float(c[coords[k] + 1] - c[coords[k]]))
            else:
                origin.append(float(c[0]))
                size.append(0.0)
        return GeometricEmbedding(tuple(origin), tuple(size), self.orientation)

    def bounds(self) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
        """Origin (first coordinates) and signed size of the grid prism."""
        origin = tuple(float(c[0]) for c in self.coordinates)
        size = tuple(
            float(self.coordinates[k][-1] - self.coordinates[k][0]) if k < self.dimension else 0.0
            for k in range(3)
        )
        return origin, size  # type: ignore[return-value]

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        """Componentwise (min, max) corners, valid for any coordinate direction."""
        lo = np.array([c.min() for c in self.coordinates])
        hi = np.array([c.max() for c in self.coordinates])
        return lo, hi

    def embed_points(self, points) -> np.ndarray:
        """Map internal (slot-ordered) coordinates to world coordinates."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        out = np.empty_like(pts)
        out[:, list(world_axes(self.dimension, self.orientation))] = pts
        return out

    # -- copies -------------------------------------------------------------

    def shallow_copy(self, coordinates=None) -> "HyperTreeGrid":
        """New grid object sharing trees, starts, mask and attribute arrays."""
        self._sync()
        out = object.__new__(HyperTreeGrid)
        out.__dict__.update(self.__dict__)
        if coordinates is not None:
            out.coordinates = coordinates
        out.fields = dict(self.fields)
        return out

    def __repr__(self) -> str:
        return (f"HyperTreeGrid(d={self.dimension}, f={self.factor}, extent={self.extent}, "
                f"trees={self.number_of_trees()}, vertices={self.number_of_vertices()})")


def new_grid(d: int, f: int, extent: Sequence[int], coordinates: Sequence[Sequence[float]] | None = None,
             orientation: int | None = None) -> HyperTreeGrid:
    """Grid of single-leaf trees at every root position.

    ``coordinates`` defaults to unit spacing starting at 0 on each used axis.
    """
    extent = tuple(extent) + (1,) * (3 - len(tuple(extent)))
    if coordinates is None:
        coordinates = [np.arange(extent[k] + 1, dtype=float) for k in range(d)]
    grid = HyperTreeGrid(d, f, extent, coordinates, orientation)
    for c in grid.root_order():
        grid.trees[c] = HyperTree(d, f)
    grid.finalize()
    return grid


def tree_embedding(grid: HyperTreeGrid, coords: Sequence[int]) -> GeometricEmbedding:
    return grid.tree_embedding(coords)


def grid_bounds(grid: HyperTreeGrid):
    return grid.bounds()


def global_index(grid: HyperTreeGrid, coords: Sequence[int], local: int) -> int:
    return grid.global_index(coords, local)


def memory_report(grid: HyperTreeGrid) -> MemoryReport:
    """Byte counts under 4-byte indices, 8-byte reals and a 1-bit mask."""
    topology = INDEX_BYTES * sum(t.topology_entries() for t in grid.trees.values())
    coordinates = REAL_BYTES * sum(len(c) for c in grid.coordinates)
    mask = math.ceil(grid.size / 8) if grid.mask is not None else 0
    attributes = REAL_BYTES * grid.size * len(grid.fields)
    return MemoryReport(topology, coordinates, mask, attributes)


def shared_memory_report(grids: Iterable[HyperTreeGrid]) -> MemoryReport:
    """Memory model of several grids, counting shared storage once.

    Trees, coordinate arrays, masks and attribute arrays are deduplicated by
    identity, which is how shallow-copied filter outputs share storage.
    """
    seen: set[int] = set()
    topology = coords = mask = attrs = 0
    for g in grids:
        for t in g.trees.values():
            if id(t) not in seen:
                seen.add(id(t))
                topology += INDEX_BYTES * t.topology_entries()
        for c in g.coordinates:
            if id(c) not in seen:
                seen.add(id(c))
                coords += REAL_BYTES * len(c)
        if g.mask is not None and id(g.mask) not in seen:
            seen.add(id(g.mask))
            mask += math.ceil(len(g.mask) / 8)
        for a in g.fields.values():
            if id(a) not in seen:
                seen.add(id(a))
                attrs += REAL_BYTES * len(a)
    return MemoryReport(topology, coords, mask, attrs)


def topology_bounds(m: int, f: int, d: int) -> tuple[int, int]:
    """Lower and upper topology byte bounds of a tree with ``m >= 1`` strict vertices."""
    if m < 1:
        raise ValueError("bounds hold for trees with at least one strict vertex")
    return INDEX_BYTES * (2 * m - 1), INDEX_BYTES * (1 + (m - 1) * (1 + f**d))
