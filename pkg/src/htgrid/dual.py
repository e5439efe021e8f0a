"""Virtual dual mesh: corner ownership, dual cells and boundary adjustment.

Dual vertices sit at leaf centers.  Every corner shared by ``2**d`` unmasked
leaves yields one dual cell, generated by the single leaf that owns the
corner: the deepest leaf around it, ties going to the neighbor slot with the
greatest index.  Corners touching a masked cell or the outside of the grid
produce nothing, so the (non-adjusted) dual lies strictly inside the grid.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .core import HyperTreeGrid
from .cursors import MooreSuperCursor, iter_leaves
from .indexing import corner_neighbor_cursors

DEFAULT_MAX_CELLS = 2_000_000


def max_cells_guard(default: int = DEFAULT_MAX_CELLS) -> int:
    """Resource guard for explicit meshes, read from ``HTG_MAX_CELLS``."""
    value = os.environ.get("HTG_MAX_CELLS")
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"HTG_MAX_CELLS must be an integer, got {value!r}") from None


class ResourceGuardError(RuntimeError):
    pass


@dataclass
class DualCell:
    """Leaf centers, values and global indices around one owned corner.

    Corners follow the binary rank of their position around the primal
    corner (axis 0 fastest).
    """

    points: np.ndarray
    values: np.ndarray | None
    indices: tuple[int, ...]


def is_owner(s: MooreSuperCursor, corner: int) -> bool:
    """Whether the leaf at the center of ``s`` generates the dual cell of ``corner``."""
    omega = s.center_slot
    depth = s.center.depth
    entries = s.entries
    for k in corner_neighbor_cursors(s.dimension, corner):
        c = entries[k]
        if c.masked or not c.leaf:
            return False
        if k > omega and c.depth == depth:
            return False
    return True


def generate_dual_cell(s: MooreSuperCursor, corner: int, field: str | None = None,
                       check: bool = True) -> DualCell:
    if check and not is_owner(s, corner):
        raise ValueError(f"center leaf does not own corner {corner}")
    slots = corner_neighbor_cursors(s.dimension, corner)
    cursors = [s.entries[k] for k in slots]
    points = np.array([c.center() for c in cursors])
    indices = tuple(c.global_index for c in cursors)
    values = None
    if field is not None:
        values = s.grid.fields[field][list(indices)]
    return DualCell(points, values, indices)


def _tolerance(lo, hi) -> float:
    return 1e-9 * max(1.0, float(np.max(np.abs(hi - lo))))


def adjust_dual_point(grid: HyperTreeGrid, point, leaf_origin, leaf_size) -> np.ndarray:
    """Clamp a dual point onto the grid boundary faces its source leaf touches.

    Along each used axis, if the leaf's lower (upper) face lies on the grid's
    lower (upper) boundary, the coordinate is replaced by that boundary value.
    """
    lo_g, hi_g = grid.bounding_box()
    tol = _tolerance(lo_g, hi_g)
    p = np.array(point, dtype=float)
    o = np.asarray(leaf_origin, dtype=float)
    s = np.asarray(leaf_size, dtype=float)
    lo = np.minimum(o, o + s)
    hi = np.maximum(o, o + s)
    for k in range(grid.dimension):
        if abs(lo[k] - lo_g[k]) <= tol:
            p[k] = lo_g[k]
        elif abs(hi[k] - hi_g[k]) <= tol:
            p[k] = hi_g[k]
    return p


@dataclass
class DualMesh:
    """Explicit dual mesh: shared points and ``2**d``-corner cells."""

    dimension: int
    points: np.ndarray
    cells: np.ndarray
    point_ids: np.ndarray
    adjusted: bool = False
    values: np.ndarray | None = field(default=None)

    @property
    def number_of_cells(self) -> int:
        return len(self.cells)


def owned_corners(s: MooreSuperCursor):
    return [c for c in range(2**s.dimension) if is_owner(s, c)]


def build_full_dual(grid: HyperTreeGrid, adjusted: bool = False, field: str | None = None,
                    max_cells: int | None = None) -> DualMesh:
    """Whole dual mesh of ``grid``; meant for small grids only.

    Points are shared between cells through the global index of their
    source leaf.  ``max_cells`` (default: ``HTG_MAX_CELLS`` or 2,000,000)
    bounds the number of leaves visited.
    """
    limit = max_cells_guard() if max_cells is None else max_cells
    leaves = grid.number_of_leaves()
    if leaves > limit:
        raise ResourceGuardError(f"grid has {leaves} leaves, above the limit of {limit}")
    d = grid.dimension
    point_of: dict[int, int] = {}
    points: list[tuple[float, ...]] = []
    boxes: list[tuple] = []
    ids: list[int] = []
    cells: list[list[int]] = []
    corner_slots = [corner_neighbor_cursors(d, c) for c in range(2**d)]
    for s in iter_leaves(grid, "moore"):
        for corner in range(2**d):
            if not is_owner(s, corner):
                continue
            row = []
            for k in corner_slots[corner]:
                c = s.entries[k]
                g = c.global_index
                p = point_of.get(g)
                if p is None:
                    p = len(points)
                    point_of[g] = p
                    points.append(c.center())
                    boxes.append((c.origin, c.size))
                    ids.append(g)
                row.append(p)
            cells.append(row)
    pts = np.array(points, dtype=float).reshape(-1, 3)
    if adjusted:
        for n, (o, sz) in enumerate(boxes):
            pts[n] = adjust_dual_point(grid, pts[n], o, sz)
    id_arr = np.array(ids, dtype=np.int64)
    values = grid.fields[field][id_arr] if field is not None else None
    cell_arr = np.array(cells, dtype=np.int64).reshape(-1, 2**d)
    return DualMesh(d, pts, cell_arr, id_arr, adjusted, values)
