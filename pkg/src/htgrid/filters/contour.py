"""Two-pass iso-contouring on the virtual dual.

The first pass walks every tree bottom-up with a plain grid cursor and
records, per vertex and iso-value, whether the cell lies above the iso-value
(``S``) and, for coarse cells, whether the subtree still has to be visited
(``T``).  The second pass walks with a Moore supercursor, skips coarse cells
whose whole neighborhood is on one side of every iso-value, and runs
marching squares/cubes on each dual cell owned by a visited leaf.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..core import HyperTreeGrid
from ..cursors import GridCursor, MooreSuperCursor, to_root
from ..dual import is_owner
from ..indexing import corner_neighbor_cursors
from .marching import cube_loops, is_saddle, square_segments
from .output import PolygonalOutput


@dataclass
class SignArrays:
    """``signs[j, g]``: leaf value above iso-value ``j``; ``truth[g]``: subtree crosses."""

    isovalues: np.ndarray
    signs: np.ndarray
    truth: np.ndarray


def _field_values(grid: HyperTreeGrid, field) -> np.ndarray:
    if isinstance(field, str):
        return grid.field(field)
    values = np.asarray(field, dtype=np.float64)
    if values.shape != (grid.size,):
        raise ValueError(f"value array must have length {grid.size}")
    return values


def _isovalues(isovalues) -> np.ndarray:
    iso = np.atleast_1d(np.asarray(isovalues, dtype=np.float64))
    if iso.size == 0:
        raise ValueError("at least one iso-value is required")
    return iso


def contour_preprocess(grid: HyperTreeGrid, field, isovalues, threads: int = 1) -> SignArrays:
    """Sign and truth arrays by a post-order walk of every tree.

    Masked vertices keep ``S = T = False``; they never take part in a dual
    cell.  ``field`` is an attribute name or a value array.  Trees write
    disjoint index ranges, so ``threads > 1`` walks them concurrently.
    """
    values = _field_values(grid, field)
    iso = _isovalues(isovalues)
    grid._sync()
    n_iso = len(iso)
    signs = np.zeros((n_iso, grid.size), dtype=bool)
    truth = np.zeros(grid.size, dtype=bool)
    iso_list = iso.tolist()
    branch = grid.branch

    def visit(c: GridCursor):
        """Returns (T, signs) of the cell, or None when it is masked."""
        if c.masked:
            return None
        g = c.start + c.vertex
        if c.leaf:
            v = values[g]
            sig = tuple(v > x for x in iso_list)
            signs[:, g] = sig
            return False, sig
        crossing = False
        common = None
        for i in range(branch):
            res = visit(c.child(i))
            if res is None:
                continue
            t, sig = res
            if t:
                crossing = True
            elif common is None:
                common = sig
            elif sig != common:
                crossing = True
        # every child is visited even once crossing is known: their arrays are needed
        truth[g] = crossing
        if not crossing:
            signs[:, g] = common
            return False, common
        return True, None

    def walk(coords):
        visit(to_root(grid, coords, "grid"))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(walk, grid.tree_coords()))
    else:
        for coords in grid.tree_coords():
            walk(coords)
    return SignArrays(iso, signs, truth)


class _ContourBuilder:
    def __init__(self, grid: HyperTreeGrid, values: np.ndarray, iso: np.ndarray):
        self.grid = grid
        self.d = grid.dimension
        self.values = values
        self.iso = iso
        self.point_of: dict[tuple[int, int, int], int] = {}
        self.points: list = []
        self.keys: list = []
        self.cells: list = []
        self.cell_iso: list = []
        self.centers: dict[int, tuple] = {}
        self.corner_slots = [corner_neighbor_cursors(self.d, c) for c in range(2**self.d)]

    def point(self, j: int, a: int, b: int) -> int:
        if a > b:
            a, b = b, a
        key = (j, a, b)
        p = self.point_of.get(key)
        if p is None:
            va = self.values[a]
            vb = self.values[b]
            t = (self.iso[j] - va) / (vb - va)
            pa = self.centers[a]
            pb = self.centers[b]
            self.points.append(tuple(x + t * (y - x) for x, y in zip(pa, pb)))
            self.keys.append(key)
            p = len(self.points) - 1
            self.point_of[key] = p
        return p

    def dual_cell(self, s: MooreSuperCursor, corner: int) -> None:
        ids = []
        for k in self.corner_slots[corner]:
            c = s.entries[k]
            g = c.start + c.vertex
            if g not in self.centers:
                self.centers[g] = c.center()
            ids.append(g)
        vals = [self.values[g] for g in ids]
        for j, level in enumerate(self.iso):
            case = 0
            for n, v in enumerate(vals):
                if v > level:
                    case |= 1 << n
            if case == 0 or case == (1 << len(ids)) - 1:
                continue
            if self.d == 1:
                self._emit([self.point(j, ids[0], ids[1])], j)
            elif self.d == 2:
                join = is_saddle(case) and sum(vals) / 4.0 > level
                for (a0, a1), (b0, b1) in square_segments(case, join):
                    p = self.point(j, ids[a0], ids[a1])
                    q = self.point(j, ids[b0], ids[b1])
                    if p != q:
                        self._emit([p, q], j)
            else:
                for loop in cube_loops(case):
                    pts = [self.point(j, ids[a], ids[b]) for a, b in loop]
                    for poly in _clean_loop(pts):
                        for m in range(1, len(poly) - 1):
                            self._emit([poly[0], poly[m], poly[m + 1]], j)

    def _emit(self, cell, j: int) -> None:
        self.cells.append(cell)
        self.cell_iso.append(self.iso[j])

    def output(self) -> PolygonalOutput:
        out = PolygonalOutput()
        out.points = np.array(self.points, dtype=np.float64).reshape(-1, 3)
        if self.d == 1:
            out.verts = self.cells
        elif self.d == 2:
            out.lines = self.cells
        else:
            out.polys = self.cells
        out.cell_scalars = np.array(self.cell_iso, dtype=np.float64)
        out.point_keys = np.array(self.keys, dtype=np.int64).reshape(-1, 3)
        return out


def _clean_loop(pts: list[int]) -> list[list[int]]:
    """Drop repeated consecutive points and split a loop where it touches itself."""
    loop = []
    for p in pts:
        if not loop or loop[-1] != p:
            loop.append(p)
    while len(loop) > 1 and loop[0] == loop[-1]:
        loop.pop()
    out = []
    stack = [loop]
    while stack:
        cur = stack.pop()
        first = {}
        split = None
        for m, p in enumerate(cur):
            if p in first:
                split = (first[p], m)
                break
            first[p] = m
        if split is None:
            if len(cur) >= 3:
                out.append(cur)
            continue
        a, b = split
        stack.append(cur[:a] + cur[b:])
        stack.append(cur[a:b])
    out.reverse()
    return out


def _needs_descent(s: MooreSuperCursor, signs: np.ndarray, truth: np.ndarray) -> bool:
    center = s.center
    i = center.start + center.vertex
    if truth[i]:
        return True
    si = signs[:, i]
    for k, c in enumerate(s.entries):
        if k == s.center_slot or c.masked:
            continue
        l = c.start + c.vertex
        if truth[l] or (signs[:, l] != si).any():
            return True
    return False


def _run_contour(grid: HyperTreeGrid, values: np.ndarray, iso: np.ndarray,
                 arrays: SignArrays | None) -> PolygonalOutput:
    builder = _ContourBuilder(grid, values, iso)
    n_corners = 2**grid.dimension
    branch = grid.branch

    def process(s: MooreSuperCursor) -> None:
        center = s.center
        if center.masked:
            return
        if center.leaf:
            for corner in range(n_corners):
                if is_owner(s, corner):
                    builder.dual_cell(s, corner)
            return
        if arrays is not None and not _needs_descent(s, arrays.signs, arrays.truth):
            return
        for i in range(branch):
            child = s.copy()
            child.to_child(i)
            process(child)

    for coords in grid.tree_coords():
        process(to_root(grid, coords, "moore"))
    return builder.output()


def contour(grid: HyperTreeGrid, field, isovalues, preselect: bool = True,
            threads: int = 1) -> PolygonalOutput:
    """Iso-lines (d=2), iso-surfaces (d=3) or iso-points (d=1) of ``field``.

    Points are shared between cells and interpolated linearly between the
    centers of the two leaves of a dual edge; ``cell_scalars`` holds the
    iso-value of each cell.  ``preselect=False`` visits every leaf and gives
    the same output, which is how the sign/truth shortcut is validated.
    """
    values = _field_values(grid, field)
    iso = _isovalues(isovalues)
    arrays = contour_preprocess(grid, values, iso, threads) if preselect else None
    return _run_contour(grid, values, iso, arrays)
