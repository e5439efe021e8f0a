"""Axis-aligned and oblique plane cuts."""
from __future__ import annotations

import math

import numpy as np

from ..core import HyperTree, HyperTreeGrid, world_axes
from ..cursors import iter_leaves, to_root
from ..indexing import child_coords, child_index
from .contour import _run_contour, contour_preprocess
from .output import PolygonalOutput
from .selection import _rebuild


def _slab_index(lo: float, size: float, f: int, w: float) -> int | None:
    """Child slab (along one axis) of the cell ``[lo, lo+size)`` containing ``w``.

    Slabs are half-open on their min side; ``size`` may be negative.
    """
    step = size / f
    for c in range(f):
        a = lo + c * step
        b = a + step
        if min(a, b) <= w < max(a, b):
            return c
    return None


def axis_cut(grid: HyperTreeGrid, axis: int, w: float) -> HyperTreeGrid:
    """Cross-section of ``grid`` by the plane ``x[axis] = w`` as a (d-1)-grid.

    Cells are taken half-open, ``[min, max)``, so a plane lying on a cell
    interface selects the cells above it.  The output keeps the other axes
    in order; its fixed slots record the world position of the cut.
    """
    d = grid.dimension
    if d < 2:
        raise ValueError("axis_cut needs a grid of dimension 2 or 3")
    if not 0 <= axis < d:
        raise ValueError(f"axis must be in [0, {d}), got {axis}")
    coords = grid.coordinates[axis]
    lo, hi = float(coords.min()), float(coords.max())
    if not lo <= w < hi:
        raise ValueError(f"cut position {w} outside [{lo}, {hi})")
    i_root = next(i for i in range(len(coords) - 1)
                  if min(coords[i], coords[i + 1]) <= w < max(coords[i], coords[i + 1]))

    keep = [k for k in range(d) if k != axis]
    f = grid.factor
    src_world = world_axes(d, grid.orientation)
    out_orient = src_world[keep[0]] if d == 2 else axis
    out_world = world_axes(d - 1, out_orient)
    fixed = {src_world[axis]: w}
    for k in range(d, 3):
        fixed[src_world[k]] = float(grid.coordinates[k][0])
    out_coords = [grid.coordinates[k] for k in keep]
    for slot in range(d - 1, 3):
        out_coords.append([fixed[out_world[slot]]])
    extent = [grid.extent[k] for k in keep]

    out = HyperTreeGrid(d - 1, f, extent, out_coords, out_orient)
    n_sub = f ** (d - 1)
    builders = {}
    for tc in grid.tree_coords():
        if tc[axis] != i_root:
            continue
        oc = tuple(tc[k] for k in keep) + (0,) * (4 - d)
        tree = HyperTree(d - 1, f)
        src, hidden = [], []
        # queue order is output vertex order: blocks are created as cells are popped
        queue = [to_root(grid, tc, "geometric")]
        head = 0
        while head < len(queue):
            c = queue[head]
            head += 1
            src.append(c.start + c.vertex)
            hidden.append(c.masked)
            if c.leaf:
                continue
            ca = _slab_index(c.origin[axis], c.size[axis], f, w)
            tree.subdivide(len(src) - 1)
            for oi in range(n_sub):
                full = list(child_coords(d - 1, f, oi))
                full.insert(axis, ca)
                queue.append(c.child(child_index(d, f, full)))
        # a cell whose cut children are all hidden has an empty cross-section,
        # even when it has visible children off the plane
        for v in reversed(tree.strict_vertices()):
            e = tree.eldest(v)
            if all(hidden[e: e + n_sub]):
                hidden[v] = True
        builders[oc] = (tree, src, hidden)
    return _rebuild(grid, builders, out)


def _basis(n: np.ndarray):
    a = np.zeros(3)
    a[int(np.argmin(np.abs(n)))] = 1.0
    u = np.cross(n, a)
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    return u, v


_BOX_EDGES = [(a, a | (1 << k)) for k in range(3) for a in range(8) if not a >> k & 1]


def _box_plane_polygon(lo, hi, n, c, d: int):
    """Polygon (d=3) or segment (d=2) of ``n.x = c`` inside the box, or None.

    A cell is cut when ``min(dist) <= 0 < max(dist)`` over its corners,
    which makes cells half-open along the normal.
    """
    ncorner = 2**d
    corners = np.array([[hi[k] if (m >> k) & 1 else lo[k] for k in range(3)] for m in range(ncorner)])
    dist = corners @ n - c
    if not (dist.min() <= 0 < dist.max()):
        return None
    edges = [(a, b) for a, b in _BOX_EDGES if a < ncorner and b < ncorner]
    pts = [corners[m] for m in range(ncorner) if dist[m] == 0]
    for a, b in edges:
        da, db = dist[a], dist[b]
        if (da < 0 < db) or (db < 0 < da):
            t = da / (da - db)
            pts.append(corners[a] + t * (corners[b] - corners[a]))
    uniq = []
    for p in pts:
        if not any(np.array_equal(p, q) for q in uniq):
            uniq.append(p)
    need = 3 if d == 3 else 2
    if len(uniq) < need:
        return None
    arr = np.array(uniq)
    if d == 2:
        return arr[:2] if len(arr) == 2 else arr[[0, -1]]
    u, v = _basis(n)
    rel = arr - arr.mean(axis=0)
    ang = np.arctan2(rel @ v, rel @ u)
    return arr[np.argsort(ang, kind="stable")]


def plane_cutter(grid: HyperTreeGrid, normal, offset: float, mode: str = "primal") -> PolygonalOutput:
    """Cut ``grid`` (d=2 or 3) by the plane ``normal . x = offset``.

    ``primal`` returns one polygon (segment for d=2) per cut leaf, each with
    its own points, so leaf geometry is exact but T-junctions remain.
    ``dual`` contours the signed distance to the plane on the dual mesh,
    which gives a conforming output.
    """
    n = np.asarray(normal, dtype=np.float64).reshape(3)
    norm = float(np.linalg.norm(n))
    if not math.isfinite(norm) or norm == 0.0:
        raise ValueError("plane normal must be nonzero")
    d = grid.dimension
    if d < 2:
        raise ValueError("plane_cutter needs a grid of dimension 2 or 3")
    if d == 2 and norm == abs(n[2]):
        raise ValueError("plane is parallel to the grid")
    if mode == "dual":
        grid._sync()
        dist = np.zeros(grid.size)
        for cur in iter_leaves(grid, "geometric"):
            dist[cur.global_index] = float(np.dot(cur.center(), n) - offset)
        arrays = contour_preprocess(grid, dist, [0.0])
        return _run_contour(grid, dist, np.array([0.0]), arrays)
    if mode != "primal":
        raise ValueError(f"unknown plane cutter mode {mode!r}")
    points = []
    cells = []
    for cur in iter_leaves(grid, "geometric"):
        lo, hi = cur.box()
        poly = _box_plane_polygon(lo, hi, n, offset, d)
        if poly is None:
            continue
        base = len(points)
        points.extend(poly.tolist())
        cells.append(list(range(base, base + len(poly))))
    out = PolygonalOutput(points=np.array(points, dtype=np.float64).reshape(-1, 3))
    if d == 2:
        out.lines = cells
    else:
        out.polys = cells
    return out
