"""Leaf centers, outer surface and explicit conversion."""
from __future__ import annotations

import numpy as np

from ..core import HyperTreeGrid
from ..cursors import iter_leaves
from ..dual import ResourceGuardError, max_cells_guard
from ..indexing import child_index
from .output import VTK_HEXAHEDRON, VTK_LINE, VTK_QUAD, PolygonalOutput, UnstructuredOutput


def cell_centers(grid: HyperTreeGrid, as_polydata: bool = True) -> PolygonalOutput:
    """One point per unmasked leaf at its center; attributes follow the points."""
    pts = []
    ids = []
    for c in iter_leaves(grid, "geometric"):
        pts.append(c.center())
        ids.append(c.global_index)
    out = PolygonalOutput(points=np.array(pts, dtype=np.float64).reshape(-1, 3))
    idx = np.array(ids, dtype=np.int64)
    out.point_data = {name: values[idx] for name, values in grid.fields.items()}
    if as_polydata:
        out.verts = [[n] for n in range(len(pts))]
    return out


def _box_points(lo, hi, d: int):
    """Corners of a box in binary order (axis 0 fastest)."""
    return [tuple(hi[k] if (m >> k) & 1 else lo[k] for k in range(3)) for m in range(2**d)]


def _emit_face(points, polys, lo, hi, axis: int, side: int) -> None:
    """Quad of the box face normal to ``axis``, on the min (0) or max (1) side."""
    a, b = (axis + 1) % 3, (axis + 2) % 3
    x = hi[axis] if side else lo[axis]
    ring = []
    for ua, ub in ((0, 0), (1, 0), (1, 1), (0, 1)):
        p = [0.0, 0.0, 0.0]
        p[axis] = x
        p[a] = hi[a] if ua else lo[a]
        p[b] = hi[b] if ub else lo[b]
        ring.append(tuple(p))
    if not side:
        ring.reverse()
    base = len(points)
    points.extend(ring)
    polys.append([base, base + 1, base + 2, base + 3])


def _exposed_parts(neighbor, box, origin, size, axis: int, step: int, side: int, f: int,
                   points, polys) -> None:
    """Emit the parts of a face that border masked cells inside a refined neighbor.

    ``neighbor`` is a same-depth refined cell one ``step`` (+1/-1 in index
    space) along ``axis``; ``origin, size`` are the signed tangent bounds of
    the face region it covers and ``box`` the (lo, hi) box of the emitting leaf.
    """
    near = 0 if step > 0 else f - 1
    a, b = (axis + 1) % 3, (axis + 2) % 3
    lo, hi = box
    for ua in range(f):
        for ub in range(f):
            coords = [0, 0, 0]
            coords[axis], coords[a], coords[b] = near, ua, ub
            child = neighbor.child(child_index(3, f, coords))
            o, sz = list(origin), list(size)
            slo, shi = list(lo), list(hi)
            for k, u in ((a, ua), (b, ub)):
                sz[k] = size[k] / f
                o[k] = origin[k] + u * sz[k]
                slo[k], shi[k] = min(o[k], o[k] + sz[k]), max(o[k], o[k] + sz[k])
            if child.masked:
                _emit_face(points, polys, slo, shi, axis, side)
            elif not child.leaf:
                _exposed_parts(child, (slo, shi), o, sz, axis, step, side, f, points, polys)


def geometry(grid: HyperTreeGrid) -> PolygonalOutput:
    """Outer surface of the unmasked cells.

    For d=3, a leaf face is emitted when the cell across it is masked or
    outside the grid; faces against unmasked cells (coarser, equal or
    finer) are interior.  For d<3 every unmasked leaf is emitted as a quad
    (d=2) or a segment (d=1).
    """
    points: list = []
    cells: list = []
    d = grid.dimension
    out = PolygonalOutput()
    if d < 3:
        for c in iter_leaves(grid, "geometric"):
            lo, hi = c.box()
            base = len(points)
            if d == 2:
                points.extend([(lo[0], lo[1], lo[2]), (hi[0], lo[1], lo[2]),
                               (hi[0], hi[1], lo[2]), (lo[0], hi[1], lo[2])])
                cells.append([base, base + 1, base + 2, base + 3])
            else:
                points.extend([(lo[0], lo[1], lo[2]), (hi[0], lo[1], lo[2])])
                cells.append([base, base + 1])
        out.points = np.array(points, dtype=np.float64).reshape(-1, 3)
        if d == 2:
            out.polys = cells
        else:
            out.lines = cells
        return out
    f = grid.factor
    for s in iter_leaves(grid, "von-neumann"):
        center = s.center
        lo, hi = center.box()
        for k, w in enumerate(s.offsets):
            if k == s.center_slot:
                continue
            axis = next(a for a in range(3) if w[a] != 0)
            # the face lies on the max side of the box when the neighbor is
            # on the side the signed size points to
            toward_max = (w[axis] > 0) == (center.size[axis] > 0)
            side = 1 if toward_max else 0
            nb = s.entries[k]
            if nb.masked:
                _emit_face(points, cells, lo, hi, axis, side)
            elif not nb.leaf:
                # finer cells across the face: only the masked ones expose it
                _exposed_parts(nb, (lo, hi), center.origin, center.size, axis, w[axis],
                               side, f, points, cells)
    out.points = np.array(points, dtype=np.float64).reshape(-1, 3)
    out.polys = cells
    return out


def to_unstructured(grid: HyperTreeGrid, max_cells: int | None = None) -> UnstructuredOutput:
    """Explicit mesh with one cell per unmasked leaf and replicated corners."""
    limit = max_cells_guard() if max_cells is None else max_cells
    if grid.number_of_leaves() > limit:
        raise ResourceGuardError(
            f"grid has {grid.number_of_leaves()} leaves, above the limit of {limit}")
    d = grid.dimension
    pts = []
    ids = []
    for c in iter_leaves(grid, "geometric"):
        lo, hi = c.box()
        pts.extend(_box_points(lo, hi, d))
        ids.append(c.global_index)
    n = len(ids)
    corners = 2**d
    conn = np.arange(n * corners, dtype=np.int64).reshape(n, corners)
    if d == 3:
        conn = conn[:, [0, 1, 3, 2, 4, 5, 7, 6]]
    elif d == 2:
        conn = conn[:, [0, 1, 3, 2]]
    ctype = {1: VTK_LINE, 2: VTK_QUAD, 3: VTK_HEXAHEDRON}[d]
    idx = np.array(ids, dtype=np.int64)
    return UnstructuredOutput(
        points=np.array(pts, dtype=np.float64).reshape(-1, 3),
        connectivity=conn,
        cell_types=np.full(n, ctype, dtype=np.uint8),
        cell_data={name: values[idx] for name, values in grid.fields.items()},
    )
