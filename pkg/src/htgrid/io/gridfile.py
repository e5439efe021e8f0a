"""Binary grid files.

Layout (little-endian)::

    b"HTG1"
    u8 d, u8 f, u32 E0, u32 E1, u32 E2, u8 orientation,
    u32 tree count, u32 field count, u8 flags (1: mask, 2: explicit starts)
    3 x (u32 n, n x f64)                       coordinate lists
    per tree: u32 i, u32 j, u32 k, u64 start, u64 v, ceil(v/8) bytes
              (one refinement bit per vertex in breadth-first order)
    if mask:  u64 n, ceil(n/8) bytes
    per field: u16 name length, utf-8 name, u64 n, n x f64

Bit strings are packed most significant bit first.
"""
from __future__ import annotations

import io
import struct

import numpy as np

from ..core import HyperTree, HyperTreeGrid

MAGIC = b"HTG1"
_HEADER = struct.Struct("<BBIIIBIIB")
_TREE = struct.Struct("<IIIQQ")
FLAG_MASK = 1
FLAG_EXPLICIT_STARTS = 2


class GridFileError(ValueError):
    pass


def canonical(grid: HyperTreeGrid) -> HyperTreeGrid:
    """Equivalent grid whose trees are all numbered breadth-first.

    Grids already in that form are returned unchanged; otherwise vertices
    are renumbered and the mask and attributes permuted accordingly, with
    cumulative starts.
    """
    grid._sync()
    if all(t.is_breadth_first() for t in grid.trees.values()):
        return grid
    out = HyperTreeGrid(grid.dimension, grid.factor, grid.extent, grid.coordinates, grid.orientation)
    order = []
    for c in grid.tree_coords():
        tree = grid.trees[c]
        perm = np.asarray(tree.breadth_first_order(), dtype=np.int64)
        bits = ~(tree.eldest_array()[perm] < 0)
        out.trees[c] = HyperTree.from_refinement_bits(grid.dimension, grid.factor, bits)
        order.append(perm + grid.start(c))
    out.finalize()
    order = np.concatenate(order) if order else np.zeros(0, dtype=np.int64)
    if grid.mask is not None:
        out.mask = grid.mask[order].copy()
    out.fields = {k: v[order].copy() for k, v in grid.fields.items()}
    return out


def _cumulative(grid: HyperTreeGrid) -> bool:
    s = 0
    for c in grid.tree_coords():
        if grid.start(c) != s:
            return False
        s += grid.trees[c].vertex_count
    return True


def dumps(grid: HyperTreeGrid) -> bytes:
    grid = canonical(grid)
    buf = io.BytesIO()
    buf.write(MAGIC)
    flags = (FLAG_MASK if grid.mask is not None else 0) | (0 if _cumulative(grid) else FLAG_EXPLICIT_STARTS)
    buf.write(_HEADER.pack(grid.dimension, grid.factor, *grid.extent, grid.orientation,
                           grid.number_of_trees(), len(grid.fields), flags))
    for c in grid.coordinates:
        arr = np.ascontiguousarray(c, dtype="<f8")
        buf.write(struct.pack("<I", len(arr)))
        buf.write(arr.tobytes())
    for coords in grid.tree_coords():
        tree = grid.trees[coords]
        bits = tree.refinement_bits()
        buf.write(_TREE.pack(*coords, grid.start(coords), len(bits)))
        buf.write(np.packbits(bits).tobytes())
    if grid.mask is not None:
        buf.write(struct.pack("<Q", len(grid.mask)))
        buf.write(np.packbits(grid.mask).tobytes())
    for name, values in grid.fields.items():
        raw = name.encode("utf-8")
        buf.write(struct.pack("<H", len(raw)))
        buf.write(raw)
        buf.write(struct.pack("<Q", len(values)))
        buf.write(np.ascontiguousarray(values, dtype="<f8").tobytes())
    return buf.getvalue()


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise GridFileError(f"truncated file while reading {what}")
        out = self.data[self.pos: self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt, what: str):
        st = fmt if isinstance(fmt, struct.Struct) else struct.Struct(fmt)
        return st.unpack(self.take(st.size, what))


def loads(data: bytes) -> HyperTreeGrid:
    r = _Reader(data)
    if r.take(4, "magic") != MAGIC:
        raise GridFileError("not a grid file (bad magic)")
    d, f, e0, e1, e2, orientation, n_trees, n_fields, flags = r.unpack(_HEADER, "header")
    coords = []
    for k in range(3):
        (n,) = r.unpack("<I", f"coordinate count of axis {k}")
        coords.append(np.frombuffer(r.take(8 * n, f"coordinates of axis {k}"), dtype="<f8").astype(np.float64))
    try:
        grid = HyperTreeGrid(d, f, (e0, e1, e2), coords, orientation)
    except ValueError as exc:
        raise GridFileError(f"invalid header: {exc}") from None
    starts = {}
    branch = f**d
    for _ in range(n_trees):
        i, j, k, start, v = r.unpack(_TREE, "tree record")
        raw = np.frombuffer(r.take((v + 7) // 8, f"refinement bits of tree {(i, j, k)}"), dtype=np.uint8)
        bits = np.unpackbits(raw)[:v].astype(bool)
        m = int(bits.sum())
        if v != 1 + m * branch:
            raise GridFileError(
                f"tree {(i, j, k)}: {v} refinement bits with {m} refined vertices, "
                f"expected {1 + m * branch}")
        try:
            tree = HyperTree.from_refinement_bits(d, f, bits)
        except ValueError as exc:
            raise GridFileError(f"tree {(i, j, k)}: {exc}") from None
        if not grid.in_extent((i, j, k)) or (i, j, k) in grid.trees:
            raise GridFileError(f"tree {(i, j, k)}: position outside the extent or repeated")
        grid.trees[(i, j, k)] = tree
        starts[(i, j, k)] = start
    try:
        grid.finalize(starts if flags & FLAG_EXPLICIT_STARTS else None)
    except ValueError as exc:
        raise GridFileError(str(exc)) from None
    if not flags & FLAG_EXPLICIT_STARTS and grid.starts != starts:
        raise GridFileError("stored starts are not cumulative but no explicit-starts flag is set")
    if flags & FLAG_MASK:
        (n,) = r.unpack("<Q", "mask length")
        if n != grid.size:
            raise GridFileError(f"mask has {n} entries, grid has {grid.size} global indices")
        raw = np.frombuffer(r.take((n + 7) // 8, "mask bits"), dtype=np.uint8)
        grid.mask = np.unpackbits(raw)[:n].astype(bool)
    for _ in range(n_fields):
        (ln,) = r.unpack("<H", "field name length")
        name = r.take(ln, "field name").decode("utf-8")
        (n,) = r.unpack("<Q", f"length of field {name!r}")
        if n != grid.size:
            raise GridFileError(f"field {name!r} has {n} values, grid has {grid.size} global indices")
        grid.fields[name] = np.frombuffer(r.take(8 * n, f"values of field {name!r}"), dtype="<f8").astype(np.float64)
    if r.pos != len(data):
        raise GridFileError(f"{len(data) - r.pos} trailing bytes after the last field")
    return grid


def write_grid(grid: HyperTreeGrid, path) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(grid))


def read_grid(path) -> HyperTreeGrid:
    with open(path, "rb") as fh:
        return loads(fh.read())


def grids_equal(a: HyperTreeGrid, b: HyperTreeGrid) -> bool:
    """Deep equality of topology, coordinates, starts, mask and attributes."""
    if (a.dimension, a.factor, a.extent, a.orientation) != (b.dimension, b.factor, b.extent, b.orientation):
        return False
    if any(not np.array_equal(x, y) for x, y in zip(a.coordinates, b.coordinates)):
        return False
    if a.tree_coords() != b.tree_coords() or a.starts != b.starts:
        return False
    for c in a.tree_coords():
        ta, tb = a.trees[c], b.trees[c]
        if ta.eldest_child != tb.eldest_child or ta.parent_of_block != tb.parent_of_block:
            return False
    if (a.mask is None) != (b.mask is None):
        return False
    if a.mask is not None and not np.array_equal(a.mask, b.mask):
        return False
    if set(a.fields) != set(b.fields):
        return False
    return all(np.array_equal(a.fields[k], b.fields[k]) for k in a.fields)


def text_dump(grid: HyperTreeGrid) -> str:
    """Readable listing of a grid file's content, for debugging."""
    grid = canonical(grid)
    lines = [
        f"d={grid.dimension} f={grid.factor} extent={','.join(map(str, grid.extent))} "
        f"orientation={grid.orientation} trees={grid.number_of_trees()} fields={len(grid.fields)}"
    ]
    for k, c in enumerate(grid.coordinates):
        lines.append(f"axis{k}=" + ",".join(repr(float(x)) for x in c))
    for coords in grid.tree_coords():
        bits = "".join("1" if b else "0" for b in grid.trees[coords].refinement_bits())
        lines.append(f"tree {coords[0]},{coords[1]},{coords[2]} start={grid.start(coords)} bits={bits}")
    if grid.mask is not None:
        lines.append("mask=" + "".join("1" if b else "0" for b in grid.mask))
    for name in grid.fields:
        lines.append(f"field {name} n={len(grid.fields[name])}")
    return "\n".join(lines) + "\n"
