"""Filters producing hypertree grids: threshold, clip, depth limiter, reflection."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import HyperTree, HyperTreeGrid
from ..cursors import GridCursor, to_root


def _masked_copy(grid: HyperTreeGrid, flavor: str, reject: Callable[[GridCursor], bool]) -> HyperTreeGrid:
    """Shallow copy of ``grid`` with a new mask hiding the rejected leaves.

    A coarse cell whose children all end up masked is masked as well, so it
    does not come back as an (empty) effective leaf.
    """
    grid._sync()
    mask = grid.mask.copy() if grid.mask is not None else np.zeros(grid.size, dtype=bool)
    branch = grid.branch

    def visit(c) -> bool:
        if c.masked:
            return True
        g = c.start + c.vertex
        if c.leaf:
            if reject(c):
                mask[g] = True
            return bool(mask[g])
        hidden = True
        for i in range(branch):
            hidden &= visit(c.child(i))
        if hidden:
            mask[g] = True
        return hidden

    for coords in grid.tree_coords():
        visit(to_root(grid, coords, flavor))
    out = grid.shallow_copy()
    out.mask = mask
    return out


def threshold(grid: HyperTreeGrid, field: str, lo: float, hi: float) -> HyperTreeGrid:
    """Mask every leaf whose ``field`` value lies outside ``[lo, hi]``.

    The output shares topology, coordinates and attributes with the input
    and always carries a mask.
    """
    values = grid.field(field)
    return _masked_copy(grid, "grid",
                        lambda c: not lo <= values[c.start + c.vertex] <= hi)


@dataclass(frozen=True)
class HalfSpace:
    """Keep cells reaching the side ``x[axis] >= omega`` (side=+1) or ``<= omega`` (side=-1)."""

    axis: int
    omega: float
    side: int = 1

    def __post_init__(self):
        if self.axis not in (0, 1, 2):
            raise ValueError(f"axis must be 0, 1 or 2, got {self.axis}")
        if self.side not in (1, -1):
            raise ValueError("side must be +1 or -1")

    def keeps(self, lo, hi, corners) -> bool:
        if self.side > 0:
            return hi[self.axis] >= self.omega
        return lo[self.axis] <= self.omega


@dataclass(frozen=True)
class Box:
    """Keep cells intersecting the box ``origin + [0, size]``."""

    origin: tuple
    size: tuple

    def keeps(self, lo, hi, corners) -> bool:
        for k in range(3):
            a = self.origin[k]
            b = a + self.size[k]
            if hi[k] < min(a, b) or lo[k] > max(a, b):
                return False
        return True


@dataclass(frozen=True)
class Quadric:
    """Keep cells with q >= 0 at all their corners.

    q(x, y, z) = c0 + c1 x + c2 y + c3 z + c4 x^2 + c5 y^2 + c6 z^2
                 + c7 xy + c8 yz + c9 zx
    """

    coefficients: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coefficients)
        if len(c) != 10:
            raise ValueError(f"a quadric needs 10 coefficients, got {len(c)}")
        if not any(c):
            raise ValueError("all-zero quadric")
        object.__setattr__(self, "coefficients", c)

    def __call__(self, x, y, z):
        c = self.coefficients
        return (c[0] + c[1] * x + c[2] * y + c[3] * z + c[4] * x * x + c[5] * y * y
                + c[6] * z * z + c[7] * x * y + c[8] * y * z + c[9] * z * x)

    def keeps(self, lo, hi, corners) -> bool:
        return all(self(*p) >= 0 for p in corners)


def _cell_corners(d: int, lo, hi):
    ranges = [(lo[k], hi[k]) if k < d else (lo[k],) for k in range(3)]
    return list(itertools.product(*ranges))


def axis_clip(grid: HyperTreeGrid, mode) -> HyperTreeGrid:
    """Mask every leaf failing the geometric test of ``mode``.

    ``mode`` is a :class:`HalfSpace`, :class:`Box` or :class:`Quadric`;
    coordinates are those of the grid's internal frame.
    """
    d = grid.dimension

    def reject(c) -> bool:
        lo, hi = c.box()
        return not mode.keeps(lo, hi, _cell_corners(d, lo, hi))

    return _masked_copy(grid, "geometric", reject)


def _rebuild(grid: HyperTreeGrid, builders, out: HyperTreeGrid | None = None) -> HyperTreeGrid:
    """Fill ``out`` (default: empty grid in the frame of ``grid``) with new trees.

    ``builders`` maps tree positions to ``(tree, sources, masked)`` triples:
    ``sources[v]`` is the input global index copied into output vertex ``v``
    and ``masked[v]`` its visibility in the input.
    """
    if out is None:
        out = HyperTreeGrid(grid.dimension, grid.factor, grid.extent, grid.coordinates, grid.orientation)
    for coords, (tree, _, _) in builders.items():
        out.trees[coords] = tree
    out.finalize()
    present = out.tree_coords()
    if present:
        order = np.concatenate([np.asarray(builders[c][1], dtype=np.int64) for c in present])
        hidden = np.concatenate([np.asarray(builders[c][2], dtype=bool) for c in present])
    else:
        order = np.zeros(0, dtype=np.int64)
        hidden = np.zeros(0, dtype=bool)
    if grid.mask is not None:
        out.mask = hidden
    out.fields = {name: values[order].copy() for name, values in grid.fields.items()}
    return out


def depth_limiter(grid: HyperTreeGrid, depth_max: int) -> HyperTreeGrid:
    """Copy of ``grid`` with every tree cut below ``depth_max``.

    A cell at the depth limit stays visible as soon as it is visible in the
    input, that is as soon as one of its descendants is unmasked.
    """
    if depth_max < 0:
        raise ValueError("depth_max must be nonnegative")
    grid._sync()
    builders = {}
    for coords in grid.tree_coords():
        tree = HyperTree(grid.dimension, grid.factor)
        src = []
        hidden = []
        queue = [(to_root(grid, coords, "grid"), 0)]
        head = 0
        while head < len(queue):
            c, v = queue[head]
            head += 1
            src.append(c.start + c.vertex)
            hidden.append(c.masked)
            if c.depth < depth_max and not c.leaf:
                e = tree.subdivide(v)
                for i in range(grid.branch):
                    queue.append((c.child(i), e + i))
        builders[coords] = (tree, src, hidden)
    return _rebuild(grid, builders)


def axis_reflection(grid: HyperTreeGrid, axis: int, omega: float) -> HyperTreeGrid:
    """Mirror image of ``grid`` through the plane ``x[axis] = omega``.

    Only the coordinate list of ``axis`` is rewritten (``2 omega - x``); it
    becomes decreasing when it was increasing, so cells keep their indices
    and get negative sizes along that axis.  Everything else is shared with
    the input, so the cost does not depend on the number of cells.
    """
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    coords = list(grid.coordinates)
    mirrored = 2.0 * omega - coords[axis]
    mirrored.setflags(write=False)
    coords[axis] = mirrored
    return grid.shallow_copy(coordinates=tuple(coords))
