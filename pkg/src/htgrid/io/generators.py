"""Synthetic grids: random refinement and a refined, masked octant of the unit ball.

Random draws come from numpy's PCG64 generator (``numpy.random.default_rng``)
seeded with the given integer, which numpy guarantees to be reproducible
across platforms.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..core import HyperTree, HyperTreeGrid
from ..indexing import child_coords


def _pad_extent(extent: Sequence[int]) -> tuple[int, int, int]:
    extent = tuple(int(e) for e in extent)
    return extent + (1,) * (3 - len(extent))  # type: ignore[return-value]


def _assemble(d, f, extent, coordinates, orientation, trees, masks, depths) -> HyperTreeGrid:
    grid = HyperTreeGrid(d, f, extent, coordinates, orientation)
    for c, t in trees.items():
        grid.trees[c] = t
    grid.finalize()
    order = grid.tree_coords()
    if masks is not None:
        grid.mask = np.concatenate([masks[c] for c in order]) if order else np.zeros(0, bool)
    grid.fields["Depth"] = (np.concatenate([depths[c] for c in order]).astype(np.float64)
                            if order else np.zeros(0))
    return grid


def generate_random(d: int, f: int, extent: Sequence[int], depth_max: int, split_probability: float,
                    seed: int = 0, coordinates=None) -> HyperTreeGrid:
    """Grid whose leaves split with probability ``split_probability`` below ``depth_max``.

    Trees are built breadth-first in root order; every candidate leaf
    consumes one uniform draw.  A ``Depth`` field holds each vertex's depth.
    """
    if not 0.0 <= split_probability <= 1.0:
        raise ValueError("split probability must lie in [0, 1]")
    if depth_max < 0:
        raise ValueError("depth_max must be nonnegative")
    extent = _pad_extent(extent)
    rng = np.random.default_rng(seed)
    branch = f**d
    if coordinates is None:
        coordinates = [np.arange(extent[k] + 1, dtype=np.float64) for k in range(d)]
    trees = {}
    depths = {}
    for k in range(extent[2]):
        for j in range(extent[1]):
            for i in range(extent[0]):
                bits = []
                level_depth = []
                n = 1
                for level in range(depth_max + 1):
                    if level < depth_max:
                        split = rng.random(n) < split_probability
                    else:
                        split = np.zeros(n, dtype=bool)
                    bits.append(split)
                    level_depth.append(np.full(n, level))
                    n = int(split.sum()) * branch
                    if n == 0:
                        break
                all_bits = np.concatenate(bits)
                trees[(i, j, k)] = HyperTree.from_refinement_bits(d, f, all_bits)
                depths[(i, j, k)] = np.concatenate(level_depth)
    return _assemble(d, f, extent, coordinates, None, trees, None, depths)


def generate_octant(resolution: Sequence[int] = (5, 5, 6), f: int = 3, levels: int = 5,
                    root_size: float = 0.2, height: float = 0.9) -> HyperTreeGrid:
    """Truncated octant of the unit ball, refined along the sphere.

    Roots of edge ``root_size`` tile ``[0, 5r] x [0, 5r] x [0, 6r]`` for the
    default resolution.  A grid has ``levels`` levels of cells: the root
    level plus ``levels - 1`` refinements (``levels <= 1`` leaves every root
    unrefined).  A cell is refined when the sphere ``|x| = 1`` passes
    through it and it reaches below the plane ``z = height``; a leaf is
    masked when it lies entirely outside the ball or above that plane.
    """
    extent = _pad_extent(resolution)
    d = 3
    branch = f**d
    max_depth = max(levels - 1, 0)
    coordinates = [root_size * np.arange(extent[k] + 1, dtype=np.float64) for k in range(3)]
    steps = np.array([child_coords(d, f, i) for i in range(branch)], dtype=np.float64)
    trees, masks, depths = {}, {}, {}
    for k in range(extent[2]):
        for j in range(extent[1]):
            for i in range(extent[0]):
                lo = np.array([[coordinates[0][i], coordinates[1][j], coordinates[2][k]]])
                size = root_size
                bits, hidden, level_depth = [], [], []
                for level in range(max_depth + 1):
                    hi = lo + size
                    near = np.einsum("ij,ij->i", lo, lo)
                    far = np.einsum("ij,ij->i", hi, hi)
                    below = lo[:, 2] < height
                    split = (near < 1.0) & (far > 1.0) & below if level < max_depth else np.zeros(len(lo), bool)
                    bits.append(split)
                    hidden.append(~split & ((near >= 1.0) | ~below))
                    level_depth.append(np.full(len(lo), level))
                    if not split.any():
                        break
                    size = size / f
                    parents = lo[split]
                    lo = (parents[:, None, :] + steps[None, :, :] * size).reshape(-1, 3)
                c = (i, j, k)
                trees[c] = HyperTree.from_refinement_bits(d, f, np.concatenate(bits))
                masks[c] = np.concatenate(hidden)
                depths[c] = np.concatenate(level_depth)
    return _assemble(d, f, extent, coordinates, None, trees, masks, depths)


def complete_grid(d: int, f: int, extent: Sequence[int], depth: int) -> HyperTreeGrid:
    """Every tree fully refined down to ``depth``."""
    return generate_random(d, f, extent, depth, 1.0, seed=0)
