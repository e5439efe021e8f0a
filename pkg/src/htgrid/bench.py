"""Scaling benchmark: complete grids of growing depth with 150 trees by default."""
from __future__ import annotations

import time
import tracemalloc

from .core import memory_report
from .cursors import iter_leaves
from .dual import ResourceGuardError, max_cells_guard
from .filters.output import explicit_footprint
from .io.generators import complete_grid

BENCH_COLUMNS = ("depth", "trees", "cells", "leaves", "modeled_bytes", "bytes_per_cell",
                 "traced_bytes", "traced_bytes_per_cell", "build_seconds", "traverse_seconds",
                 "explicit_bytes", "explicit_ratio")


def layout_for(trees: int, d: int) -> tuple[int, int, int]:
    """Near-cubic root extent holding exactly ``trees`` roots in ``d`` dimensions."""
    if d == 1:
        return (trees, 1, 1)
    best = None
    for a in range(1, trees + 1):
        if trees % a:
            continue
        if d == 2:
            shape = (trees // a, a, 1)
            score = abs(shape[0] - shape[1])
            if best is None or score < best[0]:
                best = (score, shape)
        else:
            rest = trees // a
            for b in range(1, rest + 1):
                if rest % b:
                    continue
                shape = (a, b, rest // b)
                score = max(shape) - min(shape)
                if best is None or score < best[0]:
                    best = (score, shape)
    return best[1]


def bench_scaling(trees: int = 150, depths=range(1, 7), d: int = 2, f: int = 2,
                  max_cells: int | None = None) -> list[dict]:
    """One row per depth: counts, modeled bytes, wall times and explicit/compact ratio."""
    limit = max_cells_guard() if max_cells is None else max_cells
    extent = layout_for(trees, d)
    rows = []
    for depth in depths:
        branch = f**d
        cells = trees * (branch ** (depth + 1) - 1) // (branch - 1)
        if cells > limit:
            raise ResourceGuardError(f"depth {depth} needs {cells} cells, above the limit of {limit}")
        # allocation actually made by the Python objects, per-tree overheads included
        tracemalloc.start()
        grid = complete_grid(d, f, extent, depth)
        traced = tracemalloc.get_traced_memory()[0]
        tracemalloc.stop()
        t0 = time.perf_counter()
        grid = complete_grid(d, f, extent, depth)
        t1 = time.perf_counter()
        leaves = sum(1 for _ in iter_leaves(grid, "grid"))
        t2 = time.perf_counter()
        modeled = memory_report(grid).total_bytes
        explicit = explicit_footprint(leaves, d, len(grid.fields))
        rows.append({
            "depth": depth,
            "trees": grid.number_of_trees(),
            "cells": grid.number_of_vertices(),
            "leaves": leaves,
            "modeled_bytes": modeled,
            "bytes_per_cell": modeled / grid.number_of_vertices(),
            "traced_bytes": traced,
            "traced_bytes_per_cell": traced / grid.number_of_vertices(),
            "build_seconds": t1 - t0,
            "traverse_seconds": t2 - t1,
            "explicit_bytes": explicit,
            "explicit_ratio": explicit / modeled,
        })
    return rows
