"""Command-line front end.

Every subcommand prints ``key=value`` lines on stdout (``--pretty`` aligns
them into a table) and returns a nonzero exit code on failure, with the
error message on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
import time

import numpy as np

from . import filters
from .bench import BENCH_COLUMNS, bench_scaling
from .core import HyperTreeGrid, memory_report
from .dual import ResourceGuardError, build_full_dual
from .filters.output import PolygonalOutput
from .indexing import Neighborhood, generate_traversal_tables, table_census, table_rows_csv
from .io import (
    GridFileError,
    export_csv_points,
    export_obj,
    generate_octant,
    generate_random,
    read_grid,
    text_dump,
    write_grid,
)

GOLDEN_PARENT = (0, 1, 1, 1, 1, 1, 1, 1, 2)
GOLDEN_CHILD = (2, 0, 1, 0, 1, 2, 1, 2, 0)


class CliError(Exception):
    pass


def _ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _range(text: str) -> list[int]:
    """``1..6`` (inclusive) or a comma-separated list."""
    if ".." in text:
        a, b = text.split("..", 1)
        try:
            return list(range(int(a), int(b) + 1))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad range {text!r}") from None
    return list(_ints(text))


def _emit(summary: dict, pretty: bool, out=None) -> None:
    out = out or sys.stdout
    if pretty:
        width = max((len(k) for k in summary), default=0)
        for k, v in summary.items():
            out.write(f"{k.ljust(width)}  {_value(v)}\n")
    else:
        for k, v in summary.items():
            out.write(f"{k}={_value(v)}\n")


def _value(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (tuple, list)):
        return ",".join(_value(x) for x in v)
    return str(v)


def grid_summary(grid: HyperTreeGrid) -> dict:
    rep = memory_report(grid)
    return {
        "dimension": grid.dimension,
        "factor": grid.factor,
        "extent": grid.extent,
        "trees": grid.number_of_trees(),
        "vertices": grid.number_of_vertices(),
        "leaves": grid.number_of_leaves(),
        "max_depth": grid.max_depth(),
        "masked": int(grid.mask.sum()) if grid.mask is not None else 0,
        "fields": ",".join(grid.fields) or "-",
        "topology_bytes": rep.topology_bytes,
        "coordinates_bytes": rep.coordinates_bytes,
        "mask_bytes": rep.mask_bytes,
        "attribute_bytes": rep.attribute_bytes,
        "total_bytes": rep.total_bytes,
    }


def poly_summary(poly: PolygonalOutput) -> dict:
    return {f"{k}": v for k, v in poly.summary().items()}


def _write_poly(poly: PolygonalOutput, path: str | None) -> None:
    if path is None:
        return
    if path.lower().endswith(".csv"):
        export_csv_points(poly, path)
    else:
        export_obj(poly, path)


# -- subcommands --------------------------------------------------------------

def cmd_generate(args) -> dict:
    t0 = time.perf_counter()
    if args.octant:
        grid = generate_octant(tuple(args.extent or (5, 5, 6)), args.factor or 3, args.levels)
    else:
        if args.dimension is None or args.factor is None or args.extent is None:
            raise CliError("random grids need -d, -f and -E")
        grid = generate_random(args.dimension, args.factor, args.extent, args.depth, args.prob, args.seed)
    elapsed = time.perf_counter() - t0
    if args.output:
        write_grid(grid, args.output)
    summary = grid_summary(grid)
    summary["generate_seconds"] = elapsed
    return summary


def cmd_info(args) -> dict:
    grid = read_grid(args.input)
    if args.text:
        sys.stdout.write(text_dump(grid))
    return grid_summary(grid)


def _clip_mode(args):
    given = [m for m in (args.halfspace, args.box, args.quadric) if m is not None]
    if len(given) != 1:
        raise CliError("axis-clip needs exactly one of --halfspace, --box, --quadric")
    if args.halfspace is not None:
        if len(args.halfspace) != 3:
            raise CliError("--halfspace takes axis,omega,side")
        axis, omega, side = args.halfspace
        return filters.HalfSpace(int(axis), omega, int(side))
    if args.box is not None:
        if len(args.box) != 6:
            raise CliError("--box takes ox,oy,oz,sx,sy,sz")
        return filters.Box(tuple(args.box[:3]), tuple(args.box[3:]))
    return filters.Quadric(tuple(args.quadric))


def cmd_filter(args) -> dict:
    grid = read_grid(args.input)
    name = args.name
    t0 = time.perf_counter()
    result = None
    if name == "axis-reflection":
        result = filters.axis_reflection(grid, args.axis, args.omega)
    elif name == "threshold":
        result = filters.threshold(grid, args.field, args.lo, args.hi)
    elif name == "depth-limiter":
        result = filters.depth_limiter(grid, args.depth)
    elif name == "axis-clip":
        result = filters.axis_clip(grid, _clip_mode(args))
    elif name == "axis-cut":
        result = filters.axis_cut(grid, args.axis, args.position)
    elif name == "cell-centers":
        result = filters.cell_centers(grid)
    elif name == "geometry":
        result = filters.geometry(grid)
    elif name == "plane-cutter":
        if args.normal is None:
            raise CliError("plane-cutter needs --normal")
        result = filters.plane_cutter(grid, args.normal, args.offset, args.mode)
    elif name == "to-unstructured":
        mesh = filters.to_unstructured(grid)
        elapsed = time.perf_counter() - t0
        compact = memory_report(grid).total_bytes
        return {"filter": name, "filter_seconds": elapsed, "cells": mesh.number_of_cells,
                "points": len(mesh.points), "explicit_bytes": mesh.footprint_bytes(),
                "compact_bytes": compact, "explicit_ratio": mesh.footprint_bytes() / compact}
    elif name == "dual":
        mesh = build_full_dual(grid, adjusted=args.adjusted)
        elapsed = time.perf_counter() - t0
        poly = PolygonalOutput(points=mesh.points)
        if grid.dimension == 1:
            poly.lines = mesh.cells.tolist()
        elif grid.dimension == 2:
            poly.polys = mesh.cells[:, [0, 1, 3, 2]].tolist()
        else:
            # each dual hexahedron as its six quads
            faces = ((0, 2, 3, 1), (4, 5, 7, 6), (0, 1, 5, 4), (2, 6, 7, 3), (0, 4, 6, 2), (1, 3, 7, 5))
            poly.polys = [[int(c[i]) for i in face] for c in mesh.cells for face in faces]
        _write_poly(poly, args.output)
        return {"filter": name, "filter_seconds": elapsed, "points": len(mesh.points),
                "cells": mesh.number_of_cells, "adjusted": int(args.adjusted)}
    else:  # pragma: no cover - argparse restricts the choices
        raise CliError(f"unknown filter {name!r}")
    elapsed = time.perf_counter() - t0
    summary = {"filter": name, "filter_seconds": elapsed}
    if isinstance(result, HyperTreeGrid):
        if args.output:
            write_grid(result, args.output)
        summary.update(grid_summary(result))
    else:
        _write_poly(result, args.output)
        summary.update(poly_summary(result))
    return summary


def cmd_contour(args) -> dict:
    grid = read_grid(args.input)
    t0 = time.perf_counter()
    poly = filters.contour(grid, args.field, list(args.iso), preselect=not args.no_preselect,
                           threads=args.threads)
    elapsed = time.perf_counter() - t0
    _write_poly(poly, args.output)
    summary = {"contour_seconds": elapsed, "isovalues": args.iso}
    summary.update(poly_summary(poly))
    return summary


def cmd_export(args) -> dict:
    grid = read_grid(args.input)
    if args.what == "text":
        with open(args.output, "w") as fh:
            fh.write(text_dump(grid))
        return {"output": args.output}
    if args.what == "centers":
        poly = filters.cell_centers(grid)
    else:
        poly = filters.geometry(grid)
    poly.points = grid.embed_points(poly.points)
    _write_poly(poly, args.output)
    summary = {"output": args.output}
    summary.update(poly_summary(poly))
    return summary


def cmd_bench(args) -> dict | None:
    rows = bench_scaling(args.trees, args.depths, args.dimension, args.factor)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in row.items()})
    text = buf.getvalue()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return None


def cmd_tables(args) -> dict | None:
    if args.check:
        tables, entries = table_census()
        t = generate_traversal_tables(Neighborhood.MOORE, 1, 3)
        parent = tuple(v for row in t.to_parent_cursor for v in row)
        child = tuple(v for row in t.to_child_index for v in row)
        ok = (tables, entries) == (24, 2804) and parent == GOLDEN_PARENT and child == GOLDEN_CHILD
        summary = {"tables": tables, "entries": entries,
                   "golden_parent": int(parent == GOLDEN_PARENT),
                   "golden_child": int(child == GOLDEN_CHILD), "ok": int(ok)}
        if not ok:
            _emit(summary, args.pretty)
            raise CliError("traversal table check failed")
        return summary
    t = generate_traversal_tables(args.kind, args.dimension, args.factor)
    sys.stdout.write(table_rows_csv(t, args.which))
    return None


# -- parser -------------------------------------------------------------------

FILTERS = ("axis-reflection", "threshold", "depth-limiter", "axis-clip", "axis-cut", "cell-centers",
           "geometry", "plane-cutter", "to-unstructured", "dual")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", help="aligned human-readable summary")
    common.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")

    p = argparse.ArgumentParser(prog="htgrid", description="Hypertree grid toolkit.", parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="create a synthetic grid")
    kind = g.add_mutually_exclusive_group(required=True)
    kind.add_argument("--random", action="store_true")
    kind.add_argument("--octant", action="store_true")
    g.add_argument("-d", "--dimension", type=int)
    g.add_argument("-f", "--factor", type=int)
    g.add_argument("-E", "--extent", type=_ints)
    g.add_argument("--depth", type=int, default=3)
    g.add_argument("--prob", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--levels", type=int, default=5)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_generate)

    i = sub.add_parser("info", parents=[common], help="summarize a grid file")
    i.add_argument("-i", "--input", required=True)
    i.add_argument("--text", action="store_true", help="also print a text dump")
    i.set_defaults(func=cmd_info)

    f = sub.add_parser("filter", parents=[common], help="run a filter on a grid file")
    f.add_argument("name", choices=FILTERS)
    f.add_argument("-i", "--input", required=True)
    f.add_argument("-o", "--output")
    f.add_argument("--axis", type=int, default=0)
    f.add_argument("--omega", type=float, default=0.0)
    f.add_argument("--position", type=float, default=0.0)
    f.add_argument("--field", default="Depth")
    f.add_argument("--lo", type=float, default=-np.inf)
    f.add_argument("--hi", type=float, default=np.inf)
    f.add_argument("--depth", type=int, default=0)
    f.add_argument("--halfspace", type=_floats)
    f.add_argument("--box", type=_floats)
    f.add_argument("--quadric", type=_floats)
    f.add_argument("--normal", type=_floats)
    f.add_argument("--offset", type=float, default=0.0)
    f.add_argument("--mode", choices=("primal", "dual"), default="primal")
    f.add_argument("--adjusted", action="store_true")
    f.set_defaults(func=cmd_filter)

    c = sub.add_parser("contour", parents=[common], help="iso-contour a field")
    c.add_argument("-i", "--input", required=True)
    c.add_argument("-o", "--output")
    c.add_argument("--field", default="Depth")
    c.add_argument("--iso", type=_floats, required=True)
    c.add_argument("--no-preselect", action="store_true", help="visit every leaf")
    c.set_defaults(func=cmd_contour)

    e = sub.add_parser("export", parents=[common], help="write a grid as OBJ, CSV or text")
    e.add_argument("-i", "--input", required=True)
    e.add_argument("-o", "--output", required=True)
    e.add_argument("--what", choices=("geometry", "centers", "text"), default="geometry")
    e.set_defaults(func=cmd_export)

    b = sub.add_parser("bench", parents=[common], help="memory/time scaling of complete grids")
    b.add_argument("--scaling", action="store_true", help="run the depth sweep (the only mode)")
    b.add_argument("--depths", type=_range, default=list(range(1, 7)))
    b.add_argument("-E", "--trees", type=int, default=150)
    b.add_argument("-d", "--dimension", type=int, default=2)
    b.add_argument("-f", "--factor", type=int, default=2)
    b.add_argument("-o", "--output")
    b.set_defaults(func=cmd_bench)

    t = sub.add_parser("tables", parents=[common], help="dump or check traversal tables")
    t.add_argument("--check", action="store_true")
    t.add_argument("--kind", type=Neighborhood.parse, default=Neighborhood.MOORE)
    t.add_argument("-d", "--dimension", type=int, default=1)
    t.add_argument("-f", "--factor", type=int, default=3)
    t.add_argument("--which", choices=("parent", "child"), default="parent")
    t.set_defaults(func=cmd_tables)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        summary = args.func(args)
    except (CliError, GridFileError, ResourceGuardError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1
    if summary is not None:
        _emit(summary, args.pretty)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
