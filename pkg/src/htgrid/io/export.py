"""Text exports of polygonal outputs: Wavefront OBJ and point CSV."""
from __future__ import annotations

import csv

import numpy as np

from ..filters.output import PolygonalOutput

OBJ_HEADER = "# htgrid polygonal output"


def _fmt(x: float) -> str:
    return repr(float(x))


def export_obj(poly: PolygonalOutput, path) -> None:
    """Write points (``v``), vertex cells (``p``), lines (``l``) and polygons (``f``)."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(OBJ_HEADER + "\n")
        for p in poly.points:
            fh.write(f"v {_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
        for tag, cells in (("p", poly.verts), ("l", poly.lines), ("f", poly.polys)):
            for cell in cells:
                fh.write(tag + " " + " ".join(str(int(i) + 1) for i in cell) + "\n")


def read_obj(path) -> PolygonalOutput:
    """Parse the subset of OBJ written by :func:`export_obj`."""
    points = []
    cells = {"p": [], "l": [], "f": []}
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            if tag == "v":
                points.append([float(x) for x in parts[1:4]])
            elif tag in cells:
                # "f 1/2/3" style references keep only the vertex index
                cells[tag].append([int(x.split("/")[0]) - 1 for x in parts[1:]])
            else:
                raise ValueError(f"{path}:{lineno}: unsupported OBJ record {tag!r}")
    return PolygonalOutput(
        points=np.array(points, dtype=np.float64).reshape(-1, 3),
        verts=cells["p"], lines=cells["l"], polys=cells["f"],
    )


def export_csv_points(poly: PolygonalOutput, path, scalar: str | None = None) -> None:
    """One row per point: ``x,y,z`` plus a named point scalar if requested."""
    values = None
    if scalar is not None:
        values = poly.point_data[scalar]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "z"] + ([scalar] if scalar is not None else []))
        for n, p in enumerate(poly.points):
            row = [_fmt(p[0]), _fmt(p[1]), _fmt(p[2])]
            if values is not None:
                row.append(_fmt(values[n]))
            w.writerow(row)
