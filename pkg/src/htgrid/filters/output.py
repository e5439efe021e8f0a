"""Polygonal and explicit-cell outputs of the filters."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# footprint model of an explicit unstructured mesh, in bytes
POINT_BYTES = 24
CONNECTIVITY_BYTES = 8
OFFSET_BYTES = 8
CELL_TYPE_BYTES = 1
CELL_VALUE_BYTES = 8

VTK_LINE = 3
VTK_QUAD = 9
VTK_HEXAHEDRON = 12


@dataclass
class PolygonalOutput:
    """Points plus vertex, line and polygon cells indexing into them.

    ``cell_scalars`` (if set) has one entry per cell, counted in the order
    verts, lines, polys.  ``point_keys`` is filled by the contouring filters:
    row ``(j, a, b)`` says the point was interpolated for iso-value ``j``
    between the leaves of global indices ``a < b``.
    """

    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    verts: list = field(default_factory=list)
    lines: list = field(default_factory=list)
    polys: list = field(default_factory=list)
    cell_scalars: np.ndarray | None = None
    point_data: dict = field(default_factory=dict)
    point_keys: np.ndarray | None = None

    @property
    def number_of_points(self) -> int:
        return len(self.points)

    @property
    def number_of_cells(self) -> int:
        return len(self.verts) + len(self.lines) + len(self.polys)

    def cells(self):
        """All cells in verts, lines, polys order."""
        return list(self.verts) + list(self.lines) + list(self.polys)

    def validate(self) -> None:
        n = len(self.points)
        for cell in self.cells():
            for i in cell:
                if not 0 <= i < n:
                    raise ValueError(f"cell index {i} outside [0, {n})")
        if self.cell_scalars is not None and len(self.cell_scalars) != self.number_of_cells:
            raise ValueError("cell_scalars length differs from cell count")

    def summary(self) -> dict:
        return {
            "points": self.number_of_points,
            "verts": len(self.verts),
            "lines": len(self.lines),
            "polys": len(self.polys),
        }


@dataclass
class UnstructuredOutput:
    """One explicit cell per leaf with its own (replicated) corner points."""

    points: np.ndarray
    connectivity: np.ndarray
    cell_types: np.ndarray
    cell_data: dict = field(default_factory=dict)

    @property
    def number_of_cells(self) -> int:
        return len(self.connectivity)

    def footprint_bytes(self) -> int:
        n_cells = self.number_of_cells
        return (
            POINT_BYTES * len(self.points)
            + CONNECTIVITY_BYTES * int(self.connectivity.size)
            + OFFSET_BYTES * n_cells
            + CELL_TYPE_BYTES * n_cells
            + CELL_VALUE_BYTES * n_cells * len(self.cell_data)
        )


def explicit_footprint(leaves: int, d: int, fields: int) -> int:
    """Footprint of :class:`UnstructuredOutput` for ``leaves`` cells, without building it."""
    corners = 2**d
    per_cell = (POINT_BYTES * corners + CONNECTIVITY_BYTES * corners + OFFSET_BYTES
                + CELL_TYPE_BYTES + CELL_VALUE_BYTES * fields)
    return leaves * per_cell
