"""Compact tree-based AMR grids (hypertree grids), cursors, dual mesh and filters."""
from .core import (
    GeometricEmbedding,
    HyperTree,
    HyperTreeGrid,
    MemoryReport,
    global_index,
    grid_bounds,
    memory_report,
    new_grid,
    shared_memory_report,
    topology_bounds,
    tree_embedding,
)
from .cursors import (
    GeometricCursor,
    GridCursor,
    MooreSuperCursor,
    TreeCursor,
    VonNeumannSuperCursor,
    cursor_to_child,
    iter_leaves,
    supercursor_to_child,
    to_root,
)
from .dual import DualCell, DualMesh, adjust_dual_point, build_full_dual, generate_dual_cell, is_owner
from .indexing import (
    Neighborhood,
    TraversalTables,
    child_coords,
    child_index,
    corner_neighbor_cursors,
    cursor_index,
    cursor_offset_encoding,
    generate_traversal_tables,
    table_census,
)

__version__ = "0.1.0"
