from .export import export_csv_points, export_obj, read_obj
from .generators import complete_grid, generate_octant, generate_random
from .gridfile import GridFileError, canonical, dumps, grids_equal, loads, read_grid, text_dump, write_grid
