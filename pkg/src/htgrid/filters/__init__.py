from .contour import SignArrays, contour, contour_preprocess
from .output import PolygonalOutput, UnstructuredOutput
from .cuts import axis_cut, plane_cutter
from .selection import Box, HalfSpace, Quadric, axis_clip, axis_reflection, depth_limiter, threshold
from .surface import cell_centers, geometry, to_unstructured
