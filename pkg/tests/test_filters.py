import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from htgrid import memory_report, new_grid, shared_memory_report
from htgrid.cursors import iter_leaves
from htgrid.filters import (
    Box,
    HalfSpace,
    Quadric,
    axis_clip,
    axis_cut,
    axis_reflection,
    cell_centers,
    depth_limiter,
    geometry,
    plane_cutter,
    threshold,
    to_unstructured,
)
from htgrid.io import generate_octant

from oracles import Lattice, contour_violations, exposed_faces, random_grid, surface_faces


def _leaf_boxes(grid, field=None):
    """Sorted (lo, hi[, value]) of every visible leaf, rounded for comparison."""
    out = []
    for c in iter_leaves(grid, "geometric"):
        lo, hi = c.box()
        row = (tuple(round(x, 12) for x in lo), tuple(round(x, 12) for x in hi))
        if field is not None:
            row += (float(grid.field(field)[c.global_index]),)
        out.append(row)
    return sorted(out)


def _rows_sorted(a):
    return a[np.lexsort(np.round(a, 6).T[::-1])]


# -- depth limiter --------------------------------------------------------------------

def test_depth_limiter_deep_enough_is_identity():
    g = random_grid(2, 2, (2, 2), 3, 0.5, seed=1)
    out = depth_limiter(g, 5)
    assert _leaf_boxes(out, "Depth") == _leaf_boxes(g, "Depth")
    assert out.mask is None


def test_depth_limiter_zero():
    g = random_grid(3, 2, (2, 1, 1), 3, 0.6, seed=2)
    out = depth_limiter(g, 0)
    assert out.number_of_vertices() == 2 and out.max_depth() == 0
    with pytest.raises(ValueError):
        depth_limiter(g, -1)


def test_depth_limiter_keeps_partly_visible_cell():
    g = new_grid(2, 2, (1, 1))
    e = g.subdivide((0, 0, 0), 0)
    e2 = g.subdivide((0, 0, 0), e)
    g.finalize()
    mask = np.zeros(g.size, dtype=bool)
    mask[[e + 1, e + 2, e + 3]] = True
    mask[[e2, e2 + 1, e2 + 2]] = True       # one grandchild of child 0 stays visible
    g.set_mask(mask)
    out = depth_limiter(g, 1)
    leaves = list(iter_leaves(out, "geometric"))
    assert len(leaves) == 1 and leaves[0].depth == 1 and leaves[0].vertex == 1
    assert out.mask is not None


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 4), st.sampled_from([0.0, 0.3]))
def test_depth_limiter_matches_coarsened_lattice(seed, limit, mask_prob):
    g = random_grid(2, 2, (2, 2), 4, 0.5, seed, mask_prob)
    out = depth_limiter(g, limit)
    lat = Lattice(g)
    # visible output leaves: visible input cells at the limit, or shallower visible leaves
    want = sorted((n.lo, n.size) for n in lat.by_index.values()
                  if not n.masked and (n.leaf and n.depth <= limit or n.depth == limit))
    got = []
    for c in iter_leaves(out, "geometric"):
        lo, hi = c.box()
        got.append((lat.to_lattice(lo), lat.to_lattice(hi)[0] - lat.to_lattice(lo)[0]))
    assert sorted(got) == want
    assert out.max_depth() <= limit


# -- threshold --------------------------------------------------------------------------

def test_threshold_examples():
    g = random_grid(2, 2, (3, 3), 4, 0.5, seed=3)
    n = len(list(iter_leaves(g, "grid")))
    out = threshold(g, "Depth", -math.inf, math.inf)
    assert out.mask is not None and len(list(iter_leaves(out, "grid"))) == n
    out = threshold(g, "Depth", 1, 3)
    depth = g.field("Depth")
    assert all(1 <= depth[c.global_index] <= 3 for c in iter_leaves(out, "grid"))
    assert all(c.depth > 0 for c in iter_leaves(out, "grid"))
    assert list(iter_leaves(threshold(g, "Depth", 2, 1), "grid")) == []
    with pytest.raises(KeyError):
        threshold(g, "nope", 0, 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(-0.5, 3.5), st.floats(0, 3), st.sampled_from([0.0, 0.2]))
def test_threshold_selects_exactly_in_range(seed, lo, width, mask_prob):
    g = random_grid(2, 3, (2, 2), 3, 0.3, seed, mask_prob)
    values = g.field("Depth")
    before = {c.global_index for c in iter_leaves(g, "grid")}
    after = {c.global_index for c in iter_leaves(threshold(g, "Depth", lo, lo + width), "grid")}
    assert after == {i for i in before if lo <= values[i] <= lo + width}


def test_threshold_shares_storage():
    g = random_grid(2, 2, (2, 2), 3, 0.5, seed=3)
    out = threshold(g, "Depth", 1, 2)
    assert out.trees is g.trees or all(out.trees[c] is g.trees[c] for c in g.trees)
    assert out.fields["Depth"] is g.fields["Depth"]


# -- clip ---------------------------------------------------------------------------------

def test_clip_keep_everything():
    g = random_grid(3, 2, (2, 2, 2), 2, 0.5, seed=4)
    n = len(list(iter_leaves(g, "grid")))
    assert len(list(iter_leaves(axis_clip(g, HalfSpace(0, -1.0, 1)), "grid"))) == n
    (o, s) = g.bounds()
    assert len(list(iter_leaves(axis_clip(g, Box(o, s)), "grid"))) == n


def test_clip_modes_validate():
    with pytest.raises(ValueError):
        Quadric((0,) * 10)
    with pytest.raises(ValueError):
        Quadric((1, 2, 3))
    with pytest.raises(ValueError):
        HalfSpace(3, 0.0)
    with pytest.raises(ValueError):
        HalfSpace(0, 0.0, 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 2), st.floats(0.0, 2.0), st.sampled_from([1, -1]))
def test_halfspace_clip(seed, axis, omega, side):
    g = random_grid(3, 2, (2, 2, 2), 3, 0.3, seed)
    out = axis_clip(g, HalfSpace(axis, omega, side))
    kept = {c.global_index for c in iter_leaves(out, "grid")}
    for c in iter_leaves(g, "geometric"):
        lo, hi = c.box()
        keep = hi[axis] >= omega if side > 0 else lo[axis] <= omega
        assert (c.global_index in kept) == keep


def test_quadric_clip_on_octant():
    g = generate_octant(levels=3)
    ball = Quadric((1, 0, 0, 0, -1, -1, -1, 0, 0, 0))
    out = axis_clip(g, ball)
    n = 0
    for c in iter_leaves(out, "geometric"):
        lo, hi = c.box()
        for p in itertools.product(*zip(lo, hi)):
            assert ball(*p) >= 0
        n += 1
    assert 0 < n < len(list(iter_leaves(g, "grid")))


# -- reflection -----------------------------------------------------------------------------

def test_reflection_examples():
    g = new_grid(1, 2, (1,))
    r = axis_reflection(g, 0, 0.5)
    assert sorted(r.coordinates[0].tolist()) == [0.0, 1.0]
    assert r.coordinates[0].tolist() == [1.0, 0.0]
    g = random_grid(3, 2, (2, 2, 2), 3, 0.4, seed=5)
    twice = axis_reflection(axis_reflection(g, 1, 0.7), 1, 0.7)
    assert all(np.array_equal(a, b) for a, b in zip(twice.coordinates, g.coordinates))
    assert _leaf_boxes(twice, "Depth") == _leaf_boxes(g, "Depth")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 2), st.floats(-2, 2))
def test_reflection_mirrors_every_leaf(seed, axis, omega):
    g = random_grid(3, 3, (2, 1, 2), 2, 0.1, seed, 0.1)
    r = axis_reflection(g, axis, omega)
    want = []
    for lo, hi, v in _leaf_boxes(g, "Depth"):
        lo, hi = list(lo), list(hi)
        lo[axis], hi[axis] = 2 * omega - hi[axis], 2 * omega - lo[axis]
        want.append(lo + hi + [v])
    got = np.array([list(lo) + list(hi) + [v] for lo, hi, v in _leaf_boxes(r, "Depth")])
    want = np.array(want)
    assert got.shape == want.shape and np.allclose(_rows_sorted(got), _rows_sorted(want), atol=1e-9)


def test_reflection_about_midplanes_keeps_bounds():
    g = random_grid(3, 2, (2, 3, 1), 2, 0.4, seed=6)
    lo, hi = g.bounding_box()
    r = g
    for k in range(3):
        r = axis_reflection(r, k, (lo[k] + hi[k]) / 2)
    lo2, hi2 = r.bounding_box()
    assert np.allclose(lo, lo2) and np.allclose(hi, hi2)


def test_reflection_shares_everything_else():
    g = random_grid(2, 2, (2, 2), 3, 0.5, seed=7)
    r = axis_reflection(g, 0, 0.0)
    assert r.fields["Depth"] is g.fields["Depth"]
    assert all(r.trees[c] is g.trees[c] for c in g.trees)
    assert r.coordinates[1] is g.coordinates[1]
    extra = shared_memory_report([g, r]).total_bytes - memory_report(g).total_bytes
    assert extra == 8 * len(g.coordinates[0])


# -- axis cut ----------------------------------------------------------------------------------

def test_axis_cut_example():
    g = new_grid(3, 2, (2, 2, 1))
    out = axis_cut(g, 0, 0.5)
    assert out.dimension == 2 and out.number_of_trees() == 2
    assert len(list(iter_leaves(out, "grid"))) == 2
    with pytest.raises(ValueError):
        axis_cut(g, 0, 2.5)
    with pytest.raises(ValueError):
        axis_cut(new_grid(1, 2, (2,)), 0, 0.5)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 2), st.floats(0.0, 1.999), st.sampled_from([0.0, 0.2]))
def test_axis_cut_matches_leaf_boxes(seed, axis, w, mask_prob):
    g = random_grid(3, 2, (2, 2, 2), 3, 0.4, seed, mask_prob)
    out = axis_cut(g, axis, w)
    assert (out.mask is not None) == (g.mask is not None)
    keep = [k for k in range(3) if k != axis]
    want = []
    for lo, hi, v in _leaf_boxes(g, "Depth"):
        if lo[axis] <= w < hi[axis]:
            want.append((tuple(lo[k] for k in keep), tuple(hi[k] for k in keep), v))
    # the output stores the kept axes first, in order
    got = [(lo[:2], hi[:2], v) for lo, hi, v in _leaf_boxes(out, "Depth")]
    assert sorted(got) == sorted(want)


def test_axis_cut_of_quadtree():
    g = random_grid(2, 3, (2, 2), 2, 0.4, seed=3)
    out = axis_cut(g, 1, 1.2)
    assert out.dimension == 1
    lengths = sum(hi[0] - lo[0] for lo, hi in _leaf_boxes(out))
    assert abs(lengths - 2.0) < 1e-12


# -- centers, geometry, explicit cells ------------------------------------------------------------

def test_cell_centers_examples():
    out = cell_centers(new_grid(3, 2, (1, 1, 1)))
    assert out.points.tolist() == [[0.5, 0.5, 0.5]] and out.verts == [[0]]
    g = new_grid(2, 2, (1, 1))
    g.subdivide((0, 0, 0), 0)
    pts = sorted(map(tuple, cell_centers(g, as_polydata=False).points[:, :2]))
    assert pts == [(0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75)]
    assert cell_centers(g, as_polydata=False).verts == []
    g.set_mask(np.ones(g.size, dtype=bool))
    assert cell_centers(g).number_of_points == 0


def test_geometry_examples():
    assert geometry(new_grid(3, 2, (1, 1, 1))).number_of_cells == 6
    g = new_grid(3, 2, (2, 1, 1))
    assert geometry(g).number_of_cells == 10
    g.mask_set(1)
    assert geometry(g).number_of_cells == 6
    g = new_grid(2, 2, (2, 1))
    assert len(geometry(g).polys) == 2
    assert len(geometry(new_grid(1, 2, (3,))).lines) == 3


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(1, 3), st.integers(0, 10**6), st.sampled_from([0.0, 0.2, 0.4]))
def test_geometry_covers_exposed_faces(f, depth, seed, mask_prob):
    g = random_grid(3, f, (2, 2, 1), depth, 0.4 if f == 2 else 0.08, seed, mask_prob)
    lat = Lattice(g)
    out = geometry(g)
    assert surface_faces(out, lat) == exposed_faces(lat)


def test_geometry_on_reflected_grid():
    g = random_grid(3, 2, (2, 2, 1), 2, 0.4, seed=3, mask_prob=0.2)
    a = geometry(g)
    b = geometry(axis_reflection(g, 0, 1.0))
    assert a.number_of_cells == b.number_of_cells
    # outward normals point away from the visible cells in both
    for out, grid in ((a, g), (b, axis_reflection(g, 0, 1.0))):
        for cell in out.polys:
            p = out.points[cell]
            n = np.cross(p[1] - p[0], p[2] - p[0])
            probe = p.mean(axis=0) + 1e-6 * n / np.linalg.norm(n)
            inside = any(all(lo[k] < probe[k] < hi[k] for k in range(3))
                         for lo, hi in (c.box() for c in iter_leaves(grid, "geometric")))
            assert not inside


def test_to_unstructured_examples():
    u = to_unstructured(new_grid(3, 2, (1, 1, 1)))
    assert len(u.points) == 8 and u.number_of_cells == 1
    g = new_grid(3, 2, (1, 1, 1))
    g.subdivide((0, 0, 0), 0)
    u = to_unstructured(g)
    assert len(u.points) == 64 and u.number_of_cells == 8
    u = to_unstructured(new_grid(2, 2, (1, 1)))
    assert len(u.points) == 4 and u.number_of_cells == 1
    assert u.footprint_bytes() == 4 * 24 + 4 * 8 + 8 + 1


def test_to_unstructured_hexahedra_are_valid():
    g = random_grid(3, 2, (1, 1, 1), 2, 0.5, seed=1)
    u = to_unstructured(g)
    for conn in u.connectivity:
        p = u.points[conn]
        # VTK order: bottom face counter-clockwise, then the top face above it
        assert np.allclose(p[4:, :2], p[:4, :2]) and (p[4:, 2] > p[:4, 2]).all()
        assert np.cross(p[1] - p[0], p[3] - p[0])[2] > 0


# -- plane cutter -----------------------------------------------------------------------------------

def test_plane_cutter_axis_aligned_matches_axis_cut():
    g = new_grid(3, 2, (2, 3, 2))
    primal = plane_cutter(g, (0, 1, 0), 1.5)
    cut = axis_cut(g, 1, 1.5)
    boxes = sorted((round(lo[0], 12), round(lo[1], 12), round(hi[0], 12), round(hi[1], 12))
                   for lo, hi in (c.box() for c in iter_leaves(cut, "geometric")))
    polys = []
    for cell in primal.polys:
        p = primal.points[cell]
        assert np.allclose(p[:, 1], 1.5)
        polys.append((p[:, 0].min(), p[:, 2].min(), p[:, 0].max(), p[:, 2].max()))
    assert sorted(polys) == boxes


def test_plane_cutter_misses_grid():
    g = new_grid(3, 2, (1, 1, 1))
    assert plane_cutter(g, (1, 1, 1), 10.0).number_of_cells == 0
    with pytest.raises(ValueError):
        plane_cutter(g, (0, 0, 0), 1.0)
    with pytest.raises(ValueError):
        plane_cutter(g, (1, 0, 0), 0.5, mode="other")


@given(st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)), st.floats(-0.5, 2))
def test_oblique_plane_through_cube(n, c):
    n = np.array(n)
    if np.linalg.norm(n) < 1e-3:
        return
    g = new_grid(3, 2, (1, 1, 1))
    out = plane_cutter(g, n, c)
    corners = np.array(list(itertools.product((0, 1), repeat=3)), dtype=float)
    dist = corners @ n - c
    crosses = dist.min() <= 0 < dist.max()
    if out.number_of_cells == 0:
        # only a plane grazing an edge or corner (or missing the cube) gives nothing
        assert not crosses or (dist >= -1e-12).sum() >= 6 or np.sum(np.abs(dist) < 1e-12) >= 1
        return
    poly = out.points[out.polys[0]]
    assert out.number_of_cells == 1 and 3 <= len(poly) <= 6
    assert np.allclose(poly @ n, c)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.2, 1)),
       st.floats(0.3, 1.2))
def test_dual_plane_cutter_is_conforming(seed, n, c):
    g = random_grid(3, 2, (2, 2, 1), 3, 0.35, seed)
    out = plane_cutter(g, n, c, mode="dual")
    assert contour_violations(g, out) == []
    nn = np.asarray(n) / 1.0
    assert np.allclose(out.points @ nn, c, atol=1e-9)
