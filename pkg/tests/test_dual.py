import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from htgrid import new_grid
from htgrid.cursors import iter_leaves, to_root
from htgrid.dual import (
    ResourceGuardError,
    adjust_dual_point,
    build_full_dual,
    generate_dual_cell,
    is_owner,
    max_cells_guard,
)

from oracles import Lattice, adjusted_violations, dual_violations, ownership_violations, random_grid


def test_single_leaf_owns_nothing():
    s = to_root(new_grid(2, 2, (1, 1)), (0, 0), "moore")
    assert not any(is_owner(s, c) for c in range(4))


def test_d1_shared_corner_has_one_owner():
    g = new_grid(1, 2, (2,))
    left = to_root(g, (0,), "moore")
    right = to_root(g, (1,), "moore")
    # the tie between equal-depth leaves goes to the greater slot: the right cell
    assert [is_owner(left, 1), is_owner(right, 0)] == [False, True]
    assert not is_owner(left, 0) and not is_owner(right, 1)


def test_uniform_2x2_corner():
    g = new_grid(2, 2, (2, 2))
    owners = [(c, k) for c in g.tree_coords() for k in range(4)
              if is_owner(to_root(g, c, "moore"), k)]
    assert owners == [((1, 1, 0), 0)]
    cell = generate_dual_cell(to_root(g, (1, 1), "moore"), 0)
    assert cell.points[:, :2].tolist() == [[0.5, 0.5], [1.5, 0.5], [0.5, 1.5], [1.5, 1.5]]


def test_d1_dual_segment():
    g = new_grid(1, 2, (2,))
    cell = generate_dual_cell(to_root(g, (1,), "moore"), 0)
    assert cell.points[:, 0].tolist() == [0.5, 1.5]
    with pytest.raises(ValueError):
        generate_dual_cell(to_root(g, (0,), "moore"), 1)


def test_t_junction_cell_mixes_sizes():
    g = new_grid(2, 2, (2, 1))
    g.subdivide((1, 0, 0), 0)
    g.finalize()
    mesh = build_full_dual(g)
    assert mesh.number_of_cells == 2
    assert not dual_violations(mesh)
    # both cells reach the center of the coarse left tree
    assert {tuple(p[:2]) for p in mesh.points} == {(0.5, 0.5), (1.25, 0.25), (1.75, 0.25),
                                                    (1.25, 0.75), (1.75, 0.75)}


def test_full_dual_counts():
    assert build_full_dual(new_grid(1, 2, (2,))).number_of_cells == 1
    assert build_full_dual(new_grid(1, 3, (7,))).number_of_cells == 6
    g = new_grid(2, 2, (1, 1))
    g.subdivide((0, 0, 0), 0)
    assert build_full_dual(g).number_of_cells == 1


def test_adjust_examples():
    g = new_grid(2, 2, (1, 1))
    assert adjust_dual_point(g, (0.25, 0.25, 0), (0, 0, 0), (0.5, 0.5, 0))[:2].tolist() == [0, 0]
    g = new_grid(2, 2, (3, 3))
    assert adjust_dual_point(g, (1.5, 1.5, 0), (1, 1, 0), (1, 1, 0))[:2].tolist() == [1.5, 1.5]
    assert adjust_dual_point(g, (0.5, 1.5, 0), (0, 1, 0), (1, 1, 0))[:2].tolist() == [0, 1.5]


def test_adjusted_dual_reaches_bounds():
    g = random_grid(2, 2, (2, 2), 3, 0.5, seed=5)
    mesh = build_full_dual(g, adjusted=True)
    lo, hi = g.bounding_box()
    assert np.allclose(mesh.points[:, :2].min(axis=0), lo[:2])
    assert np.allclose(mesh.points[:, :2].max(axis=0), hi[:2])
    assert not dual_violations(mesh, area=4.0)


def test_guard(monkeypatch):
    g = random_grid(2, 2, (2, 2), 2, 1.0, seed=0)
    with pytest.raises(ResourceGuardError):
        build_full_dual(g, max_cells=10)
    monkeypatch.setenv("HTG_MAX_CELLS", "5")
    assert max_cells_guard() == 5
    with pytest.raises(ResourceGuardError):
        build_full_dual(g)


def test_field_values_follow_points():
    g = random_grid(2, 2, (2, 2), 2, 0.5, seed=9)
    mesh = build_full_dual(g, field="Depth")
    assert mesh.values.tolist() == g.field("Depth")[mesh.point_ids].tolist()


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(1, 2), (1, 3), (2, 2), (2, 3), (3, 2)]), st.integers(1, 3),
       st.integers(0, 10**6), st.sampled_from([0.0, 0.2]))
def test_ownership_partition(cfg, depth, seed, mask_prob):
    d, f = cfg
    prob = 0.5 if f**d <= 4 else 0.2
    g = random_grid(d, f, (2,) * d, depth, prob, seed, mask_prob)
    assert ownership_violations(g) == []


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(2, 2), (2, 3), (3, 2)]), st.integers(1, 3), st.integers(0, 10**6))
def test_dual_tiles_the_grid(cfg, depth, seed):
    d, f = cfg
    prob = 0.5 if f**d <= 4 else 0.2
    g = random_grid(d, f, (2,) * d, depth, prob, seed)
    assert adjusted_violations(build_full_dual(g, adjusted=True), g) == []
    assert dual_violations(build_full_dual(g)) == []


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(2, 2), (2, 3), (3, 2)]), st.integers(1, 3), st.integers(0, 10**6))
def test_dual_conforms_with_mask(cfg, depth, seed):
    d, f = cfg
    prob = 0.5 if f**d <= 4 else 0.2
    g = random_grid(d, f, (2,) * d, depth, prob, seed, 0.2)
    assert dual_violations(build_full_dual(g)) == []


def test_owned_cells_use_leaf_centers():
    g = random_grid(3, 2, (2, 1, 1), 3, 0.4, seed=2)
    lat = Lattice(g)
    centers = {}
    for c in iter_leaves(g, "geometric"):
        centers[c.global_index] = c.center()
    mesh = build_full_dual(g)
    for p, gid in zip(mesh.points, mesh.point_ids):
        assert tuple(p) == centers[int(gid)]
        assert lat.by_index[int(gid)].leaf
