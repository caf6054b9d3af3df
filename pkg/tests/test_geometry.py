import math

import numpy as np
import pytest

from netsynth.geometry import (
    Cell,
    GridRegion,
    Point,
    cell_pair_hull,
    covered_open_cells,
    discretize_obstacles,
    exact_distance,
    exact_los,
    los_from_point,
    relaxed_distance,
    relaxed_visibility,
)
from conftest import random_region
from oracles import (
    brute_relaxed_distance,
    shapely_cell_occupied,
    shapely_hull_open_overlap,
    slab_los,
)


# -- discretize_obstacles ------------------------------------------------------


def test_discretize_no_obstacles():
    region = discretize_obstacles([], 4, 4, 1.0)
    assert region.n_occupied == 0
    assert region.n_open == 16


def test_discretize_aligned_box_marks_single_cell():
    region = discretize_obstacles([[(1, 1), (2, 1), (2, 2), (1, 2)]], 4, 4, 1.0)
    assert region.occupied_cells() == [Cell(1, 1)]


def test_discretize_edge_touch_leaves_cell_open():
    # box exactly covering (1,1) only touches neighbours along edges
    region = discretize_obstacles([[(1, 1), (2, 1), (2, 2), (1, 2)]], 4, 4, 1.0)
    assert not region.is_occupied(Cell(0, 1))
    assert not region.is_occupied(Cell(1, 0))


def test_discretize_triangle_clipping_two_cells():
    tri = [(0.2, 0.2), (1.8, 0.2), (0.2, 0.9)]
    region = discretize_obstacles([tri], 3, 3, 1.0)
    assert region.is_occupied(Cell(0, 0))
    assert region.is_occupied(Cell(1, 0))
    assert region.n_occupied == 2


def test_discretize_rejects_degenerate_polygon():
    with pytest.raises(ValueError):
        discretize_obstacles([[(0, 0), (1, 1)]], 4, 4, 1.0)


def test_discretize_matches_shapely_on_random_polygons(rng):
    for _ in range(60):
        n = rng.integers(3, 8)
        pts = [(rng.uniform(0, 5), rng.uniform(0, 5)) for _ in range(n)]
        # build a simple polygon by angular sort around the centroid
        cx = sum(p[0] for p in pts) / n
        cy = sum(p[1] for p in pts) / n
        pts.sort(key=lambda p: math.atan2(p[1] - cy, p[0] - cx))
        region = discretize_obstacles([pts], 5, 5, 1.0)
        for r in range(5):
            for c in range(5):
                want = shapely_cell_occupied(pts, (c, r, c + 1, r + 1))
                assert region.is_occupied(Cell(c, r)) == want, (pts, c, r)


# -- exact distance / relaxed distance -----------------------------------------


def test_exact_distance_cases():
    assert exact_distance(Point(0, 0), Point(3, 4)) == 5
    assert exact_distance(Point(1, 2), Point(1, 2)) == 0
    assert exact_distance(Point(1, 2), Point(4, 6)) == 5


def test_relaxed_distance_cases():
    region = GridRegion(4, 4, 1.0)
    assert relaxed_distance(Cell(0, 0), Cell(0, 0), region) == pytest.approx(math.sqrt(2))
    assert relaxed_distance(Cell(0, 0), Cell(1, 0), region) == pytest.approx(math.sqrt(5))
    assert relaxed_distance(Cell(0, 0), Cell(3, 0), region) == pytest.approx(math.sqrt(17))


def test_relaxed_distance_matches_corner_enumeration(rng):
    region = GridRegion(8, 6, 0.7)
    cells = region.open_cells
    for _ in range(200):
        a, b = rng.choice(len(cells), size=2)
        u, v = cells[a], cells[b]
        assert relaxed_distance(u, v, region) == pytest.approx(
            brute_relaxed_distance(u, v, region)
        )
        assert relaxed_distance(u, v, region) == pytest.approx(
            relaxed_distance(v, u, region)
        )


def test_relaxed_distance_rejects_occupied():
    region = GridRegion.from_occupied_cells(3, 3, 1.0, [Cell(1, 1)])
    with pytest.raises(ValueError):
        relaxed_distance(Cell(1, 1), Cell(0, 0), region)


def test_relaxed_distance_over_approximates_point_pairs(rng):
    region = GridRegion(6, 6, 1.0)
    cells = region.open_cells
    for _ in range(50):
        a, b = rng.choice(len(cells), size=2)
        u, v = cells[a], cells[b]
        dmax = relaxed_distance(u, v, region)
        for _ in range(30):
            px = (u.col + rng.uniform()) * 1.0
            py = (u.row + rng.uniform()) * 1.0
            qx = (v.col + rng.uniform()) * 1.0
            qy = (v.row + rng.uniform()) * 1.0
            assert math.hypot(px - qx, py - qy) <= dmax + 1e-12


# -- exact_los -------------------------------------------------------------------


def test_los_obstacle_free_always_true():
    region = GridRegion(5, 5, 1.0)
    assert exact_los(Point(0.1, 0.1), Point(4.9, 4.8), region)


def test_los_diagonal_blocked_and_side_clear():
    region = GridRegion.from_occupied_cells(4, 4, 1.0, [Cell(1, 1)])
    assert not exact_los(Point(0.5, 0.5), Point(2.5, 2.5), region)
    assert exact_los(Point(0.5, 0.5), Point(0.5, 2.5), region)


def test_los_touching_counts_as_blocked():
    region = GridRegion.from_occupied_cells(4, 4, 1.0, [Cell(1, 1)])
    # segment along y=1 grazes the obstacle's bottom edge
    assert not exact_los(Point(0.5, 1.0), Point(3.5, 1.0), region)


def test_los_symmetry(rng):
    region = random_region(rng, 6, 6, n_occupied=6)
    cs = region.cell_size
    for _ in range(300):
        p = Point(rng.uniform(0, 6 * cs), rng.uniform(0, 6 * cs))
        q = Point(rng.uniform(0, 6 * cs), rng.uniform(0, 6 * cs))
        assert exact_los(p, q, region) == exact_los(q, p, region)


def test_los_matches_slab_oracle(rng):
    for _ in range(30):
        region = random_region(rng, 7, 7, n_occupied=int(rng.integers(0, 10)))
        for _ in range(200):
            p = Point(rng.uniform(0, 7), rng.uniform(0, 7))
            q = Point(rng.uniform(0, 7), rng.uniform(0, 7))
            assert exact_los(p, q, region) == slab_los(p, q, region)


def test_los_from_point_matches_scalar(rng):
    region = random_region(rng, 6, 6, n_occupied=7)
    p = Point(0.37, 4.2)
    targets = rng.uniform(0, 6, size=(150, 2))
    mask = los_from_point(p, targets, region)
    for t, ok in zip(targets, mask):
        assert ok == exact_los(p, Point(t[0], t[1]), region)


# -- relaxed_visibility -----------------------------------------------------------


def test_relaxed_visibility_obstacle_free():
    region = GridRegion(4, 4, 1.0)
    assert relaxed_visibility(Cell(0, 0), Cell(3, 3), region)


def test_relaxed_visibility_diagonal_shadow():
    region = GridRegion.from_occupied_cells(4, 4, 1.0, [Cell(1, 1)])
    assert not relaxed_visibility(Cell(0, 0), Cell(2, 2), region)
    # horizontally past a diagonal obstacle is blocked as well
    assert not relaxed_visibility(Cell(0, 0), Cell(2, 1), region)
    # passing underneath is fine
    assert relaxed_visibility(Cell(0, 0), Cell(2, 0), region)


def test_relaxed_visibility_clear_side_cell():
    region = GridRegion.from_occupied_cells(4, 4, 1.0, [Cell(2, 1)])
    assert relaxed_visibility(Cell(0, 0), Cell(0, 2), region)


def test_relaxed_visibility_rejects_occupied():
    region = GridRegion.from_occupied_cells(3, 3, 1.0, [Cell(1, 1)])
    with pytest.raises(ValueError):
        relaxed_visibility(Cell(1, 1), Cell(0, 0), region)


def test_relaxed_visibility_matches_shapely_hull_overlap(rng):
    for _ in range(25):
        region = random_region(rng, 6, 6, n_occupied=int(rng.integers(1, 8)))
        cells = region.open_cells
        for _ in range(60):
            a, b = rng.choice(len(cells), size=2)
            u, v = cells[a], cells[b]
            pts = [(p.x, p.y) for p in region.cell_corners(u) + region.cell_corners(v)]
            want = not any(
                shapely_hull_open_overlap(pts, tuple(rect))
                for rect in region.occupied_rects()
            )
            assert relaxed_visibility(u, v, region) == want


def test_relaxed_visibility_implies_exact_los_for_interior_points(rng):
    # soundness of the under-approximation: B' true => any interior point of
    # one cell sees any interior point of the other
    checked = 0
    for _ in range(40):
        region = random_region(rng, 6, 6, n_occupied=int(rng.integers(1, 8)))
        cells = region.open_cells
        for _ in range(40):
            a, b = rng.choice(len(cells), size=2)
            u, v = cells[a], cells[b]
            if not relaxed_visibility(u, v, region):
                continue
            checked += 1
            for _ in range(20):
                p = Point(u.col + rng.uniform(1e-6, 1 - 1e-6), u.row + rng.uniform(1e-6, 1 - 1e-6))
                q = Point(v.col + rng.uniform(1e-6, 1 - 1e-6), v.row + rng.uniform(1e-6, 1 - 1e-6))
                assert exact_los(p, q, region)
    assert checked > 100


def test_hull_of_identical_cells_is_square():
    region = GridRegion(3, 3, 2.0)
    hull = cell_pair_hull(Cell(1, 1), Cell(1, 1), region)
    assert sorted(hull) == [(2.0, 2.0), (2.0, 4.0), (4.0, 2.0), (4.0, 4.0)]


# -- demanded corners / coverage kernel ---------------------------------------------


def test_demanded_corners_exclude_obstacle_lattice_points():
    region = GridRegion.from_occupied_cells(3, 3, 1.0, [Cell(1, 1)])
    got = {(p.x, p.y) for p in region.demanded_corners(Cell(0, 0))}
    # corner (1,1) lies on the obstacle cell
    assert got == {(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)}
    # cell (2,0) shares corner (2,1) with the obstacle, so 3 corners remain
    assert len(region.demanded_corners(Cell(2, 0))) == 3
    # cell (2,2) shares corner (2,2) with the obstacle
    assert len(region.demanded_corners(Cell(2, 2))) == 3


def test_covered_open_cells_full_coverage_no_obstacles():
    region = GridRegion(3, 3, 1.0)
    mask = covered_open_cells(Point(1.5, 1.5), 10.0, region)
    assert mask.all()


def test_covered_open_cells_respects_range():
    region = GridRegion(5, 1, 1.0)
    mask = covered_open_cells(Point(0.5, 0.5), 1.2, region)
    # corners of cell 1 reach sqrt(1.5^2+0.5^2)=1.58 > 1.2
    assert mask[0]
    assert not mask[1:].any()


def test_covered_open_cells_matches_direct_predicates(rng):
    region = random_region(rng, 6, 6, n_occupied=6)
    spec_r = 4.5
    for _ in range(20):
        p = Point(rng.uniform(0, 6), rng.uniform(0, 6))
        mask = covered_open_cells(p, spec_r, region)
        for idx, cell in enumerate(region.open_cells):
            want = all(
                exact_distance(p, corner) <= spec_r and exact_los(p, corner, region)
                for corner in region.demanded_corners(cell)
            )
            assert mask[idx] == want
