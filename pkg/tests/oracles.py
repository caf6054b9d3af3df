"""Independent reference implementations used only to check the package.

These deliberately use different algorithms (and different libraries) than
the code under test.
"""

import numpy as np
from shapely.geometry import LineString, Point as ShPoint, Polygon, box


def slab_segment_hits_rect(p, q, rect) -> bool:
    """Closed segment vs closed AABB via the parametric slab method."""
    xmin, ymin, xmax, ymax = rect
    t0, t1 = 0.0, 1.0
    for lo, hi, a, d in (
        (xmin, xmax, p[0], q[0] - p[0]),
        (ymin, ymax, p[1], q[1] - p[1]),
    ):
        if d == 0.0:
            if a < lo or a > hi:
                return False
        else:
            ta, tb = (lo - a) / d, (hi - a) / d
            if ta > tb:
                ta, tb = tb, ta
            t0, t1 = max(t0, ta), min(t1, tb)
            if t0 > t1:
                return False
    return True


def slab_los(p, q, region) -> bool:
    return not any(
        slab_segment_hits_rect((p.x, p.y), (q.x, q.y), rect)
        for rect in region.occupied_rects()
    )


def shapely_cell_occupied(polygon_pts, rect) -> bool:
    """Positive-area overlap between a polygon and a cell rectangle."""
    poly = Polygon(polygon_pts)
    cell = box(*rect)
    return poly.intersection(cell).area > 1e-9


def shapely_hull_open_overlap(points, rect) -> bool:
    """Positive-area overlap between conv(points) and a rectangle."""
    hull = Polygon(points).convex_hull if len(points) > 2 else Polygon()
    from shapely.geometry import MultiPoint

    hull = MultiPoint(points).convex_hull
    return hull.intersection(box(*rect)).area > 1e-12


def brute_relaxed_distance(u_i, u_j, region) -> float:
    """Max distance over the 16 corner pairs, enumerated."""
    best = 0.0
    for a in region.cell_corners(u_i):
        for b in region.cell_corners(u_j):
            best = max(best, np.hypot(a.x - b.x, a.y - b.y))
    return best
