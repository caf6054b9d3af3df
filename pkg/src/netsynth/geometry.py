"""Grid discretization of the deployment region and the exact / relaxed
distance and line-of-sight predicates everything else is built on.

Conventions:
  - all coordinates are meters, as floats; the region spans
    [0, width*cell_size] x [0, height*cell_size] with the origin at the
    lower-left corner
  - cells are addressed as (col, row), cell (c, r) being the square
    [c*cs, (c+1)*cs] x [r*cs, (r+1)*cs]
  - blocking is conservative: a sight line that touches the boundary of an
    occupied cell counts as blocked
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __iter__(self):
        yield self.x
        yield self.y


@dataclass(frozen=True, order=True)
class Cell:
    col: int
    row: int


@dataclass(frozen=True)
class SensorSpec:
    """One sensor type: sensing radius r_s and communication radius r_c."""

    type_id: int
    r_s: float
    r_c: float

    def __post_init__(self):
        if self.r_s <= 0 or self.r_c <= 0:
            raise ValueError("sensor radii must be positive")

    @property
    def beta(self) -> float:
        return self.r_c / self.r_s


class GridRegion:
    """Discretized deployment area: a width x height grid of square cells,
    each either occupied by an obstacle or open.

    Immutable after construction; the occupancy array is write-protected.
    """

    def __init__(self, width: int, height: int, cell_size: float, occupancy=None):
        if width < 1 or height < 1:
            raise ValueError("region must be at least 1x1 cells")
        if cell_size <= 0:
            raise ValueError("cell_size must be positive")
        self.width = int(width)
        self.height = int(height)
        self.cell_size = float(cell_size)
        if occupancy is None:
            occ = np.zeros((self.height, self.width), dtype=bool)
        else:
            occ = np.array(occupancy, dtype=bool)
            if occ.shape != (self.height, self.width):
                raise ValueError(
                    f"occupancy shape {occ.shape} != (height={height}, width={width})"
                )
        occ.flags.writeable = False
        self.occupancy = occ  # [row, col]
        self._open_cells = [
            Cell(int(c), int(r))
            for r in range(self.height)
            for c in range(self.width)
            if not occ[r, c]
        ]
        self._cell_index = {cell: i for i, cell in enumerate(self._open_cells)}
        # occupied cell rectangles as (xmin, ymin, xmax, ymax) rows
        rows, cols = np.nonzero(occ)
        cs = self.cell_size
        self._occ_rects = np.column_stack(
            [cols * cs, rows * cs, (cols + 1) * cs, (rows + 1) * cs]
        ).astype(float)
        self._occ_rects.flags.writeable = False
        # prefix sums for "any obstacle in this cell range" queries
        self._occ_prefix = np.zeros((self.height + 1, self.width + 1), dtype=np.int32)
        np.cumsum(np.cumsum(occ, axis=0), axis=1, out=self._occ_prefix[1:, 1:])
        # a lattice corner is "blocked" when it lies on some closed occupied
        # cell; such corners carry no coverage demand (they belong to O)
        padded = np.zeros((self.height + 2, self.width + 2), dtype=bool)
        padded[1:-1, 1:-1] = occ
        self._corner_blocked = (
            padded[:-1, :-1] | padded[:-1, 1:] | padded[1:, :-1] | padded[1:, 1:]
        )
        self._corner_blocked.flags.writeable = False

    # -- basic queries ------------------------------------------------------

    @classmethod
    def from_occupied_cells(cls, width, height, cell_size, cells) -> "GridRegion":
        occ = np.zeros((height, width), dtype=bool)
        for c in cells:
            col, row = (c.col, c.row) if isinstance(c, Cell) else c
            occ[row, col] = True
        return cls(width, height, cell_size, occ)

    def is_occupied(self, cell: Cell) -> bool:
        return bool(self.occupancy[cell.row, cell.col])

    @property
    def open_cells(self) -> list:
        return self._open_cells

    @property
    def n_open(self) -> int:
        return len(self._open_cells)

    @property
    def n_occupied(self) -> int:
        return int(self.occupancy.sum())

    def cell_index(self, cell: Cell) -> int:
        return self._cell_index[cell]

    def occupied_cells(self) -> list:
        rows, cols = np.nonzero(self.occupancy)
        return [Cell(int(c), int(r)) for r, c in zip(rows, cols)]

    def occupied_rects(self) -> np.ndarray:
        return self._occ_rects

    def cell_rect(self, cell: Cell):
        cs = self.cell_size
        return (cell.col * cs, cell.row * cs, (cell.col + 1) * cs, (cell.row + 1) * cs)

    def cell_center(self, cell: Cell) -> Point:
        cs = self.cell_size
        return Point((cell.col + 0.5) * cs, (cell.row + 0.5) * cs)

    def cell_corners(self, cell: Cell):
        x0, y0, x1, y1 = self.cell_rect(cell)
        return [Point(x0, y0), Point(x1, y0), Point(x1, y1), Point(x0, y1)]

    def corner_is_blocked(self, ci: int, cj: int) -> bool:
        """True when lattice corner (ci*cs, cj*cs) lies on an occupied cell."""
        return bool(self._corner_blocked[cj, ci])

    def demanded_corners(self, cell: Cell):
        """Corners of `cell` that carry a coverage demand: the ones not lying
        on any closed occupied cell (they are in L \\ O)."""
        out = []
        for dc, dr in ((0, 0), (1, 0), (1, 1), (0, 1)):
            ci, cj = cell.col + dc, cell.row + dr
            if not self._corner_blocked[cj, ci]:
                out.append(Point(ci * self.cell_size, cj * self.cell_size))
        return out

    def occupied_in_range(self, c0: int, r0: int, c1: int, r1: int) -> int:
        """Number of occupied cells with col in [c0, c1], row in [r0, r1]."""
        c0, r0 = max(c0, 0), max(r0, 0)
        c1, r1 = min(c1, self.width - 1), min(r1, self.height - 1)
        if c0 > c1 or r0 > r1:
            return 0
        p = self._occ_prefix
        return int(p[r1 + 1, c1 + 1] - p[r0, c1 + 1] - p[r1 + 1, c0] + p[r0, c0])

    def occupied_cells_in_range(self, c0, r0, c1, r1):
        c0, r0 = max(c0, 0), max(r0, 0)
        c1, r1 = min(c1, self.width - 1), min(r1, self.height - 1)
        sub = self.occupancy[r0 : r1 + 1, c0 : c1 + 1]
        rows, cols = np.nonzero(sub)
        return [Cell(int(c + c0), int(r + r0)) for r, c in zip(rows, cols)]

    def contains_point(self, p: Point) -> bool:
        cs = self.cell_size
        return 0.0 <= p.x <= self.width * cs and 0.0 <= p.y <= self.height * cs

    def point_in_obstacle(self, p: Point) -> bool:
        """True when p lies on/in any closed occupied cell."""
        r = self._occ_rects
        if len(r) == 0:
            return False
        return bool(
            np.any((p.x >= r[:, 0]) & (p.x <= r[:, 2]) & (p.y >= r[:, 1]) & (p.y <= r[:, 3]))
        )

    def subregion(self, c0: int, r0: int, w: int, h: int) -> "GridRegion":
        """Crop to the cell rectangle [c0, c0+w) x [r0, r0+h)."""
        return GridRegion(
            w, h, self.cell_size, self.occupancy[r0 : r0 + h, c0 : c0 + w].copy()
        )

    def __eq__(self, other):
        return (
            isinstance(other, GridRegion)
            and self.width == other.width
            and self.height == other.height
            and self.cell_size == other.cell_size
            and bool(np.array_equal(self.occupancy, other.occupancy))
        )

    def __repr__(self):
        return (
            f"GridRegion({self.width}x{self.height}, cell={self.cell_size}, "
            f"occupied={self.n_occupied})"
        )


# -- distances ---------------------------------------------------------------


def exact_distance(p: Point, q: Point) -> float:
    return math.hypot(p.x - q.x, p.y - q.y)


def relaxed_distance(u_i: Cell, u_j: Cell, region: GridRegion) -> float:
    """dist': max distance between points of the two cells, i.e. the distance
    between their farthest opposite corners.  Over-approximates every
    point-pair distance, so a range check against it is sound for any
    real-valued positions inside the cells."""
    for u in (u_i, u_j):
        if region.is_occupied(u):
            raise ValueError(f"relaxed_distance over occupied cell {u}")
    cs = region.cell_size
    dx = (abs(u_i.col - u_j.col) + 1) * cs
    dy = (abs(u_i.row - u_j.row) + 1) * cs
    return math.hypot(dx, dy)


# -- exact line of sight -------------------------------------------------------


def _segment_hits_rect(px, py, qx, qy, xmin, ymin, xmax, ymax) -> bool:
    """Closed segment vs closed rectangle intersection (touching counts).

    Separating-axis test: disjoint iff both endpoints are strictly beyond one
    rectangle face, or all four rectangle corners are strictly on one side of
    the segment's supporting line.
    """
    # axis-aligned separation (both points strictly beyond one face)
    if (px < xmin and qx < xmin) or (px > xmax and qx > xmax):
        return False
    if (py < ymin and qy < ymin) or (py > ymax and qy > ymax):
        return False
    # separation along the segment normal
    dx, dy = qx - px, qy - py
    c1 = dx * (ymin - py) - dy * (xmin - px)
    c2 = dx * (ymin - py) - dy * (xmax - px)
    c3 = dx * (ymax - py) - dy * (xmax - px)
    c4 = dx * (ymax - py) - dy * (xmin - px)
    if (c1 > 0 and c2 > 0 and c3 > 0 and c4 > 0) or (
        c1 < 0 and c2 < 0 and c3 < 0 and c4 < 0
    ):
        return False
    return True


def exact_los(p: Point, q: Point, region: GridRegion) -> bool:
    """Line-of-sight predicate: true iff the closed segment pq does not touch
    any occupied cell's closed rectangle."""
    rects = region._occ_rects
    if len(rects) == 0:
        return True
    px, py, qx, qy = p.x, p.y, q.x, q.y
    # only obstacles overlapping the segment's bounding box can block
    cs = region.cell_size
    c0 = int(math.floor(min(px, qx) / cs)) - 1
    c1 = int(math.floor(max(px, qx) / cs)) + 1
    r0 = int(math.floor(min(py, qy) / cs)) - 1
    r1 = int(math.floor(max(py, qy) / cs)) + 1
    if region.occupied_in_range(c0, r0, c1, r1) == 0:
        return True
    for cell in region.occupied_cells_in_range(c0, r0, c1, r1):
        xmin, ymin, xmax, ymax = region.cell_rect(cell)
        if _segment_hits_rect(px, py, qx, qy, xmin, ymin, xmax, ymax):
            return False
    return True


def los_from_point(p: Point, targets: np.ndarray, region: GridRegion) -> np.ndarray:
    """Vectorized exact_los from one point to many: targets is (m, 2); returns
    a boolean (m,) visibility mask."""
    targets = np.asarray(targets, dtype=float)
    m = len(targets)
    visible = np.ones(m, dtype=bool)
    rects = region._occ_rects
    if len(rects) == 0 or m == 0:
        return visible
    px, py = p.x, p.y
    tx, ty = targets[:, 0], targets[:, 1]
    for xmin, ymin, xmax, ymax in rects:
        b2 = np.zeros(m, dtype=bool)
        if px < xmin:
            b2 |= tx < xmin
        if px > xmax:
            b2 |= tx > xmax
        if py < ymin:
            b2 |= ty < ymin
        if py > ymax:
            b2 |= ty > ymax
        todo = visible & ~b2
        if not todo.any():
            continue
        dx, dy = tx[todo] - px, ty[todo] - py
        c1 = dx * (ymin - py) - dy * (xmin - px)
        c2 = dx * (ymin - py) - dy * (xmax - px)
        c3 = dx * (ymax - py) - dy * (xmax - px)
        c4 = dx * (ymax - py) - dy * (xmin - px)
        b1 = ((c1 > 0) & (c2 > 0) & (c3 > 0) & (c4 > 0)) | (
            (c1 < 0) & (c2 < 0) & (c3 < 0) & (c4 < 0)
        )
        blocked = np.zeros(m, dtype=bool)
        blocked[todo] = ~b1
        visible &= ~blocked
    return visible


def covered_open_cells(p: Point, r_s: float, region: GridRegion) -> np.ndarray:
    """Boolean mask over region.open_cells: cell covered by a sensor at p.

    A cell is covered when every demanded corner (corner not lying in O) is
    within r_s of p and has line of sight to p.  Cells whose corners all lie
    on obstacles carry no demand and count as covered.
    """
    w, h, cs = region.width, region.height, region.cell_size
    ci = np.arange(w + 1, dtype=float) * cs
    cj = np.arange(h + 1, dtype=float) * cs
    gx, gy = np.meshgrid(ci, cj)  # [cj, ci]
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    in_range = (pts[:, 0] - p.x) ** 2 + (pts[:, 1] - p.y) ** 2 <= r_s * r_s
    good = in_range & los_from_point(p, pts, region)
    good = good.reshape(h + 1, w + 1)
    # a corner is bad when it is demanded but not covered
    bad = ~region._corner_blocked & ~good
    cell_ok = ~(bad[:-1, :-1] | bad[:-1, 1:] | bad[1:, :-1] | bad[1:, 1:])
    return np.array([cell_ok[c.row, c.col] for c in region.open_cells], dtype=bool)


# -- relaxed visibility --------------------------------------------------------


def _convex_hull(points):
    """Monotone-chain hull; returns CCW vertices without repetition."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    lower = []
    for pt in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], pt) <= 0:
            lower.pop()
        lower.append(pt)
    upper = []
    for pt in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], pt) <= 0:
            upper.pop()
        upper.append(pt)
    return lower[:-1] + upper[:-1]


def cell_pair_hull(u_i: Cell, u_j: Cell, region: GridRegion):
    """Convex hull (CCW vertex list) of the two cells' rectangles."""
    pts = []
    for u in (u_i, u_j):
        x0, y0, x1, y1 = region.cell_rect(u)
        pts += [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    return _convex_hull(pts)


def _hull_rect_open_overlap(hull, xmin, ymin, xmax, ymax) -> bool:
    """True iff the hull and the rectangle overlap with positive area.

    Separating-axis test where touching along a boundary does NOT count as
    overlap (any axis with a zero-length projection overlap separates the
    interiors).
    """
    xs = [v[0] for v in hull]
    ys = [v[1] for v in hull]
    if max(xs) <= xmin or min(xs) >= xmax or max(ys) <= ymin or min(ys) >= ymax:
        return False
    rect = ((xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax))
    n = len(hull)
    for a in range(n):
        b = (a + 1) % n
        nx = hull[b][1] - hull[a][1]
        ny = hull[a][0] - hull[b][0]
        if nx == 0 and ny == 0:
            continue
        ph = [nx * v[0] + ny * v[1] for v in hull]
        pr = [nx * v[0] + ny * v[1] for v in rect]
        if max(ph) <= min(pr) or max(pr) <= min(ph):
            return False
    return True


def relaxed_visibility(u_i: Cell, u_j: Cell, region: GridRegion) -> bool:
    """B': grid-level visibility under-approximation.

    True iff no occupied cell overlaps the convex hull of the two cells with
    positive area.  When true, any sensor placed strictly inside u_j has exact
    line of sight to every point strictly inside u_i (and to every demanded
    corner), so the grid-level claim is valid for any real-valued position
    within the cell.
    """
    for u in (u_i, u_j):
        if region.is_occupied(u):
            raise ValueError(f"relaxed_visibility over occupied cell {u}")
    c0, c1 = min(u_i.col, u_j.col), max(u_i.col, u_j.col)
    r0, r1 = min(u_i.row, u_j.row), max(u_i.row, u_j.row)
    if region.occupied_in_range(c0, r0, c1, r1) == 0:
        return True
    hull = cell_pair_hull(u_i, u_j, region)
    for cell in region.occupied_cells_in_range(c0, r0, c1, r1):
        if _hull_rect_open_overlap(hull, *region.cell_rect(cell)):
            return False
    return True


VIS_CLEAR, VIS_AMBIG, VIS_BLOCKED = 0, 1, 2


def _segment_hits_rect_many(points: np.ndarray, q: Point, rect) -> np.ndarray:
    """Closed segment [p, q] vs closed rect, vectorized over p."""
    xmin, ymin, xmax, ymax = rect
    px, py = points[:, 0], points[:, 1]
    miss = np.zeros(len(points), dtype=bool)
    if q.x < xmin:
        miss |= px < xmin
    if q.x > xmax:
        miss |= px > xmax
    if q.y < ymin:
        miss |= py < ymin
    if q.y > ymax:
        miss |= py > ymax
    dx, dy = q.x - px, q.y - py
    c1 = dx * (ymin - py) - dy * (xmin - px)
    c2 = dx * (ymin - py) - dy * (xmax - px)
    c3 = dx * (ymax - py) - dy * (xmax - px)
    c4 = dx * (ymax - py) - dy * (xmin - px)
    miss |= ((c1 > 0) & (c2 > 0) & (c3 > 0) & (c4 > 0)) | (
        (c1 < 0) & (c2 < 0) & (c3 < 0) & (c4 < 0)
    )
    return ~miss


def cell_corner_visibility(region: GridRegion) -> np.ndarray:
    """Static visibility relation status[cell, corner, obstacle]:

      CLEAR   no position in the cell can have its sight line to the corner
              touched by the obstacle (the hull of cell and corner misses it);
      BLOCKED no position in the cell sees the corner past the obstacle (all
              cell corners lie in the corner's shadow, which is convex);
      AMBIG   the cell straddles the shadow boundary.

    Cached on the region (it is immutable); corners are indexed over the
    (height+1) x (width+1) lattice, row-major.
    """
    cached = getattr(region, "_cell_corner_vis", None)
    if cached is not None:
        return cached
    w, h, cs = region.width, region.height, region.cell_size
    rects = region.occupied_rects()
    n_cells = region.n_open
    n_corners = (w + 1) * (h + 1)
    status = np.full((n_cells, n_corners, len(rects)), VIS_CLEAR, dtype=np.int8)
    ci = np.arange(w + 1, dtype=float) * cs
    cj = np.arange(h + 1, dtype=float) * cs
    gx, gy = np.meshgrid(ci, cj)
    lattice = np.column_stack([gx.ravel(), gy.ravel()])
    cells = region.open_cells
    cell_rects = [region.cell_rect(c) for c in cells]
    cell_hull_pts = [
        [(r[0], r[1]), (r[2], r[1]), (r[2], r[3]), (r[0], r[3])] for r in cell_rects
    ]
    for oi, rect in enumerate(rects):
        rect = tuple(rect)
        for li in range(n_corners):
            q = Point(lattice[li, 0], lattice[li, 1])
            if region.corner_is_blocked(li % (w + 1), li // (w + 1)):
                continue  # not a demanded corner anywhere
            hits = _segment_hits_rect_many(lattice, q, rect).reshape(h + 1, w + 1)
            for k, cell in enumerate(cells):
                r0, c0 = cell.row, cell.col
                corner_hits = hits[r0 : r0 + 2, c0 : c0 + 2]
                if corner_hits.all():
                    status[k, li, oi] = VIS_BLOCKED
                    continue
                # fast accept: obstacle outside the bbox of cell and corner
                x0, y0, x1, y1 = cell_rects[k]
                bx0, by0 = min(x0, q.x), min(y0, q.y)
                bx1, by1 = max(x1, q.x), max(y1, q.y)
                if rect[2] <= bx0 or rect[0] >= bx1 or rect[3] <= by0 or rect[1] >= by1:
                    continue
                hull = _convex_hull(cell_hull_pts[k] + [(q.x, q.y)])
                if _hull_rect_open_overlap(hull, *rect):
                    status[k, li, oi] = VIS_AMBIG
    region._cell_corner_vis = status
    return status


# -- obstacle rasterization ------------------------------------------------------


def _clip_convex(poly, xmin, ymin, xmax, ymax):
    """Sutherland-Hodgman clip of a convex polygon against a rectangle."""
    def clip_edge(pts, inside, intersect):
        out = []
        n = len(pts)
        for i in range(n):
            cur, nxt = pts[i], pts[(i + 1) % n]
            cin, nin = inside(cur), inside(nxt)
            if cin:
                out.append(cur)
                if not nin:
                    out.append(intersect(cur, nxt))
            elif nin:
                out.append(intersect(cur, nxt))
        return out

    def ix_x(x0):
        def f(a, b):
            t = (x0 - a[0]) / (b[0] - a[0])
            return (x0, a[1] + t * (b[1] - a[1]))
        return f

    def ix_y(y0):
        def f(a, b):
            t = (y0 - a[1]) / (b[1] - a[1])
            return (a[0] + t * (b[0] - a[0]), y0)
        return f

    p = list(poly)
    for inside, ix in (
        (lambda v: v[0] >= xmin, ix_x(xmin)),
        (lambda v: v[0] <= xmax, ix_x(xmax)),
        (lambda v: v[1] >= ymin, ix_y(ymin)),
        (lambda v: v[1] <= ymax, ix_y(ymax)),
    ):
        if not p:
            return []
        p = clip_edge(p, inside, ix)
    return p


def _signed_area(poly) -> float:
    s = 0.0
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def polygon_rect_overlap_area(polygon, xmin, ymin, xmax, ymax) -> float:
    """Area of polygon ∩ rectangle for a simple polygon of either orientation.

    Fan-decomposes the polygon from its first vertex into signed triangles,
    clips each (convex) triangle against the rectangle, and sums the signed
    clipped areas; the signed contributions of fan triangles outside the
    polygon cancel exactly.
    """
    v0 = polygon[0]
    total = 0.0
    for i in range(1, len(polygon) - 1):
        tri = [v0, polygon[i], polygon[i + 1]]
        sgn = 1.0 if _signed_area(tri) >= 0 else -1.0
        if sgn < 0:
            tri = tri[::-1]
        clipped = _clip_convex(tri, xmin, ymin, xmax, ymax)
        if len(clipped) >= 3:
            total += sgn * _signed_area(clipped)
    return abs(total)


def discretize_obstacles(polygons, width, height, cell_size) -> GridRegion:
    """Rasterize obstacle polygons onto the grid: a cell becomes occupied iff
    some polygon overlaps the cell with positive area.  Pure edge contact
    leaves the cell open."""
    occ = np.zeros((height, width), dtype=bool)
    cs = float(cell_size)
    area_eps = 1e-9 * cs * cs
    for poly in polygons:
        pts = [(float(x), float(y)) for x, y in poly]
        if len(pts) < 3:
            raise ValueError(f"degenerate polygon with {len(pts)} vertices")
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        c0 = max(int(math.floor(min(xs) / cs)), 0)
        c1 = min(int(math.ceil(max(xs) / cs)), width - 1)
        r0 = max(int(math.floor(min(ys) / cs)), 0)
        r1 = min(int(math.ceil(max(ys) / cs)), height - 1)
        for r in range(r0, r1 + 1):
            for c in range(c0, c1 + 1):
                if occ[r, c]:
                    continue
                a = polygon_rect_overlap_area(
                    pts, c * cs, r * cs, (c + 1) * cs, (r + 1) * cs
                )
                if a > area_eps:
                    occ[r, c] = True
    return GridRegion(width, height, cell_size, occ)
