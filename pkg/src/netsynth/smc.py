"""SMC synthesis: the pseudo-boolean encoding of k-coverage with visibility,
connectivity and placement constraints, the lazy SAT + convex counterexample
loop, and binary search for the minimum sensor count.

The boolean skeleton mirrors the constraint groups:

  b_u[slot, cell]      sensor covers a cell  ->  covers its demanded corners
  b_s[slot, loc]       sensor covers corner  ->  range ball + per-obstacle
                                                 clear-sight booleans
  b_o[slot, loc, obs]  obstacle not blocking ->  one of six convex disjuncts
                                                 (two line-side conjunctions,
                                                 up to four face separations)
  b_c[slot, slot]      comm link             ->  pair ball at min pair radius
  b_v[slot, obs]       placed off obstacle   ->  one of four exterior faces
                                                 (asserted true)

Coverage demands become cardinality clauses per cell; connectivity becomes
hop-indexed reachability from sensor 0, the boolean rendering of adjacency-
power positivity.  Disjunctions are decomposed with one selector boolean per
convex disjunct plus an at-least-one clause, which is what lets a plain SAT
model pick a convex constraint set to test.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .convex import Ball, HalfPlane, PairBall, feasibility
from .geometry import (
    VIS_AMBIG,
    VIS_BLOCKED,
    Cell,
    GridRegion,
    Point,
    SensorSpec,
    cell_corner_visibility,
    exact_distance,
)
from .placements import Placement, Sensor
from .satcore import SatStatus, Solver

DELTA_SCALE = 1e-3  # strictness margin, in cell sizes
TOL_SCALE = 1e-4    # convex feasibility tolerance, in cell sizes
MAX_SWEEPS = 4000   # projection sweeps per feasibility call in the lazy loop


@dataclass
class SmcProblem:
    region: GridRegion
    specs: list
    counts: list
    demands: list            # per type: per-open-cell demand vector
    connectivity: bool
    solver: Solver
    pb_map: dict             # var -> list of convex constraints
    fixed: list              # always-asserted constraints (region box)
    slot_type: list          # slot -> type index
    bu: dict                 # (slot, cell_idx) -> var
    bs: dict                 # (slot, loc_idx) -> var
    bc: dict                 # (slot_i, slot_j) i<j -> var
    pos_cell: dict           # (slot, cell_idx) -> var, one-hot per slot
    face_var: dict           # (slot, obstacle_idx, face) -> var
    reach: dict              # (slot_j, hops) -> var
    var_info: dict           # var -> ("bu"|"bs"|"face"|"tangent"|"cell", slot, *key)
    var_lookup: dict         # inverse of var_info
    amb_support: dict        # (slot, loc, cell, obstacle) -> selector vars
    cell_corners_of: dict    # open-cell idx -> demanded corner loc ids
    locations: list          # demanded corner Points
    delta: float
    tol: float

    @property
    def n_slots(self) -> int:
        return len(self.slot_type)


@dataclass
class SmcResult:
    status: str              # "sat" | "infeasible" | "timeout"
    placement: Placement | None = None
    iterations: int = 0
    elapsed: float = 0.0
    sat_conflicts: int = 0

    @property
    def feasible(self) -> bool:
        return self.status == "sat"


def _tangent_disjuncts(loc: Point, rect, slot: int, delta: float):
    """The two line-separation disjuncts of the clear-sight condition.

    The shadow of a convex obstacle seen from the fixed location is convex:
    it is bounded by the two tangent lines through the silhouette corners and
    by the obstacle's near faces.  Its complement therefore decomposes into
    single half-planes: strictly outside either tangent line (returned here)
    or strictly beyond a near face (the shared face selectors).  Equivalent
    to the four-corners-on-one-side line condition, one half-plane per side.
    """
    xmin, ymin, xmax, ymax = rect
    corners = [(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)]
    cx0 = 0.5 * (xmin + xmax) - loc.x
    cy0 = 0.5 * (ymin + ymax) - loc.y
    # signed angular offset of each corner against the centre direction
    best_lo = best_hi = None
    lo_c = hi_c = corners[0]
    for c in corners:
        dx, dy = c[0] - loc.x, c[1] - loc.y
        cross = cx0 * dy - cy0 * dx
        dot = cx0 * dx + cy0 * dy
        ang = math.atan2(cross, dot)
        if best_lo is None or ang < best_lo:
            best_lo, lo_c = ang, c
        if best_hi is None or ang > best_hi:
            best_hi, hi_c = ang, c
    out = []
    for corner, sign in ((lo_c, 1.0), (hi_c, -1.0)):
        dx, dy = corner[0] - loc.x, corner[1] - loc.y
        # cross(d, s - loc) strictly negative (lo side) / positive (hi side)
        ax, ay = -dy * sign, dx * sign
        b = ax * loc.x + ay * loc.y
        out.append([HalfPlane(slot, ax, ay, b, margin=delta)])
    return out


def _face_halfplane(rect, face: int, slot: int, delta: float) -> HalfPlane:
    """Sensor strictly beyond one obstacle face: 0=left, 1=right, 2=below,
    3=above."""
    xmin, ymin, xmax, ymax = rect
    if face == 0:
        return HalfPlane(slot, 1.0, 0.0, xmin, margin=delta)
    if face == 1:
        return HalfPlane(slot, -1.0, 0.0, -xmax, margin=delta)
    if face == 2:
        return HalfPlane(slot, 0.0, 1.0, ymin, margin=delta)
    return HalfPlane(slot, 0.0, -1.0, -ymax, margin=delta)


def _loc_beyond_faces(loc: Point, rect) -> list:
    xmin, ymin, xmax, ymax = rect
    faces = []
    if loc.x < xmin:
        faces.append(0)
    if loc.x > xmax:
        faces.append(1)
    if loc.y < ymin:
        faces.append(2)
    if loc.y > ymax:
        faces.append(3)
    return faces


def _lex_order_rows(solver: Solver, row_a: list, row_b: list) -> None:
    """Lexicographic row_a >= row_b over aligned boolean vectors (symmetry
    breaking between interchangeable sensor slots)."""
    g_prev = solver.new_var()
    solver.add_clause([g_prev])
    for a, b in zip(row_a, row_b):
        solver.add_clause([-g_prev, a, -b])
        eq = solver.new_var()
        solver.add_clause([-eq, -a, b])
        solver.add_clause([-eq, a, -b])
        solver.add_clause([eq, a, b])
        solver.add_clause([eq, -a, -b])
        g_next = solver.new_var()
        solver.add_clause([-g_next, g_prev])
        solver.add_clause([-g_next, eq])
        solver.add_clause([g_next, -g_prev, -eq])
        g_prev = g_next


def encode(
    region: GridRegion,
    specs,
    k,
    counts,
    connectivity: bool = True,
    demands=None,
    symmetry_break: bool = True,
) -> SmcProblem:
    """Build the boolean + pseudo-boolean encoding for `counts[t]` sensors of
    each type with per-type coverage demand k[t] on every open cell (or the
    explicit per-cell `demands`)."""
    specs = [specs] if isinstance(specs, SensorSpec) else list(specs)
    ks = [k] * len(specs) if isinstance(k, int) else list(k)
    counts = [counts] if isinstance(counts, int) else list(counts)
    if len(specs) != len(ks) or len(specs) != len(counts):
        raise ValueError("specs, k and counts must align per type")
    n_open = region.n_open
    if n_open < 1:
        raise ValueError("region has no open cells")
    if demands is None:
        demands = [np.full(n_open, ks[t], dtype=np.int64) for t in range(len(specs))]
    else:
        demands = [np.asarray(d, dtype=np.int64) for d in demands]

    cs = region.cell_size
    delta = DELTA_SCALE * cs
    tol = TOL_SCALE * cs
    solver = Solver()
    pb_map = {}

    slot_type = []
    for t, c in enumerate(counts):
        slot_type += [t] * int(c)
    n_slots = len(slot_type)
    if n_slots < 1:
        raise ValueError("at least one sensor required")

    # demanded corner locations, deduplicated over the lattice
    loc_index = {}
    locations = []
    demanded_cell_corners = {}  # cell_idx -> list of loc ids
    cells = region.open_cells
    need_cover = np.zeros(n_open, dtype=bool)
    for d in demands:
        need_cover |= d > 0
    for gi, cell in enumerate(cells):
        ids = []
        if need_cover[gi]:
            for p in region.demanded_corners(cell):
                key = (p.x, p.y)
                if key not in loc_index:
                    loc_index[key] = len(locations)
                    locations.append(p)
                ids.append(loc_index[key])
        demanded_cell_corners[gi] = ids

    obstacle_rects = [tuple(r) for r in region.occupied_rects()]

    # region box: every sensor stays inside the deployment area
    w_m, h_m = region.width * cs, region.height * cs
    fixed = []
    for i in range(n_slots):
        fixed += [
            HalfPlane(i, -1.0, 0.0, 0.0, margin=delta),
            HalfPlane(i, 1.0, 0.0, w_m, margin=delta),
            HalfPlane(i, 0.0, -1.0, 0.0, margin=delta),
            HalfPlane(i, 0.0, 1.0, h_m, margin=delta),
        ]

    bu, bs = {}, {}
    for i in range(n_slots):
        for gi in range(n_open):
            if demands[slot_type[i]][gi] > 0:
                bu[(i, gi)] = solver.new_var()

    # one-hot cell choice per slot: the sensor's continuous position is tied
    # to its cell's interior, which makes most visibility facts static
    face_var = {}
    var_info = {}
    pos_cell = {}
    amb_support = {}
    cells_rects = [region.cell_rect(c) for c in cells]
    for i in range(n_slots):
        cell_vars = []
        for ci in range(n_open):
            v = solver.new_var()
            pos_cell[(i, ci)] = v
            var_info[v] = ("cell", i, ci)
            x0, y0, x1, y1 = cells_rects[ci]
            pb_map[v] = [
                HalfPlane(i, -1.0, 0.0, -x0, margin=delta),
                HalfPlane(i, 1.0, 0.0, x1, margin=delta),
                HalfPlane(i, 0.0, -1.0, -y0, margin=delta),
                HalfPlane(i, 0.0, 1.0, y1, margin=delta),
            ]
            cell_vars.append(v)
        solver.add_clause(cell_vars)       # somewhere in the open space
        solver.add_at_most(cell_vars, 1)   # and in exactly one cell

    def get_face_var(i, oi, face):
        key = (i, oi, face)
        if key not in face_var:
            v = solver.new_var()
            face_var[key] = v
            pb_map[v] = [_face_halfplane(obstacle_rects[oi], face, i, delta)]
            var_info[v] = ("face", i, oi, face)
        return face_var[key]

    # static cell-to-corner visibility relation and per-type range masks
    vis_status = cell_corner_visibility(region) if obstacle_rects else None
    lattice_w = region.width + 1
    loc_lattice_idx = [
        int(round(p.y / cs)) * lattice_w + int(round(p.x / cs)) for p in locations
    ]
    # nearest-point distance from every cell to every location
    if locations:
        loc_arr = np.array([[p.x, p.y] for p in locations])
        rect_arr = np.array(cells_rects)
        nx = np.clip(loc_arr[:, 0][:, None], rect_arr[None, :, 0], rect_arr[None, :, 2])
        ny = np.clip(loc_arr[:, 1][:, None], rect_arr[None, :, 1], rect_arr[None, :, 3])
        near_dist = np.hypot(nx - loc_arr[:, 0][:, None], ny - loc_arr[:, 1][:, None])
    tangent_vars = {}

    def get_tangent_vars(i, li, oi):
        key = (i, li, oi)
        if key not in tangent_vars:
            loc = locations[li]
            rect = obstacle_rects[oi]
            sels = [get_face_var(i, oi, f) for f in _loc_beyond_faces(loc, rect)]
            for side, constraints in enumerate(_tangent_disjuncts(loc, rect, i, delta)):
                sel = solver.new_var()
                pb_map[sel] = constraints
                var_info[sel] = ("tangent", i, li, oi, side)
                sels.append(sel)
            tangent_vars[key] = sels
        return tangent_vars[key]

    # coverage implications: b_u -> per-corner b_s; b_s + chosen cell ->
    # static verdict (clear / conflict) or the tangent disjunction
    for (i, gi), v_u in sorted(bu.items()):
        t = slot_type[i]
        r_s = specs[t].r_s
        var_info[v_u] = ("bu", i, gi)
        for li in demanded_cell_corners[gi]:
            if (i, li) not in bs:
                v_s = solver.new_var()
                bs[(i, li)] = v_s
                var_info[v_s] = ("bs", i, li)
                loc = locations[li]
                pb_map[v_s] = [Ball(i, loc.x, loc.y, r_s, margin=delta)]
                lat = loc_lattice_idx[li]
                for ci in range(n_open):
                    if near_dist[li, ci] > r_s:
                        solver.add_clause([-v_s, -pos_cell[(i, ci)]])
                        continue
                    if vis_status is None:
                        continue
                    row = vis_status[ci, lat]
                    if (row == VIS_BLOCKED).any():
                        solver.add_clause([-v_s, -pos_cell[(i, ci)]])
                        continue
                    x0, y0, x1, y1 = cells_rects[ci]
                    box = ((x0, y0), (x1, y0), (x1, y1), (x0, y1))
                    for oi in np.nonzero(row == VIS_AMBIG)[0]:
                        # offer only the separating pieces this cell touches
                        sels = []
                        for v_sel in get_tangent_vars(i, li, int(oi)):
                            hp = pb_map[v_sel][0]
                            lo = min(hp.ax * bx + hp.ay * by for bx, by in box)
                            if lo <= hp.b - hp.margin:
                                sels.append(v_sel)
                        solver.add_clause([-v_s, -pos_cell[(i, ci)]] + sels)
                        amb_support[(i, li, ci, int(oi))] = sels
            solver.add_clause([-v_u, bs[(i, li)]])

    # per-type k-coverage cardinality per open cell
    for t in range(len(specs)):
        slots_t = [i for i in range(n_slots) if slot_type[i] == t]
        for gi in range(n_open):
            d = int(demands[t][gi])
            if d > 0:
                solver.add_at_least([bu[(i, gi)] for i in slots_t], d)

    # connectivity: links + hop-indexed reachability from slot 0
    bc = {}
    reach = {}
    if connectivity and n_slots >= 2:
        for i in range(n_slots):
            for j in range(i + 1, n_slots):
                v_c = solver.new_var()
                bc[(i, j)] = v_c
                r_c = min(specs[slot_type[i]].r_c, specs[slot_type[j]].r_c)
                pb_map[v_c] = [PairBall(i, j, r_c, margin=delta)]

        def link(a, b):
            return bc[(a, b) if a < b else (b, a)]

        hops = n_slots - 1
        for j in range(1, n_slots):
            for h in range(1, hops + 1):
                reach[(j, h)] = solver.new_var()
        for j in range(1, n_slots):
            solver.add_clause([-reach[(j, 1)], link(0, j)])
            for h in range(2, hops + 1):
                body = [reach[(j, h - 1)]]
                for m in range(1, n_slots):
                    if m == j:
                        continue
                    t_var = solver.new_var()
                    solver.add_clause([-t_var, reach[(m, h - 1)]])
                    solver.add_clause([-t_var, link(m, j)])
                    body.append(t_var)
                solver.add_clause([-reach[(j, h)]] + body)
            solver.add_clause([reach[(j, hops)]])

    # interchangeable same-type slots: order their coverage rows
    if symmetry_break:
        order = sorted(bu)
        for t in range(len(specs)):
            slots_t = [i for i in range(n_slots) if slot_type[i] == t]
            for a, b in zip(slots_t, slots_t[1:]):
                row_a = [bu[(a, gi)] for (i, gi) in order if i == a]
                row_b = [bu[(b, gi)] for (i, gi) in order if i == b]
                if row_a and row_b:
                    _lex_order_rows(solver, row_a, row_b)

    return SmcProblem(
        region=region,
        specs=specs,
        counts=counts,
        demands=demands,
        connectivity=connectivity,
        solver=solver,
        pb_map=pb_map,
        fixed=fixed,
        slot_type=slot_type,
        bu=bu,
        bs=bs,
        bc=bc,
        pos_cell=pos_cell,
        face_var=face_var,
        reach=reach,
        var_info=var_info,
        var_lookup={info: v for v, info in var_info.items()},
        amb_support=amb_support,
        cell_corners_of=demanded_cell_corners,
        locations=locations,
        delta=delta,
        tol=tol,
    )


def precompute_exclusions(problem: SmcProblem) -> int:
    """Static conflict clauses the loop would otherwise discover one
    counterexample at a time:

      - no sensor covers two locations more than twice its sensing radius
        apart, nor two cells whose nearest corners are that far apart;
      - mutually empty face selectors (beyond the left of one obstacle and
        beyond the right of another further left, etc.);
      - face selectors pointing outside the deployment region;
      - face selectors incompatible with a coverage ball they must join.

    Returns the clause count added.
    """
    solver = problem.solver
    locs = problem.locations
    region = problem.region
    cells = region.open_cells
    delta = problem.delta
    added = 0

    # classify pseudo-booleans by payload; every selector owns one half-plane
    halfplanes = {}  # slot -> list of (var, HalfPlane)
    balls = {}       # slot -> list of (var, Ball)
    for var, cons in problem.pb_map.items():
        if len(cons) != 1:
            continue
        c = cons[0]
        if isinstance(c, HalfPlane):
            halfplanes.setdefault(c.sensor, []).append((var, c))
        elif isinstance(c, Ball):
            balls.setdefault(c.sensor, []).append((var, c))

    # region box corners to refute half-planes with no in-box point
    w_m = region.width * region.cell_size
    h_m = region.height * region.cell_size
    box = np.array([[0.0, 0.0], [w_m, 0.0], [w_m, h_m], [0.0, h_m]])
    for i, entries in halfplanes.items():
        arr_a = np.array([(hp.ax, hp.ay) for _, hp in entries])
        arr_b = np.array([hp.b - hp.margin for _, hp in entries])
        # empty within the region: every box corner violates the half-plane
        best = (box @ arr_a.T).min(axis=0)
        for idx in np.nonzero(best > arr_b)[0]:
            solver.add_clause([-entries[idx][0]])
            added += 1
        # pairwise empty: antiparallel normals with a negative-width band
        dots = arr_a @ arr_a.T
        sums = arr_b[:, None] + arr_b[None, :]
        bad = (dots < -1.0 + 1e-9) & (sums < 0)
        for a_idx, b_idx in zip(*np.nonzero(np.triu(bad, 1))):
            solver.add_clause([-entries[a_idx][0], -entries[b_idx][0]])
            added += 1
        # half-plane vs coverage ball of the same sensor: disjoint sets
        for v_ball, ball in balls.get(i, []):
            centre = np.array([ball.cx, ball.cy])
            gap = arr_a @ centre - arr_b
            for idx in np.nonzero(gap > ball.r - ball.margin)[0]:
                solver.add_clause([-v_ball, -entries[idx][0]])
                added += 1
    by_type = {}
    for t, spec in enumerate(problem.specs):
        lim = 2.0 * spec.r_s
        far_loc_pairs = []
        for a in range(len(locs)):
            for b in range(a + 1, len(locs)):
                if exact_distance(locs[a], locs[b]) > lim:
                    far_loc_pairs.append((a, b))
        far_cell_pairs = []
        demand = problem.demands[t]
        idxs = [gi for gi in range(region.n_open) if demand[gi] > 0]
        for ai in range(len(idxs)):
            for bi in range(ai + 1, len(idxs)):
                ga, gb = idxs[ai], idxs[bi]
                ca, cb = cells[ga], cells[gb]
                dx = max(0, abs(ca.col - cb.col) - 1) * region.cell_size
                dy = max(0, abs(ca.row - cb.row) - 1) * region.cell_size
                if math.hypot(dx, dy) > lim:  # even the nearest corners too far
                    far_cell_pairs.append((ga, gb))
        by_type[t] = (far_loc_pairs, far_cell_pairs)
    for i in range(problem.n_slots):
        far_loc_pairs, far_cell_pairs = by_type[problem.slot_type[i]]
        for a, b in far_loc_pairs:
            va, vb = problem.bs.get((i, a)), problem.bs.get((i, b))
            if va is not None and vb is not None:
                solver.add_clause([-va, -vb])
                added += 1
        for ga, gb in far_cell_pairs:
            va, vb = problem.bu.get((i, ga)), problem.bu.get((i, gb))
            if va is not None and vb is not None:
                solver.add_clause([-va, -vb])
                added += 1
    return added


# -- the lazy loop -----------------------------------------------------------------


def _spread_positions(region: GridRegion, n: int) -> np.ndarray:
    """Deterministic spread of n points over the open cells: farthest-point
    seeding followed by a few Lloyd rounds, snapped to open-cell centers."""
    centers = np.array(
        [[(c.col + 0.5) * region.cell_size, (c.row + 0.5) * region.cell_size]
         for c in region.open_cells]
    )
    mid = centers.mean(axis=0)
    first = int(np.argmin(((centers - mid) ** 2).sum(axis=1)))
    chosen = [first]
    while len(chosen) < min(n, len(centers)):
        d2 = np.min(
            ((centers[:, None, :] - centers[chosen][None, :, :]) ** 2).sum(axis=2),
            axis=1,
        )
        chosen.append(int(np.argmax(d2)))
    pts = centers[chosen].astype(float)
    if n > len(centers):
        pts = np.vstack([pts, np.tile(pts[0], (n - len(centers), 1))])
    for _ in range(3):
        owner = np.argmin(
            ((centers[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2), axis=1
        )
        for i in range(n):
            mine = centers[owner == i]
            if len(mine):
                target = mine.mean(axis=0)
                snap = int(np.argmin(((centers - target) ** 2).sum(axis=1)))
                pts[i] = centers[snap]
    return pts


def seed_phases(problem: SmcProblem, positions: np.ndarray | None = None) -> np.ndarray:
    """Bias the SAT branching phases toward a concrete geometric layout so
    the first proposed models are already near-consistent.

    Purely heuristic: phases steer decisions, never exclude models.  Returns
    the seed positions used.
    """
    from .geometry import covered_open_cells, los_from_point

    region = problem.region
    n = problem.n_slots
    if positions is None:
        positions = _spread_positions(region, n)
    solver = problem.solver
    specs = problem.specs

    # per-slot exact coverage from the seed position
    covers = np.zeros((n, region.n_open), dtype=bool)
    for i in range(n):
        covers[i] = covered_open_cells(
            Point(positions[i][0], positions[i][1]),
            specs[problem.slot_type[i]].r_s,
            region,
        )
    # order same-type slots so coverage rows are lex-nonincreasing, matching
    # the symmetry-breaking clauses
    for t in range(len(specs)):
        slots_t = [i for i in range(n) if problem.slot_type[i] == t]
        rows = sorted(
            ((tuple(covers[i].astype(int)), i) for i in slots_t), reverse=True
        )
        reordered = [positions[i] for _, i in rows]
        for slot, pos in zip(slots_t, reordered):
            positions[slot] = pos
    for i in range(n):
        covers[i] = covered_open_cells(
            Point(positions[i][0], positions[i][1]),
            specs[problem.slot_type[i]].r_s,
            region,
        )

    # cell choice: the open cell containing (or nearest to) the seed
    centers = np.array(
        [[(c.col + 0.5) * region.cell_size, (c.row + 0.5) * region.cell_size]
         for c in region.open_cells]
    )
    home = [
        int(np.argmin(((centers - positions[i]) ** 2).sum(axis=1)))
        for i in range(n)
    ]
    for (i, ci), var in problem.pos_cell.items():
        solver.phase[var] = ci == home[i]

    for (i, gi), var in problem.bu.items():
        solver.phase[var] = bool(covers[i, gi])
    loc_arr = np.array([[p.x, p.y] for p in problem.locations]) if problem.locations else np.zeros((0, 2))
    vis = {}
    for i in range(n):
        p = Point(positions[i][0], positions[i][1])
        in_range = (
            ((loc_arr - positions[i]) ** 2).sum(axis=1)
            <= specs[problem.slot_type[i]].r_s ** 2
        )
        vis[i] = in_range & los_from_point(p, loc_arr, region)
    for (i, li), var in problem.bs.items():
        solver.phase[var] = bool(vis[i][li])
    # selectors and face booleans: satisfied half-planes at the seed position
    from .convex import Ball as _Ball, HalfPlane as _HalfPlane

    for var, cons in problem.pb_map.items():
        if len(cons) == 1 and isinstance(cons[0], _HalfPlane):
            hp = cons[0]
            solver.phase[var] = bool(
                hp.ax * positions[hp.sensor][0] + hp.ay * positions[hp.sensor][1]
                <= hp.b - hp.margin
            )
    # links + reachability from the seeded link graph
    if problem.bc:
        adj = np.zeros((n, n), dtype=bool)
        for (i, j), var in problem.bc.items():
            r_c = min(
                specs[problem.slot_type[i]].r_c, specs[problem.slot_type[j]].r_c
            )
            ok = (
                math.hypot(
                    positions[i][0] - positions[j][0],
                    positions[i][1] - positions[j][1],
                )
                <= r_c - problem.delta
            )
            solver.phase[var] = ok
            adj[i, j] = adj[j, i] = ok
        depth = np.full(n, n + 1)
        depth[0] = 0
        frontier = [0]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for v in frontier:
                for w in np.nonzero(adj[v])[0]:
                    if depth[w] > d:
                        depth[w] = d
                        nxt.append(int(w))
            frontier = nxt
        for (j, h), var in problem.reach.items():
            solver.phase[var] = bool(depth[j] <= h)
    return positions


def run_lazy_loop(
    solver: Solver,
    gather_fn,
    start_fn,
    tol: float,
    deadline: float,
    lift_fn=None,
):
    """Generic SAT + convex counterexample loop.

    gather_fn(model) -> (constraints, owners): the convex constraints the
    model actually requires (its support set) with the owning pseudo-boolean
    per constraint (None for always-on constraints).  start_fn(model) gives
    the deterministic start coordinates.  lift_fn(blame) may return extra
    clauses implied by the same conflict (e.g. the slot-permuted copies for
    interchangeable sensors).

    Returns (status, witness, iterations, conflicts) with status in
    {"sat", "infeasible", "timeout"}.
    """
    iterations = 0
    conflicts = 0
    while True:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            return "timeout", None, iterations, conflicts
        res = solver.solve(time_budget=remaining)
        conflicts += res.conflicts
        if res.status == SatStatus.UNSAT:
            return "infeasible", None, iterations, conflicts
        if res.status == SatStatus.TIMEOUT:
            return "timeout", None, iterations, conflicts
        iterations += 1
        constraints, owners = gather_fn(res)
        owner_by_id = {id(c): o for c, o in zip(constraints, owners)}
        active = sorted(set(owners) - {None})
        start = start_fn(res)
        outcome = feasibility(
            constraints, start, tol=tol, max_iters=MAX_SWEEPS,
            stall_window=25, deadline=deadline,
        )
        if outcome.feasible:
            return "sat", outcome.witness, iterations, conflicts
        if outcome.infeasible:
            blame = sorted({owner_by_id[id(c)] for c in outcome.core} - {None})
            if not blame:
                return "infeasible", None, iterations, conflicts
            solver.add_clause([-v for v in blame])
            if lift_fn is not None:
                for clause in lift_fn(blame):
                    solver.add_clause(clause)
        else:
            solver.add_clause([-v for v in active])


def _gather_support(problem: SmcProblem, model):
    """The constraints this model is actually committed to: chosen cells,
    coverage balls required by true b_u, one separating selector per
    (corner, obstacle) obligation, and a BFS tree of the asserted links.
    Pseudo-booleans that drifted true without a requirement are ignored;
    flipping them false still satisfies every clause, so the support set is
    a faithful witness candidate."""
    constraints = list(problem.fixed)
    owners = [None] * len(constraints)

    def add(var):
        for c in problem.pb_map[var]:
            constraints.append(c)
            owners.append(var)

    chosen_cell = {}
    for (i, ci), v in problem.pos_cell.items():
        if model.model[v]:
            chosen_cell[i] = ci
            add(v)
    needed_bs = set()
    for (i, gi), v in problem.bu.items():
        if model.model[v]:
            for li in problem.cell_corners_of[gi]:
                needed_bs.add((i, li))
    n_obstacles = len(problem.region.occupied_rects())
    for key in sorted(needed_bs):
        add(problem.bs[key])
        i, li = key
        ci = chosen_cell.get(i)
        if ci is None:
            continue
        for oi in range(n_obstacles):
            sels = problem.amb_support.get((i, li, ci, oi))
            if not sels:
                continue
            for v_sel in sels:
                if model.model[v_sel]:
                    add(v_sel)
                    break
    # links: a BFS tree over the asserted link graph from slot 0
    if problem.bc:
        n = problem.n_slots
        adj = {}
        for (i, j), v in problem.bc.items():
            if model.model[v]:
                adj.setdefault(i, []).append((j, v))
                adj.setdefault(j, []).append((i, v))
        seen = {0}
        frontier = [0]
        while frontier:
            nxt = []
            for a in frontier:
                for b, v in sorted(adj.get(a, ())):
                    if b not in seen:
                        seen.add(b)
                        add(v)
                        nxt.append(b)
            frontier = nxt
    return constraints, owners


def _lifted_blocking_clauses(problem: SmcProblem, blame) -> list:
    """Slot-permuted copies of a blocking clause.

    A conflict among one slot's coverage geometry (its balls, face and
    tangent selectors) holds verbatim for every other slot of the same type,
    so the clause can be replicated with the slot substituted.
    """
    infos = [problem.var_info.get(v) for v in blame]
    if any(info is None for info in infos):
        return []
    slots = {info[1] for info in infos}
    if len(slots) != 1:
        return []
    i0 = slots.pop()
    t = problem.slot_type[i0]
    out = []
    for j in range(problem.n_slots):
        if j == i0 or problem.slot_type[j] != t:
            continue
        mapped = []
        for info in infos:
            v = problem.var_lookup.get((info[0], j) + info[2:])
            if v is None:
                break
            mapped.append(v)
        else:
            out.append([-v for v in mapped])
    return out


def _start_points(problem: SmcProblem, model) -> np.ndarray:
    """Deterministic start: each sensor at the center of its chosen cell
    (falling back to the region center)."""
    region = problem.region
    cs = region.cell_size
    center = np.array([region.width * cs / 2.0, region.height * cs / 2.0])
    pts = np.tile(center, (problem.n_slots, 1))
    cells = region.open_cells
    for (i, ci), v in problem.pos_cell.items():
        if model.model[v]:
            c = region.cell_center(cells[ci])
            pts[i] = (c.x, c.y)
    return pts


def smc_solve(problem: SmcProblem, time_budget: float = 120.0) -> SmcResult:
    """Run the counterexample loop; any returned placement has been checked
    by the independent verifier."""
    t0 = time.monotonic()
    deadline = t0 + time_budget
    while True:
        status, witness, iters, conflicts = run_lazy_loop(
            problem.solver,
            lambda model: _gather_support(problem, model),
            lambda model: _start_points(problem, model),
            problem.tol,
            deadline,
            lift_fn=lambda blame: _lifted_blocking_clauses(problem, blame),
        )
        if status != "sat":
            return SmcResult(status, iterations=iters, elapsed=time.monotonic() - t0,
                             sat_conflicts=conflicts)
        placement = Placement(
            [
                Sensor(float(witness[i, 0]), float(witness[i, 1]), problem.slot_type[i])
                for i in range(problem.n_slots)
            ]
        )
        from .evaluate import verify  # deferred import: evaluate also drives smc

        report = verify(
            placement,
            problem.region,
            problem.specs,
            [int(d.max()) if len(d) else 0 for d in problem.demands],
            demands=problem.demands,
            connectivity=problem.connectivity,
        )
        if report.ok:
            return SmcResult("sat", placement=placement, iterations=iters,
                             elapsed=time.monotonic() - t0, sat_conflicts=conflicts)
        # the delta margins make this unreachable in practice; block the whole
        # assignment and keep searching so soundness never depends on it
        problem.solver.add_clause([-v for v in sorted(problem.pb_map)])


def solve_relay_stitching(
    region: GridRegion,
    components: list,
    specs: list,
    relay_type: int = 0,
    time_budget: float = 60.0,
    max_relays: int | None = None,
):
    """Place the fewest relay sensors (continuous positions) that join the
    given connected components into one network.

    Components are lists of placed Sensor objects (the anchors).  A relay
    links to a component through any one anchor within the pair's
    communication radius; relays link to each other within the relay radius.
    Connectivity of the component/relay supergraph is encoded as hop-indexed
    reachability, and the relay count is searched upward from one.
    Returns a list of relay Sensors, or None when stitching is infeasible
    within the budget.
    """
    m = len(components)
    if m <= 1:
        return []
    if max_relays is None:
        max_relays = max(1, 4 * (m - 1))
    relay_spec = specs[relay_type]
    deadline = time.monotonic() + time_budget
    cs = region.cell_size
    delta = DELTA_SCALE * cs
    tol = TOL_SCALE * cs
    cells = region.open_cells
    cells_rects = [region.cell_rect(c) for c in cells]
    anchor_pos = [
        np.array([[s.x, s.y] for s in comp], dtype=float) for comp in components
    ]

    # a Steiner repair over the connectivity graph both witnesses feasibility
    # and pins the relay count to start from
    from .graphs import build_connectivity_graph, collapse as _collapse, steiner_repair as _steiner

    steiner_centers = None
    g_c = build_connectivity_graph(region, min(sp.r_c for sp in specs))
    deployed = set()
    for comp in components:
        for s in comp:
            cell = Cell(
                min(int(s.x / cs), region.width - 1),
                min(int(s.y / cs), region.height - 1),
            )
            if cell in g_c.index:
                deployed.add(g_c.index[cell])
    try:
        added = _steiner(_collapse(sorted(deployed), g_c))
        steiner_centers = [
            [region.cell_center(c).x, region.cell_center(c).y] for c in sorted(added)
        ]
    except Exception:
        steiner_centers = None  # fall back to the ascending search

    if steiner_centers is not None and 1 <= len(steiner_centers) <= max_relays:
        counts = [len(steiner_centers)]
        counts += [r for r in range(len(steiner_centers) - 1, 0, -1)]
        counts += [r for r in range(len(steiner_centers) + 1, max_relays + 1)]
    else:
        counts = list(range(1, max_relays + 1))

    best = None
    for n_relays in counts:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            return best
        if best is not None and n_relays >= len(best):
            continue
        solver = Solver()
        pb_map = {}
        # one-hot relay cells
        pos_cell = {}
        for r in range(n_relays):
            cell_vars = []
            for ci, rect in enumerate(cells_rects):
                v = solver.new_var()
                pos_cell[(r, ci)] = v
                x0, y0, x1, y1 = rect
                pb_map[v] = [
                    HalfPlane(r, -1.0, 0.0, -x0, margin=delta),
                    HalfPlane(r, 1.0, 0.0, x1, margin=delta),
                    HalfPlane(r, 0.0, -1.0, -y0, margin=delta),
                    HalfPlane(r, 0.0, 1.0, y1, margin=delta),
                ]
                cell_vars.append(v)
            solver.add_clause(cell_vars)
            solver.add_at_most(cell_vars, 1)
        # relay-component links via anchor selectors
        link_comp = {}
        anchor_sel = {}
        for r in range(n_relays):
            for ci in range(m):
                l_var = solver.new_var()
                link_comp[(r, ci)] = l_var
                sels = []
                for ai, s in enumerate(components[ci]):
                    sel = solver.new_var()
                    rc = min(relay_spec.r_c, specs[s.type_id].r_c)
                    anchor_sel[(r, ci, ai)] = sel
                    pb_map[sel] = [Ball(r, s.x, s.y, rc, margin=delta)]
                    sels.append(sel)
                solver.add_clause([-l_var] + sels)
        # relay-relay links
        link_rel = {}
        for a in range(n_relays):
            for b in range(a + 1, n_relays):
                v = solver.new_var()
                link_rel[(a, b)] = v
                pb_map[v] = [PairBall(a, b, relay_spec.r_c, margin=delta)]
        # static pruning: anchors out of reach of a relay cell
        for (r, ci, ai), sel in anchor_sel.items():
            ball = pb_map[sel][0]
            for cj, rect in enumerate(cells_rects):
                nx = min(max(ball.cx, rect[0]), rect[2])
                ny = min(max(ball.cy, rect[1]), rect[3])
                if math.hypot(nx - ball.cx, ny - ball.cy) > ball.r:
                    solver.add_clause([-sel, -pos_cell[(r, cj)]])
        # reachability over supernodes: components 0..m-1 then relays
        n_nodes = m + n_relays
        def node_link(a, b):
            # only component-relay and relay-relay links exist
            if a > b:
                a, b = b, a
            if b < m:
                return None
            if a < m:
                return link_comp[(b - m, a)]
            return link_rel[(a - m, b - m)]
        reach = {}
        hops = n_nodes - 1
        for j in range(1, n_nodes):
            for h in range(1, hops + 1):
                reach[(j, h)] = solver.new_var()
        for j in range(1, n_nodes):
            first = node_link(0, j)
            if first is None:
                solver.add_clause([-reach[(j, 1)]])
            else:
                solver.add_clause([-reach[(j, 1)], first])
            for h in range(2, hops + 1):
                body = [reach[(j, h - 1)]]
                for mm in range(1, n_nodes):
                    if mm == j:
                        continue
                    lv = node_link(mm, j)
                    if lv is None:
                        continue
                    t_var = solver.new_var()
                    solver.add_clause([-t_var, reach[(mm, h - 1)]])
                    solver.add_clause([-t_var, lv])
                    body.append(t_var)
                solver.add_clause([-reach[(j, h)]] + body)
            solver.add_clause([reach[(j, hops)]])

        def gather(model):
            constraints, owners = [], []
            def addvar(v):
                for c in pb_map[v]:
                    constraints.append(c)
                    owners.append(v)
            for (r, ci), v in pos_cell.items():
                if model.model[v]:
                    addvar(v)
            # BFS tree over the asserted supernode links
            adj = {}
            for (r, ci), v in link_comp.items():
                if model.model[v]:
                    adj.setdefault(ci, []).append((m + r, v, ("comp", r, ci)))
                    adj.setdefault(m + r, []).append((ci, v, ("comp", r, ci)))
            for (a, b), v in link_rel.items():
                if model.model[v]:
                    adj.setdefault(m + a, []).append((m + b, v, ("rel",)))
                    adj.setdefault(m + b, []).append((m + a, v, ("rel",)))
            seen = {0}
            frontier = [0]
            while frontier:
                nxt = []
                for a in frontier:
                    for b, v, kind in sorted(adj.get(a, ()), key=lambda e: e[0]):
                        if b in seen:
                            continue
                        seen.add(b)
                        nxt.append(b)
                        if kind[0] == "rel":
                            addvar(v)
                        else:
                            _, r, ci = kind
                            for ai in range(len(components[ci])):
                                sv = anchor_sel[(r, ci, ai)]
                                if model.model[sv]:
                                    addvar(sv)
                                    break
                frontier = nxt
            return constraints, owners

        def start_fn(model):
            pts = np.zeros((n_relays, 2))
            all_anchors = np.vstack(anchor_pos)
            centroid = all_anchors.mean(axis=0)
            pts[:] = centroid
            for (r, ci), v in pos_cell.items():
                if model.model[v]:
                    c = region.cell_center(cells[ci])
                    pts[r] = (c.x, c.y)
            return pts

        # phase-seed from the Steiner layout when the counts line up
        if steiner_centers is not None and n_relays == len(steiner_centers):
            seeds = np.array(steiner_centers, dtype=float)
            centers = np.array(
                [[(c.col + 0.5) * cs, (c.row + 0.5) * cs] for c in cells]
            )
            home = [
                int(np.argmin(((centers - seeds[r]) ** 2).sum(axis=1)))
                for r in range(n_relays)
            ]
            for (r, ci), v in pos_cell.items():
                solver.phase[v] = ci == home[r]
            for (r, ci2, ai), sel in anchor_sel.items():
                ball = pb_map[sel][0]
                solver.phase[sel] = (
                    math.hypot(seeds[r][0] - ball.cx, seeds[r][1] - ball.cy)
                    <= ball.r - ball.margin
                )
            for (r, ci2), v in link_comp.items():
                solver.phase[v] = any(
                    solver.phase[anchor_sel[(r, ci2, ai)]]
                    for ai in range(len(components[ci2]))
                )
            for (a, b), v in link_rel.items():
                solver.phase[v] = (
                    math.hypot(*(seeds[a] - seeds[b])) <= relay_spec.r_c - delta
                )

        probe_deadline = min(
            deadline, time.monotonic() + max(2.0, (deadline - time.monotonic()) / 3)
        )
        status, witness, _, _ = run_lazy_loop(
            solver, gather, start_fn, tol, probe_deadline
        )
        if status == "sat":
            best = [
                Sensor(float(witness[r, 0]), float(witness[r, 1]),
                       relay_type, role="relay")
                for r in range(n_relays)
            ]
            continue
        if best is not None:
            return best  # smaller counts cannot succeed (monotone feasibility)
    return best


def binary_search_min_n(
    region: GridRegion,
    spec: SensorSpec,
    k: int,
    n_max: int,
    time_budget: float = 120.0,
    connectivity: bool = True,
    demands=None,
    witness_positions=None,
):
    """Smallest sensor count in [k, n_max] whose SMC instance is feasible;
    returns (n, SmcResult).

    The top of the range is probed first (optionally phase-seeded with a
    known witness layout, e.g. an integer-cover solution), which pins a
    fallback placement; the minimum is then bisected below it.  Feasibility
    is monotone in the count (extra sensors may co-locate).  Probes that
    time out count as infeasible, which can only make the returned count
    conservative, never the placement invalid.  Returns
    (None, SmcResult-infeasible/timeout) when no probe succeeds.
    """
    lo = max(1, k if demands is None else 1)
    hi = n_max
    if hi < lo:
        return None, SmcResult("infeasible")
    deadline = time.monotonic() + time_budget
    n_probes = max(1, math.ceil(math.log2(hi - lo + 1)) + 1)
    results = {}

    def probe(n, seed_pos=None, share=1.0):
        if n in results:
            return results[n]
        budget = max(0.5, share * (deadline - time.monotonic()))
        problem = encode(region, [spec], [k], [n], connectivity=connectivity,
                         demands=demands)
        precompute_exclusions(problem)
        if seed_pos is not None and len(seed_pos) == n:
            seed_phases(problem, positions=np.array(seed_pos, dtype=float))
        else:
            seed_phases(problem)
        results[n] = smc_solve(problem, time_budget=budget)
        return results[n]

    # secure the top of the range first (a witness layout makes it cheap),
    # then bisect below it with the remaining budget
    top = probe(hi, seed_pos=witness_positions, share=0.4)
    if not top.feasible:
        return None, top
    best_n, best = hi, top
    hi -= 1
    while lo <= hi and time.monotonic() < deadline:
        mid = (lo + hi) // 2
        res = probe(mid, share=1.0 / max(1, n_probes))
        if res.feasible:
            best_n, best = mid, res
            hi = mid - 1
        else:
            lo = mid + 1
    return best_n, best
