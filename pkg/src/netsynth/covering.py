"""MILP-side synthesis pipeline: integer k-cover over the visibility graph,
branch-and-bound with LP-relaxation bounds, Steiner connectivity repair, the
diagonal-dominance connectivity encoding, and the method-selection rule.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import GridRegion
from .graphs import CellGraph, collapse, connected_components, steiner_repair
from .lp import solve_lp
from .placements import Placement, Sensor


class InfeasibleCoverError(Exception):
    def __init__(self, message, cell=None):
        self.cell = cell
        super().__init__(message)


@dataclass
class CoveringProblem:
    """Per-type neighborhoods and demands for the integer k-cover.

    neighborhoods[t][i] is the set of open-cell indices where a type-t sensor
    covers open cell i (including i itself when the cell passes self-cover).
    """

    region: GridRegion
    neighborhoods: list  # [type][cell] -> set of cell indices
    demands: list        # [type] -> np.ndarray of per-cell demands
    budget: int | None = None

    @property
    def n_types(self) -> int:
        return len(self.neighborhoods)

    @property
    def n_cells(self) -> int:
        return self.region.n_open


@dataclass
class IntegerPlacement:
    """Cell-indexed sensor counts, one row per type; sensors sit at cell
    centers when rendered to coordinates (dist'/B' make any interior point
    valid, the center is the canonical representative)."""

    region: GridRegion
    counts: np.ndarray  # (n_types, n_open) nonnegative ints
    optimal: bool = True
    relay_cells: tuple = ()

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def deployed_cell_indices(self) -> list:
        return [int(i) for i in np.nonzero(self.counts.sum(axis=0))[0]]

    def to_placement(self) -> Placement:
        sensors = []
        relay_set = set(self.relay_cells)
        cells = self.region.open_cells
        for t in range(self.counts.shape[0]):
            for i in np.nonzero(self.counts[t])[0]:
                center = self.region.cell_center(cells[i])
                role = "relay" if cells[i] in relay_set else "primary"
                for _ in range(int(self.counts[t, i])):
                    sensors.append(Sensor(center.x, center.y, t, role))
        return Placement(sensors)


def build_covering(region: GridRegion, g_v, k, budget=None, demands=None) -> CoveringProblem:
    """Assemble the k-cover problem from per-type visibility graphs.

    k is an int (single type) or a per-type list; demands may override it
    with explicit per-cell requirements (used by incremental repair).
    Raises InfeasibleCoverError when a cell demands coverage but has an empty
    neighborhood.
    """
    graphs = [g_v] if isinstance(g_v, CellGraph) else list(g_v)
    ks = [k] * len(graphs) if isinstance(k, int) else list(k)
    if len(ks) != len(graphs):
        raise ValueError("one demand per visibility graph required")
    n = region.n_open
    neigh_all = []
    demand_all = []
    for t, g in enumerate(graphs):
        neigh = []
        for i in range(n):
            s = set(int(j) for j in g.neighbors(i))
            if g.self_cover[i]:
                s.add(i)
            neigh.append(s)
        if demands is not None:
            d = np.asarray(demands[t], dtype=np.int64)
        else:
            d = np.full(n, ks[t], dtype=np.int64)
        for i in range(n):
            if d[i] > 0 and not neigh[i]:
                raise InfeasibleCoverError(
                    f"cell {g.cells[i]} demands {d[i]} coverage but no candidate "
                    f"cell can cover it",
                    cell=g.cells[i],
                )
        neigh_all.append(neigh)
        demand_all.append(d)
    return CoveringProblem(region, neigh_all, demand_all, budget)


# -- greedy + branch and bound ------------------------------------------------------


def greedy_multicover(neigh, demands) -> np.ndarray:
    """Repeatedly place one sensor at the cell covering the largest residual
    demand (ties to the lowest cell index).  Always feasible when every
    demanding cell has a nonempty neighborhood."""
    n = len(neigh)
    residual = np.array(demands, dtype=np.int64)
    cover_sets = [[] for _ in range(n)]  # cell j -> rows it covers
    for i in range(n):
        for j in neigh[i]:
            cover_sets[j].append(i)
    counts = np.zeros(n, dtype=np.int64)
    while residual.sum() > 0:
        best_j, best_score = -1, 0
        for j in range(n):
            score = sum(1 for i in cover_sets[j] if residual[i] > 0)
            if score > best_score:
                best_j, best_score = j, score
        if best_j < 0:
            raise InfeasibleCoverError("greedy stuck: uncoverable residual demand")
        counts[best_j] += 1
        for i in cover_sets[best_j]:
            if residual[i] > 0:
                residual[i] -= 1
    return counts


def _reduce(neigh, demands):
    """Exact row/column domination reduction.

    A row (cell constraint) is implied by another whose neighborhood is a
    subset with an equal-or-larger demand; a column is dominated by another
    whose coverage set is a superset.
    """
    n = len(neigh)
    cols = sorted({j for i in range(n) if demands[i] > 0 for j in neigh[i]})
    rows = [i for i in range(n) if demands[i] > 0]
    col_mask = {}
    for j in cols:
        m = 0
        for i in rows:
            if j in neigh[i]:
                m |= 1 << i
        col_mask[j] = m
    # column domination (keep the lowest-index representative)
    kept_cols = []
    for j in cols:
        dominated = False
        for j2 in cols:
            if j2 == j:
                continue
            m, m2 = col_mask[j], col_mask[j2]
            if m | m2 == m2 and (m != m2 or j2 < j):
                dominated = True
                break
        if not dominated:
            kept_cols.append(j)
    kept_set = set(kept_cols)
    row_mask = {i: frozenset(neigh[i] & kept_set) for i in rows}
    kept_rows = []
    for i in rows:
        implied = False
        for i2 in rows:
            if i2 == i:
                continue
            if row_mask[i2] <= row_mask[i] and demands[i2] >= demands[i]:
                if row_mask[i2] != row_mask[i] or demands[i2] != demands[i] or i2 < i:
                    implied = True
                    break
        if not implied:
            kept_rows.append(i)
    return kept_rows, kept_cols


def _solve_type_bnb(neigh, demands, deadline) -> tuple:
    """Branch and bound for one sensor type; returns (counts, optimal)."""
    n = len(neigh)
    counts = np.zeros(n, dtype=np.int64)
    if demands.sum() == 0:
        return counts, True
    rows, cols = _reduce(neigh, demands)
    red_neigh = [set(j for j in neigh[i]) & set(cols) for i in range(n)]
    # greedy incumbent on the reduced problem
    red_demands = np.zeros(n, dtype=np.int64)
    red_demands[rows] = demands[rows]
    inc_counts = greedy_multicover(red_neigh, red_demands)
    inc_obj = int(inc_counts.sum())

    c_index = {j: a for a, j in enumerate(cols)}
    n_c = len(cols)
    a_mat = np.zeros((len(rows), n_c))
    for r, i in enumerate(rows):
        for j in red_neigh[i]:
            a_mat[r, c_index[j]] = 1.0
    b_vec = demands[rows].astype(float)
    # a cell never usefully holds more sensors than the largest demand it serves
    hi0 = np.array(
        [max(demands[i] for i in range(n) if demands[i] > 0 and j in neigh[i]) for j in cols],
        dtype=float,
    )

    best_counts = inc_counts
    best_obj = inc_obj
    optimal_flag = True
    stack = [(np.zeros(n_c), hi0.copy())]
    ones = np.ones(n_c)
    while stack:
        if time.monotonic() > deadline:
            optimal_flag = False
            break
        lo, hi = stack.pop()
        rhs = b_vec - a_mat @ lo
        res = solve_lp(ones, a_mat, rhs, upper=hi - lo)
        if res.status == "infeasible":
            continue
        total_obj = res.objective + lo.sum()
        if math.ceil(total_obj - 1e-6) >= best_obj:
            continue
        y = res.x
        frac = np.abs(y - np.round(y))
        if frac.max() < 1e-6:
            x = np.round(y + lo).astype(np.int64)
            obj = int(x.sum())
            if obj < best_obj:
                best_obj = obj
                bc = np.zeros(n, dtype=np.int64)
                for a, j in enumerate(cols):
                    bc[j] = x[a]
                best_counts = bc
            continue
        pick = int(np.argmax(np.minimum(frac, 1 - frac)))
        split = math.floor(y[pick] + lo[pick])
        lo_hi = hi.copy()
        lo_hi[pick] = split
        hi_lo = lo.copy()
        hi_lo[pick] = split + 1
        stack.append((lo, lo_hi))        # x_pick <= floor
        stack.append((hi_lo, hi))        # x_pick >= ceil, explored first
    return best_counts, optimal_flag


def solve_covering(problem: CoveringProblem, time_budget: float | None = None) -> IntegerPlacement:
    """Minimize the total sensor count subject to all per-type demands.

    Types are independent in coverage, so each is solved by its own branch
    and bound (greedy incumbent, LP-relaxation bounds).  Anytime: on budget
    expiry the best incumbent is returned flagged non-optimal.
    """
    deadline = time.monotonic() + (time_budget if time_budget is not None else 3600.0)
    n = problem.n_cells
    counts = np.zeros((problem.n_types, n), dtype=np.int64)
    optimal = True
    for t in range(problem.n_types):
        counts[t], opt_t = _solve_type_bnb(
            problem.neighborhoods[t], problem.demands[t], deadline
        )
        optimal = optimal and opt_t
    placement = IntegerPlacement(problem.region, counts, optimal=optimal)
    if problem.budget is not None and placement.total > problem.budget:
        raise InfeasibleCoverError(
            f"covering needs {placement.total} sensors, budget is {problem.budget}"
        )
    return placement


# -- connectivity repair ----------------------------------------------------------


def connectivity_repair(placement: IntegerPlacement, g_c: CellGraph) -> IntegerPlacement:
    """Two-step repair: collapse the deployed subgraph of G_c into components,
    then add one type-0 relay per Steiner cell.  Relays never reuse cells that
    already hold sensors."""
    deployed = placement.deployed_cell_indices()
    if not deployed:
        raise ValueError("connectivity_repair needs a nonempty placement")
    labels = connected_components(g_c, deployed)
    n_comp = int(labels.max()) + 1
    if n_comp <= 1:
        return placement
    cg = collapse(deployed, g_c)
    added = steiner_repair(cg)  # raises InfeasibleRepairError when impossible
    counts = placement.counts.copy()
    for cell in added:
        counts[0, g_c.index[cell]] += 1
    return IntegerPlacement(
        placement.region,
        counts,
        optimal=placement.optimal,
        relay_cells=tuple(sorted(added) + list(placement.relay_cells)),
    )


# -- diagonal-dominance connectivity encoding ----------------------------------------


@dataclass
class DdSystem:
    """The appendix MILP system for connectivity: integers C_i, booleans q_i,
    adjacency booleans a_ij, with

      q_i <= C_i <= M q_i
      q_i + q_j >= 2 a_ij     and  q_i + q_j <= 1 + a_ij   for (i,j) in E_c
      a_ij = 0 for (i,j) not in E_c
      d_i = sum_j a_ij
      0 <= 2 d_i + 1 - sum_j q_j + N' (1 - q_i)

    plus per-cell coverage rows over G_v when provided.  Feasibility of
    (C, q, a) is a sound but conservative proxy for deployed-graph
    connectivity (diagonal dominance implies the Laplacian eigenvalue
    condition, not conversely).
    """

    region: GridRegion
    g_c: CellGraph
    budget: int | None
    g_v: CellGraph | None = None
    k: int = 0
    checker_cap: int = 8

    def __post_init__(self):
        self.n = self.g_c.n
        self.big_m = self.n + 1          # M > n
        self.big_n = 2 * self.n          # N' in the affine connectivity row
        self.edges = [
            (i, j) for i in range(self.n) for j in range(i + 1, self.n) if self.g_c.adj[i, j]
        ]

    def derived_adjacency(self, q: np.ndarray) -> np.ndarray:
        """a is pinned by q: a_ij = q_i & q_j on E_c, 0 elsewhere."""
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for i, j in self.edges:
            if q[i] and q[j]:
                a[i, j] = a[j, i] = 1
        return a

    def q_satisfies_connectivity_rows(self, q: np.ndarray) -> bool:
        a = self.derived_adjacency(q)
        d = a.sum(axis=1)
        total_q = int(q.sum())
        for i in range(self.n):
            if 2 * d[i] + 1 - total_q + self.big_n * (1 - int(q[i])) < 0:
                return False
        return True

    def assignment_feasible(self, q: np.ndarray, c: np.ndarray) -> bool:
        """Full system check for an explicit (C, q) pair (a is derived)."""
        for i in range(self.n):
            if not (q[i] <= c[i] <= self.big_m * q[i]):
                return False
        if self.budget is not None and c.sum() > self.budget:
            return False
        if self.g_v is not None and self.k > 0:
            for i in range(self.n):
                cov = sum(int(c[j]) for j in self.g_v.neighbors(i))
                if self.g_v.self_cover[i]:
                    cov += int(c[i])
                if cov < self.k:
                    return False
        return self.q_satisfies_connectivity_rows(q)

    def deployed_connected(self, q: np.ndarray) -> bool:
        idx = [i for i in range(self.n) if q[i]]
        if len(idx) <= 1:
            return True
        labels = connected_components(self.g_c, idx)
        return int(labels.max()) + 1 == 1

    def exhaustive_check(self):
        """Enumerate q over all deployments: every assignment accepted by the
        system must be connected; also return a conservativeness witness (a
        connected deployment the system rejects) when one exists.

        Instances above the cap are rejected for exhaustive checking (the
        encoding itself is still valid)."""
        if self.n > self.checker_cap:
            raise ValueError(
                f"{self.n} open cells exceed the exhaustive checker cap "
                f"({self.checker_cap})"
            )
        witness_rejected = None
        for bits in range(1, 1 << self.n):
            q = np.array([(bits >> i) & 1 for i in range(self.n)], dtype=np.int64)
            accepted = self.q_satisfies_connectivity_rows(q)
            connected = self.deployed_connected(q)
            if accepted and not connected:
                return False, q
            if connected and not accepted and witness_rejected is None:
                witness_rejected = q
        return True, witness_rejected


def dd_connectivity_encoding(
    region: GridRegion, g_c: CellGraph, budget=None, g_v=None, k=0
) -> DdSystem:
    """Emit the diagonal-dominance MILP connectivity system for a region."""
    return DdSystem(region=region, g_c=g_c, budget=budget, g_v=g_v, k=k)


# -- method selection ------------------------------------------------------------


def select_method(extent: float, gamma: float, beta: float, open_cells: int, chi: int = 1200) -> str:
    """Pick the synthesis method from the measured regime: use SMC except when
    beta > 1 and gamma > 3; the medium-extent, clustered, beta <= 1 cell is a
    toss-up below the chi scale."""
    if beta > 1:
        return "milp" if gamma > 3 else "smc"
    if extent < 0.15:
        return "smc"
    if extent <= 0.25:
        if gamma > 3:
            return "either" if open_cells <= chi else "smc"
        return "smc"
    return "smc"
