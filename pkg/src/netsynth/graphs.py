"""Visibility and connectivity graphs over open cells, plus the graph
machinery for connectivity repair: component analysis, adjacency-power
connectivity, component collapse, and Steiner-tree repair.
"""

import heapq
from dataclasses import dataclass, field

import numpy as np

from .geometry import Cell, GridRegion, relaxed_distance, relaxed_visibility


class InfeasibleRepairError(Exception):
    """Connectivity repair impossible; carries the unreachable terminal groups."""

    def __init__(self, groups):
        self.groups = groups
        super().__init__(f"terminals not mutually reachable: {groups}")


@dataclass
class CellGraph:
    """Undirected graph over the open cells of a region.

    adj is a symmetric boolean matrix without self-loops; self_cover marks
    vertices whose own cell passes the range check against the build radius
    (a sensor always sees its own cell, so the check is distance-only).
    """

    region: GridRegion
    cells: list
    adj: np.ndarray
    self_cover: np.ndarray
    radius: float
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {c: i for i, c in enumerate(self.cells)}

    @property
    def n(self) -> int:
        return len(self.cells)

    def neighbors(self, i: int) -> np.ndarray:
        return np.nonzero(self.adj[i])[0]

    def edge_count(self) -> int:
        return int(self.adj.sum()) // 2


def _build_cell_graph(region: GridRegion, radius: float, need_visibility: bool) -> CellGraph:
    cells = region.open_cells
    n = len(cells)
    adj = np.zeros((n, n), dtype=bool)
    cs = region.cell_size
    r2 = (radius / cs) ** 2
    # (|dc|+1)^2 + (|dr|+1)^2 <= (radius/cs)^2 is the dist' range check
    max_d = int(np.floor(radius / cs))  # coarse window bound
    grid_idx = -np.ones((region.height, region.width), dtype=np.int64)
    for i, c in enumerate(cells):
        grid_idx[c.row, c.col] = i
    for i, c in enumerate(cells):
        for dr in range(-max_d, max_d + 1):
            rr = c.row + dr
            if rr < 0 or rr >= region.height:
                continue
            for dc in range(-max_d, max_d + 1):
                cc = c.col + dc
                if cc < 0 or cc >= region.width:
                    continue
                j = grid_idx[rr, cc]
                if j <= i:
                    continue
                if (abs(dc) + 1) ** 2 + (abs(dr) + 1) ** 2 > r2:
                    continue
                if need_visibility and not relaxed_visibility(c, cells[j], region):
                    continue
                adj[i, j] = adj[j, i] = True
    self_cover = np.full(n, 2.0 * cs * cs <= radius * radius, dtype=bool)
    return CellGraph(region=region, cells=cells, adj=adj, self_cover=self_cover, radius=radius)


def build_visibility_graph(region: GridRegion, r_s: float) -> CellGraph:
    """G_v: edge (i,j) iff dist'(u_i,u_j) <= r_s and B'(u_i,u_j)."""
    return _build_cell_graph(region, r_s, need_visibility=True)


def build_connectivity_graph(region: GridRegion, r_c: float) -> CellGraph:
    """G_c: edge (i,j) iff dist'(u_i,u_j) <= r_c (no line of sight needed
    for RF links)."""
    return _build_cell_graph(region, r_c, need_visibility=False)


def connected_components(graph: CellGraph, active) -> np.ndarray:
    """Label the active vertices by component id (inactive vertices get -1).

    `active` is an iterable of vertex indices or a boolean mask.
    """
    n = graph.n
    if isinstance(active, np.ndarray) and active.dtype == bool:
        mask = active.copy()
    else:
        mask = np.zeros(n, dtype=bool)
        idx = list(active)
        if idx:
            mask[np.asarray(idx, dtype=np.int64)] = True
    labels = -np.ones(n, dtype=np.int64)
    comp = 0
    for s in np.nonzero(mask)[0]:
        if labels[s] != -1:
            continue
        stack = [int(s)]
        labels[s] = comp
        while stack:
            v = stack.pop()
            for w in np.nonzero(graph.adj[v] & mask)[0]:
                if labels[w] == -1:
                    labels[w] = comp
                    stack.append(int(w))
        comp += 1
    return labels


def component_count(labels: np.ndarray) -> int:
    return int(labels.max()) + 1 if (labels >= 0).any() else 0


def hop_connectivity(adjacency: np.ndarray) -> bool:
    """Connectivity via positivity of the summed adjacency powers A + ... +
    A^(n-1), evaluated in the boolean (reachability) semiring so entries
    cannot overflow."""
    a = np.asarray(adjacency, dtype=bool)
    n = a.shape[0]
    if n <= 1:
        return True
    a = a & ~np.eye(n, dtype=bool)
    reach = a.copy()
    step = a.astype(np.int64)
    for _ in range(n - 2):
        reach = reach | ((reach.astype(np.int64) @ step) > 0)
    off = ~np.eye(n, dtype=bool)
    return bool(reach[off].all())


# -- collapse + Steiner repair ---------------------------------------------------


@dataclass
class CollapsedGraph:
    """Deployed components contracted to terminal supernodes; the remaining
    open cells stay as unit-weight relay candidates."""

    terminals: list            # node ids 0..t-1
    terminal_cells: list       # list of frozensets of Cell per terminal
    candidates: list           # Cell per candidate node (node id = t + k)
    adj: np.ndarray            # symmetric bool over all nodes, no self loops

    @property
    def n(self) -> int:
        return len(self.terminals) + len(self.candidates)

    def node_name(self, node: int):
        if node < len(self.terminals):
            return ("component", node)
        return ("cell", self.candidates[node - len(self.terminals)])


def collapse(deployed, g_c: CellGraph) -> CollapsedGraph:
    """Collapse the deployed subgraph of G_c into its connected components
    (isolated deployed cells become self-connected singletons); keep all
    non-deployed open cells as candidate relay nodes."""
    deployed_idx = sorted({g_c.index[c] if isinstance(c, Cell) else int(c) for c in deployed})
    if not deployed_idx:
        raise ValueError("collapse requires at least one deployed cell")
    labels = connected_components(g_c, deployed_idx)
    t = component_count(labels)
    groups = [[] for _ in range(t)]
    for v in deployed_idx:
        groups[labels[v]].append(v)
    terminal_cells = [frozenset(g_c.cells[v] for v in grp) for grp in groups]
    candidates = [i for i in range(g_c.n) if labels[i] == -1]
    n = t + len(candidates)
    adj = np.zeros((n, n), dtype=bool)
    cand_pos = {v: t + k for k, v in enumerate(candidates)}
    for a in range(t):
        for v in groups[a]:
            for w in g_c.neighbors(v):
                lw = labels[w]
                if lw == -1:
                    adj[a, cand_pos[w]] = adj[cand_pos[w], a] = True
                elif lw != a:
                    adj[a, lw] = adj[lw, a] = True  # parallel component edge
    for k, v in enumerate(candidates):
        for w in g_c.neighbors(v):
            if labels[w] == -1:
                adj[t + k, cand_pos[w]] = adj[cand_pos[w], t + k] = True
    return CollapsedGraph(
        terminals=list(range(t)),
        terminal_cells=terminal_cells,
        candidates=[g_c.cells[v] for v in candidates],
        adj=adj,
    )


def _bfs_dist(adj: np.ndarray, source: int) -> np.ndarray:
    n = adj.shape[0]
    dist = np.full(n, -1, dtype=np.int64)
    dist[source] = 0
    frontier = [source]
    d = 0
    while frontier:
        d += 1
        nxt = []
        for v in frontier:
            for w in np.nonzero(adj[v])[0]:
                if dist[w] == -1:
                    dist[w] = d
                    nxt.append(int(w))
        frontier = nxt
    return dist


def _lex_shortest_path(adj: np.ndarray, src: int, dst: int, dist_to_dst: np.ndarray):
    """Among shortest src->dst paths, the one with the lexicographically
    smallest node-id sequence (greedy descent on dist_to_dst)."""
    path = [src]
    cur = src
    while cur != dst:
        nbrs = np.nonzero(adj[cur])[0]
        step = [int(w) for w in nbrs if dist_to_dst[w] == dist_to_dst[cur] - 1]
        cur = min(step)
        path.append(cur)
    return path


def steiner_repair(cg: CollapsedGraph) -> set:
    """Kou-Markowsky-Berman 2(1-1/t) approximation: metric closure over the
    terminals, MST of the closure, expansion of MST edges into shortest
    paths, MST of the expansion, and pruning of non-terminal leaves.

    Returns the set of candidate cells to add; raises InfeasibleRepairError
    when the terminals are not mutually reachable.
    """
    t = len(cg.terminals)
    if t <= 1:
        return set()
    dists = {a: _bfs_dist(cg.adj, a) for a in cg.terminals}
    # group terminals by mutual reachability to report clean failures
    groups = []
    seen = set()
    for a in cg.terminals:
        if a in seen:
            continue
        grp = [b for b in cg.terminals if dists[a][b] >= 0]
        seen.update(grp)
        groups.append(grp)
    if len(groups) > 1:
        raise InfeasibleRepairError(groups)

    # MST over the terminal metric closure (Prim, deterministic tie-breaks)
    in_tree = {0}
    closure_edges = []
    pq = [(int(dists[0][b]), 0, b) for b in range(1, t)]
    heapq.heapify(pq)
    while len(in_tree) < t:
        d, a, b = heapq.heappop(pq)
        if b in in_tree:
            continue
        in_tree.add(b)
        closure_edges.append((a, b))
        for c in range(t):
            if c not in in_tree:
                heapq.heappush(pq, (int(dists[b][c]), b, c))

    # expand closure edges into lexicographically-smallest shortest paths
    expansion = set()
    nodes = set(cg.terminals)
    for a, b in closure_edges:
        path = _lex_shortest_path(cg.adj, b, a, dists[a])
        nodes.update(path)
        for u, v in zip(path, path[1:]):
            expansion.add((min(u, v), max(u, v)))

    # MST of the expansion subgraph (Kruskal over unit weights)
    parent = {v: v for v in nodes}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    tree = set()
    for u, v in sorted(expansion):
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            tree.add((u, v))

    # prune non-terminal leaves until fixpoint
    terminals = set(cg.terminals)
    while True:
        degree = {}
        for u, v in tree:
            degree[u] = degree.get(u, 0) + 1
            degree[v] = degree.get(v, 0) + 1
        leaves = {v for v, d in degree.items() if d == 1 and v not in terminals}
        if not leaves:
            break
        tree = {(u, v) for u, v in tree if u not in leaves and v not in leaves}

    used = set()
    for u, v in tree:
        used.add(u)
        used.add(v)
    return {cg.candidates[v - t] for v in used if v >= t}


def steiner_tree_weight(cg: CollapsedGraph, added: set) -> int:
    """Edge weight of the repair tree: a tree spanning t terminals plus the
    added candidate cells has exactly t + |added| - 1 unit-weight edges."""
    t = len(cg.terminals)
    if t <= 1:
        return 0
    return t + len(added) - 1
