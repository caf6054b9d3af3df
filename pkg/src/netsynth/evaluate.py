"""Independent verification and metrics.

verify() is the single source of truth for placement validity: it uses only
the exact predicates (exact distance, exact line of sight, BFS over exact
pairwise link distances) and never consults solver-side relaxations.  A cell
counts as covered by a sensor iff every demanded corner of the cell (corner
not lying on an obstacle) is in range with clear line of sight.
"""

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import GridRegion, Point, SensorSpec, covered_open_cells
from .placements import Placement


@dataclass
class UncoveredCell:
    cell: object
    type_id: int
    achieved: int
    demanded: int


@dataclass
class VerificationReport:
    coverage_ok: bool
    uncovered: list
    connected: bool
    component_count: int
    placement_ok: bool
    bad_sensors: list
    per_cell_counts: np.ndarray  # (n_types, n_open)

    @property
    def ok(self) -> bool:
        return self.coverage_ok and self.connected and self.placement_ok

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "coverage_ok": self.coverage_ok,
            "connected": self.connected,
            "component_count": self.component_count,
            "placement_ok": self.placement_ok,
            "uncovered": [
                {
                    "cell": [u.cell.col, u.cell.row],
                    "type_id": u.type_id,
                    "achieved": u.achieved,
                    "demanded": u.demanded,
                }
                for u in self.uncovered[:100]
            ],
            "bad_sensors": self.bad_sensors[:100],
        }


def cover_counts(placement: Placement, region: GridRegion, specs) -> np.ndarray:
    """Per-type, per-open-cell sensor cover counts under exact predicates."""
    specs = [specs] if isinstance(specs, SensorSpec) else list(specs)
    counts = np.zeros((len(specs), region.n_open), dtype=np.int64)
    for s in placement.sensors:
        mask = covered_open_cells(Point(s.x, s.y), specs[s.type_id].r_s, region)
        counts[s.type_id] += mask
    return counts


def _link_components(placement: Placement, specs) -> int:
    n = placement.n
    if n <= 1:
        return n
    pos = placement.positions()
    rc = np.array([specs[s.type_id].r_c for s in placement.sensors])
    d2 = ((pos[:, None, :] - pos[None, :, :]) ** 2).sum(axis=2)
    lim = np.minimum(rc[:, None], rc[None, :]) ** 2
    adj = d2 <= lim
    np.fill_diagonal(adj, False)
    seen = np.zeros(n, dtype=bool)
    comps = 0
    for s in range(n):
        if seen[s]:
            continue
        comps += 1
        stack = [s]
        seen[s] = True
        while stack:
            v = stack.pop()
            for w in np.nonzero(adj[v] & ~seen)[0]:
                seen[w] = True
                stack.append(int(w))
    return comps


def verify(
    placement: Placement,
    region: GridRegion,
    specs,
    k,
    demands=None,
    connectivity: bool = True,
) -> VerificationReport:
    """Check C1 (k-coverage), C3 (one connected component over exact pairwise
    link distances, r_c of a pair being the min of the two radii) and C4 (no
    sensor on an occupied cell or outside the region)."""
    specs = [specs] if isinstance(specs, SensorSpec) else list(specs)
    ks = [k] * len(specs) if isinstance(k, int) else list(k)
    counts = cover_counts(placement, region, specs)
    if demands is None:
        demand_arr = [np.full(region.n_open, ks[t], dtype=np.int64) for t in range(len(specs))]
    else:
        demand_arr = [np.asarray(d, dtype=np.int64) for d in demands]
    uncovered = []
    for t in range(len(specs)):
        short = counts[t] < demand_arr[t]
        for gi in np.nonzero(short)[0]:
            uncovered.append(
                UncoveredCell(
                    region.open_cells[gi],
                    t,
                    int(counts[t, gi]),
                    int(demand_arr[t][gi]),
                )
            )
    bad = []
    for idx, s in enumerate(placement.sensors):
        p = Point(s.x, s.y)
        if not region.contains_point(p) or region.point_in_obstacle(p):
            bad.append(idx)
    comps = _link_components(placement, specs)
    connected_ok = comps <= 1 if connectivity else True
    return VerificationReport(
        coverage_ok=not uncovered,
        uncovered=uncovered,
        connected=connected_ok,
        component_count=comps,
        placement_ok=not bad,
        bad_sensors=bad,
        per_cell_counts=counts,
    )


def coverage_redundancy(placement: Placement, region: GridRegion, specs, k: int) -> float:
    """alpha = mean per-cell cover count divided by the demanded k."""
    if k < 1:
        raise ValueError("redundancy needs k >= 1")
    counts = cover_counts(placement, region, specs).sum(axis=0)
    return float(counts.mean()) / k


# -- sweep harness -----------------------------------------------------------------


@dataclass
class SweepConfig:
    extents: list
    gammas: list
    betas: list
    width: int = 20
    height: int = 20
    cell_size: float = 1.0
    r_s: float = 6.0
    k: int = 3
    seeds: tuple = (0, 1, 2, 3, 4)
    time_budget: float = 120.0
    chi: int = 1200
    sub_w: int = 10
    sub_h: int = 10
    workers: int = 1

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})


@dataclass
class SweepRow:
    extent: float
    gamma_target: float
    gamma_achieved: float | None
    beta: float
    method: str
    hierarchy: bool
    seed: int
    n_sensors: int
    relays_added: int
    alpha: float | None
    runtime_s: float
    verified: bool
    status: str = "ok"      # ok | no-scenario | infeasible | error
    verdict: str = ""       # filled per cell after classification


CSV_COLUMNS = [
    "extent", "gamma_target", "gamma_achieved", "beta", "method", "hierarchy",
    "seed", "n_sensors", "relays_added", "alpha", "runtime_s", "verified", "verdict",
]


def _run_sweep_cell(args) -> SweepRow:
    """One (scenario, method) run; module-level so worker pools can pickle it."""
    cfg, extent, gamma, beta, seed, method = args
    from .covering import build_covering, connectivity_repair, solve_covering
    from .graphs import build_connectivity_graph, build_visibility_graph
    from .hierarchy import HierarchyConfig, hierarchical_synthesize
    from .scenario import GenerationError, ScenarioSpec, compute_gamma, generate

    row = SweepRow(
        extent=extent, gamma_target=gamma, gamma_achieved=None, beta=beta,
        method=method, hierarchy=False, seed=seed, n_sensors=0, relays_added=0,
        alpha=None, runtime_s=0.0, verified=False,
    )
    try:
        region = generate(
            ScenarioSpec(cfg.width, cfg.height, cfg.cell_size, extent, gamma, seed)
        )
    except GenerationError:
        row.status = "no-scenario"
        return row
    row.gamma_achieved = compute_gamma(region) if region.n_occupied else 0.0
    spec = SensorSpec(0, cfg.r_s, beta * cfg.r_s)
    t0 = time.monotonic()
    try:
        if method == "smc" or region.n_open > cfg.chi:
            # SMC always runs hierarchically; MILP only beyond the chi scale
            res = hierarchical_synthesize(
                region, method, [spec], [cfg.k],
                HierarchyConfig(sub_w=cfg.sub_w, sub_h=cfg.sub_h,
                                time_budget=cfg.time_budget, seed=seed),
            )
            placement, relays = res.placement, res.relays_added
            row.hierarchy = True
        else:
            g_v = build_visibility_graph(region, spec.r_s)
            g_c = build_connectivity_graph(region, spec.r_c)
            sol = solve_covering(build_covering(region, g_v, cfg.k), cfg.time_budget)
            sol = connectivity_repair(sol, g_c)
            placement, relays = sol.to_placement(), len(sol.relay_cells)
    except Exception:
        row.status = "infeasible"
        row.runtime_s = time.monotonic() - t0
        return row
    row.runtime_s = time.monotonic() - t0
    report = verify(placement, region, [spec], [cfg.k])
    row.n_sensors = placement.n
    row.relays_added = relays
    row.alpha = coverage_redundancy(placement, region, [spec], cfg.k)
    row.verified = report.ok
    if not report.ok:
        row.status = "infeasible"
    return row


def classify_cell(smc_alphas, milp_alphas) -> str:
    """The 10% comparison rule with normal-approximation CI overlap."""
    if not smc_alphas and not milp_alphas:
        return "infeasible"
    if not milp_alphas:
        return "smc_significantly_better"
    if not smc_alphas:
        return "milp_significantly_better"
    a = np.array(smc_alphas, dtype=float)
    b = np.array(milp_alphas, dtype=float)
    ma, mb = a.mean(), b.mean()
    half_a = 1.96 * a.std(ddof=1) / math.sqrt(len(a)) if len(a) > 1 else 0.0
    half_b = 1.96 * b.std(ddof=1) / math.sqrt(len(b)) if len(b) > 1 else 0.0
    overlap = (ma - half_a) <= (mb + half_b) and (mb - half_b) <= (ma + half_a)
    within_10 = abs(ma - mb) <= 0.1 * (ma + mb) / 2
    if overlap or within_10:
        return "smc_slightly_better" if ma <= mb else "milp_slightly_better"
    return "smc_significantly_better" if ma < mb else "milp_significantly_better"


def sweep(cfg: SweepConfig) -> list:
    """Run both pipelines over the extent x gamma x beta grid and classify
    each cell by the 10% rule; failures are recorded and the sweep continues.
    Rows come back in a deterministic order regardless of worker scheduling."""
    tasks = [
        (cfg, extent, gamma, beta, seed, method)
        for extent in cfg.extents
        for gamma in cfg.gammas
        for beta in cfg.betas
        for seed in cfg.seeds
        for method in ("smc", "milp")
    ]
    if cfg.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(_run_sweep_cell, tasks))
    else:
        rows = [_run_sweep_cell(t) for t in tasks]
    rows.sort(key=lambda r: (r.extent, r.gamma_target, r.beta, r.method, r.seed))
    by_cell = {}
    for r in rows:
        by_cell.setdefault((r.extent, r.gamma_target, r.beta), []).append(r)
    for cell_rows in by_cell.values():
        verdict = classify_cell(
            [r.alpha for r in cell_rows if r.method == "smc" and r.verified],
            [r.alpha for r in cell_rows if r.method == "milp" and r.verified],
        )
        for r in cell_rows:
            r.verdict = verdict
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for r in rows:
        writer.writerow(
            {
                "extent": r.extent,
                "gamma_target": r.gamma_target,
                "gamma_achieved": "" if r.gamma_achieved is None else f"{r.gamma_achieved:.3f}",
                "beta": r.beta,
                "method": r.method,
                "hierarchy": r.hierarchy,
                "seed": r.seed,
                "n_sensors": r.n_sensors,
                "relays_added": r.relays_added,
                "alpha": "" if r.alpha is None else f"{r.alpha:.4f}",
                "runtime_s": f"{r.runtime_s:.2f}",
                "verified": r.verified,
                "verdict": r.verdict,
            }
        )
    return buf.getvalue()
