import math

import numpy as np
import pytest

from netsynth.geometry import Cell, GridRegion, Point, SensorSpec, exact_distance
from netsynth.smc import (
    binary_search_min_n,
    encode,
    precompute_exclusions,
    seed_phases,
    smc_solve,
)
from netsynth.evaluate import coverage_redundancy, verify
from conftest import random_region


def solve(region, specs, k, counts, budget=30.0, connectivity=True, demands=None):
    prob = encode(region, specs, k, counts, connectivity=connectivity, demands=demands)
    precompute_exclusions(prob)
    seed_phases(prob)
    return smc_solve(prob, budget)


def test_single_cell_single_sensor():
    region = GridRegion(1, 1, 1.0)
    res = solve(region, [SensorSpec(0, 2.0, 2.0)], [1], [1])
    assert res.feasible
    s = res.placement.sensors[0]
    assert 0 <= s.x <= 1 and 0 <= s.y <= 1


def test_single_cell_demand_exceeds_sensors():
    region = GridRegion(1, 1, 1.0)
    res = solve(region, [SensorSpec(0, 2.0, 2.0)], [3], [1])
    assert res.status == "infeasible"


def test_obstacle_free_encoding_has_no_visibility_selectors():
    region = GridRegion(3, 3, 1.0)
    prob = encode(region, [SensorSpec(0, 9.0, 9.0)], [1], [2])
    kinds = {info[0] for info in prob.var_info.values()}
    assert "face" not in kinds and "tangent" not in kinds


def test_blocked_strip_infeasible_small_radius():
    region = GridRegion.from_occupied_cells(3, 1, 1.0, [Cell(1, 0)])
    res = solve(region, [SensorSpec(0, 1.4, 1.4)], [1], [1])
    assert res.status == "infeasible"


def test_blocked_strip_infeasible_geometrically():
    # both end cells demanded; the full-height obstacle blocks any single
    # sensor, whatever the radius
    region = GridRegion.from_occupied_cells(3, 1, 1.0, [Cell(1, 0)])
    res = solve(region, [SensorSpec(0, 10.0, 10.0)], [1], [1])
    assert res.status == "infeasible"


def test_returned_placements_verify(rng):
    spec = SensorSpec(0, 6.0, 6.0)
    solved = 0
    for seed in range(3):
        local = np.random.default_rng(seed + 40)
        region = random_region(local, 6, 6, extent=0.1)
        res = solve(region, [spec], [2], [4], budget=45.0)
        if res.feasible:
            rep = verify(res.placement, region, [spec], [2])
            assert rep.ok
            solved += 1
    assert solved >= 2


def test_precompute_exclusions_counts():
    # obstacle-free, diameter below twice the radius: nothing to exclude
    region = GridRegion(2, 2, 1.0)
    prob = encode(region, [SensorSpec(0, 6.0, 6.0)], [1], [2])
    assert precompute_exclusions(prob) == 0

    # obstacle-free strip with a small radius: location pairs beyond 2*r_s
    # produce one clause per sensor slot (plus the analogous cell pairs)
    region2 = GridRegion(3, 1, 1.0)
    spec = SensorSpec(0, 1.0, 4.0)
    n_slots = 2
    prob2 = encode(region2, [spec], [1], [n_slots])
    locs = prob2.locations
    far_locs = sum(
        1
        for a in range(len(locs))
        for b in range(a + 1, len(locs))
        if exact_distance(locs[a], locs[b]) > 2.0
    )
    cells = region2.open_cells
    far_cells = 0
    for a in range(len(cells)):
        for b in range(a + 1, len(cells)):
            dx = max(0, abs(cells[a].col - cells[b].col) - 1)
            dy = max(0, abs(cells[a].row - cells[b].row) - 1)
            if math.hypot(dx, dy) > 2.0:
                far_cells += 1
    added = precompute_exclusions(prob2)
    assert added == n_slots * (far_locs + far_cells)
    assert far_locs > 0


def test_connectivity_constraint_enforced():
    # coverage alone would allow two far sensors; the link radius forces a
    # third in between or a tighter pair
    region = GridRegion(4, 1, 1.0)
    spec = SensorSpec(0, 1.9, 2.5)
    res = solve(region, [spec], [1], [2], budget=30.0)
    assert res.feasible
    rep = verify(res.placement, region, [spec], [1])
    assert rep.ok and rep.connected


def test_heterogeneous_types_verify():
    region = GridRegion(2, 2, 1.0)
    specs = [SensorSpec(0, 6.0, 6.0), SensorSpec(1, 4.0, 6.0)]
    res = solve(region, specs, [1, 2], [1, 2], budget=30.0)
    assert res.feasible
    types = sorted(s.type_id for s in res.placement.sensors)
    assert types == [0, 1, 1]
    rep = verify(res.placement, region, specs, [1, 2])
    assert rep.ok


def test_per_cell_demand_vector():
    region = GridRegion(3, 1, 1.0)
    spec = SensorSpec(0, 1.6, 6.0)
    demands = [np.array([1, 0, 0])]
    res = solve(region, [spec], [1], [1], demands=demands)
    assert res.feasible
    s = res.placement.sensors[0]
    assert exact_distance(Point(s.x, s.y), Point(0, 0)) <= 1.6


def test_binary_search_min_two():
    region = GridRegion(4, 1, 1.0)
    spec = SensorSpec(0, 1.9, 2.5)
    n, res = binary_search_min_n(region, spec, 1, 4, time_budget=60.0)
    assert n == 2
    assert res.feasible
    # probing below the minimum is infeasible
    below = solve(region, [spec], [1], [1], budget=20.0)
    assert below.status == "infeasible"


def test_binary_search_colocated_k3():
    region = GridRegion(1, 1, 1.0)
    spec = SensorSpec(0, 2.0, 2.0)
    n, res = binary_search_min_n(region, spec, 3, 5, time_budget=30.0)
    assert n == 3
    assert res.feasible


def test_binary_search_nmax_below_bound():
    region = GridRegion(1, 1, 1.0)
    spec = SensorSpec(0, 2.0, 2.0)
    n, res = binary_search_min_n(region, spec, 3, 2, time_budget=10.0)
    assert n is None
    assert res.status == "infeasible"


def test_feasibility_monotone_in_n():
    region = GridRegion(3, 1, 1.0)
    spec = SensorSpec(0, 1.6, 2.5)
    feas = []
    for n in (1, 2, 3, 4):
        res = solve(region, [spec], [1], [n], budget=30.0)
        feas.append(res.feasible)
    # once feasible, stays feasible as sensors are added
    first = feas.index(True)
    assert all(feas[first:])


def test_smc_altitude_matches_milp_witness(rng):
    # the integer cover witnesses feasibility at its own count
    from netsynth.graphs import build_connectivity_graph, build_visibility_graph
    from netsynth.covering import build_covering, connectivity_repair, solve_covering

    region = random_region(rng, 6, 6, extent=0.12)
    spec = SensorSpec(0, 5.0, 5.0)
    gv = build_visibility_graph(region, spec.r_s)
    gc = build_connectivity_graph(region, spec.r_c)
    milp = connectivity_repair(solve_covering(build_covering(region, gv, 2), 20.0), gc)
    n, res = binary_search_min_n(region, spec, 2, milp.total, time_budget=90.0)
    assert res.feasible
    assert n is not None and n <= milp.total
    assert verify(res.placement, region, [spec], [2]).ok
