"""Command-line entry point: scenario generation, synthesis, verification,
and comparison sweeps.

Exit codes: 0 success, 2 usage or input error, 3 infeasible, 4 verification
failure, 5 timeout without a solution.
"""

import argparse
import json
import sys
import time

import numpy as np

from .covering import (
    InfeasibleCoverError,
    build_covering,
    connectivity_repair,
    greedy_multicover,
    select_method,
    solve_covering,
)
from .evaluate import SweepConfig, coverage_redundancy, rows_to_csv, sweep, verify
from .geometry import SensorSpec
from .graphs import InfeasibleRepairError, build_connectivity_graph, build_visibility_graph
from .hierarchy import (
    HierarchyConfig,
    StitchingInfeasibleError,
    SubAreaInfeasibleError,
    hierarchical_synthesize,
)
from .placements import Placement, Sensor
from .scenario import (
    GenerationError,
    MapFormatError,
    Scenario,
    ScenarioSpec,
    compute_gamma,
    generate,
    load_scenario,
    save_scenario,
)
from . import smc as smc_mod

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_VERIFY = 4
EXIT_TIMEOUT = 5


def cmd_generate(args) -> int:
    try:
        spec = ScenarioSpec(
            args.width, args.height, args.cell_size, args.extent, args.gamma,
            seed=args.seed,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        region = generate(spec)
    except GenerationError as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    scenario = Scenario(
        region,
        [SensorSpec(0, args.r_s, args.r_c)],
        [args.k],
        seed=args.seed,
    )
    save_scenario(scenario, args.out)
    achieved = compute_gamma(region) if region.n_occupied else 0.0
    print(
        f"wrote {args.out}: {region.width}x{region.height}, "
        f"{region.n_occupied} occupied cells, gamma {achieved:.2f}"
    )
    return EXIT_OK


def _flat_milp(region, specs, ks, budget):
    graphs = [build_visibility_graph(region, sp.r_s) for sp in specs]
    g_c = build_connectivity_graph(region, min(sp.r_c for sp in specs))
    sol = solve_covering(build_covering(region, graphs, ks), budget)
    sol = connectivity_repair(sol, g_c)
    return sol.to_placement(), len(sol.relay_cells)


def _flat_smc(region, spec, k, budget):
    g_v = build_visibility_graph(region, spec.r_s)
    g_c = build_connectivity_graph(region, spec.r_c)
    cover = solve_covering(build_covering(region, g_v, k), max(5.0, budget * 0.1))
    cover = connectivity_repair(cover, g_c)
    witness = [[s.x, s.y] for s in cover.to_placement().sensors]
    n, res = smc_mod.binary_search_min_n(
        region, spec, k, cover.total, time_budget=budget,
        witness_positions=witness,
    )
    if res.placement is None:
        return None, res.status
    return Placement([Sensor(s.x, s.y, s.type_id) for s in res.placement.sensors]), 0


def run_synthesis(scenario: Scenario, method: str, sub_area: int | None,
                  budget: float, seed: int, chi: int):
    """Returns (placement, relays, method_used, hierarchical) or raises."""
    region = scenario.region
    specs = scenario.specs
    ks = scenario.k
    if method == "auto":
        extent = region.n_occupied / (region.width * region.height)
        gamma = compute_gamma(region) if region.n_occupied else 0.0
        beta = min(sp.beta for sp in specs)
        choice = select_method(extent, gamma, beta, region.n_open, chi)
        method = "milp" if choice in ("milp", "either") else "smc"
        print(
            f"auto-selected {method} (extent {extent:.0%}, gamma {gamma:.1f}, "
            f"beta {beta:.2f}, open cells {region.n_open}, chi {chi}, "
            f"rule: {choice})"
        )
    if sub_area is None:
        if method == "smc":
            hierarchical = region.n_open > 120
        else:
            hierarchical = region.n_open > chi
        sub_w = sub_h = 10
    elif sub_area == 0:
        hierarchical = False
        sub_w = sub_h = 10
    else:
        hierarchical = True
        sub_w = sub_h = sub_area
    if hierarchical:
        cfg = HierarchyConfig(sub_w=sub_w, sub_h=sub_h, time_budget=budget, seed=seed)
        res = hierarchical_synthesize(region, method, specs, ks, cfg)
        return res.placement, res.relays_added, method, True
    if method == "milp":
        placement, relays = _flat_milp(region, specs, ks, budget)
        return placement, relays, method, False
    if len(specs) != 1 or len(set(ks)) != 1:
        raise ValueError("flat smc synthesis supports a single sensor type")
    placement, relays = _flat_smc(region, specs[0], ks[0], budget)
    if placement is None:
        raise TimeoutError(relays)
    return placement, relays, method, False


def cmd_synth(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except FileNotFoundError:
        print(f"error: scenario file not found: {args.scenario}", file=sys.stderr)
        return EXIT_USAGE
    except (MapFormatError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: bad scenario file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.k is not None:
        scenario.k = [args.k] * len(scenario.specs)
    t0 = time.monotonic()
    try:
        placement, relays, method, hierarchical = run_synthesis(
            scenario, args.method, args.sub_area, args.time_budget, args.seed,
            args.chi,
        )
    except (InfeasibleCoverError, InfeasibleRepairError, SubAreaInfeasibleError,
            StitchingInfeasibleError, RuntimeError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except TimeoutError:
        print("timeout without a solution", file=sys.stderr)
        return EXIT_TIMEOUT
    runtime = time.monotonic() - t0
    report = verify(placement, scenario.region, scenario.specs, scenario.k)
    alpha = coverage_redundancy(
        placement, scenario.region, scenario.specs, max(1, sum(scenario.k))
    ) if placement.n else 0.0
    out = {
        "method": method,
        "hierarchical": hierarchical,
        **placement.to_dict(),
        "metrics": {
            "n": placement.n,
            "relays_added": relays,
            "alpha": alpha,
            "runtime_s": runtime,
        },
        "verification": report.to_dict(),
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(out, f, indent=1)
            f.write("\n")
    print(
        f"{method}{' (hierarchical)' if hierarchical else ''}: "
        f"{placement.n} sensors ({relays} relays), alpha {alpha:.2f}, "
        f"verified={report.ok}, {runtime:.1f}s"
    )
    return EXIT_OK if report.ok else EXIT_VERIFY


def cmd_verify(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
        with open(args.placement, encoding="utf-8") as f:
            placement = Placement.from_dict(json.load(f))
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MapFormatError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: bad input file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = verify(placement, scenario.region, scenario.specs, scenario.k)
    print(json.dumps(report.to_dict(), indent=1))
    return EXIT_OK if report.ok else EXIT_VERIFY


def cmd_sweep(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as f:
            cfg = SweepConfig.from_dict(json.load(f))
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_USAGE
    except (json.JSONDecodeError, TypeError) as exc:
        print(f"error: bad sweep config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.parallel:
        cfg.workers = args.parallel
    rows = sweep(cfg)
    csv_text = rows_to_csv(rows)
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(csv_text)
    n_ok = sum(1 for r in rows if r.verified)
    print(f"wrote {args.out}: {len(rows)} runs, {n_ok} verified")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netsynth",
        description="Sensor network topology synthesis on gridded 2-D regions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic scenario")
    g.add_argument("--width", type=int, required=True)
    g.add_argument("--height", type=int, required=True)
    g.add_argument("--cell-size", type=float, default=1.0)
    g.add_argument("--extent", type=float, required=True)
    g.add_argument("--gamma", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--r-s", type=float, default=6.0)
    g.add_argument("--r-c", type=float, default=6.0)
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("synth", help="synthesize a placement for a scenario")
    s.add_argument("--scenario", required=True)
    s.add_argument("--method", choices=["smc", "milp", "auto"], default="auto")
    s.add_argument("--k", type=int, default=None)
    s.add_argument("--sub-area", type=int, default=None,
                   help="sub-area edge in cells; 0 forces flat synthesis")
    s.add_argument("--time-budget", type=float, default=120.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--chi", type=int, default=1200,
                   help="open-cell count beyond which flat milp stops scaling")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_synth)

    v = sub.add_parser("verify", help="verify a placement against a scenario")
    v.add_argument("--scenario", required=True)
    v.add_argument("--placement", required=True)
    v.set_defaults(func=cmd_verify)

    w = sub.add_parser("sweep", help="run the comparison sweep")
    w.add_argument("--config", required=True)
    w.add_argument("--out", required=True)
    w.add_argument("--parallel", type=int, default=None)
    w.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
