"""Command-line interface: ``riskroute <command> ...``.

Exit codes: 0 success, 1 no route / failed check, 2 bad input or usage.
"""
import argparse
from concurrent.futures import ThreadPoolExecutor
import json
import math
import os
from pathlib import Path
import statistics
import sys
import time

import numpy as np

from . import heuristic as heuristics_mod
from .exceptions import RiskRouteError
from .formats import load_graph, load_profile, save_graph, save_profile
from .ingest import CleaningFilters, build_profile, read_trips_csv, write_trips_csv
from .network import ClockTime, validate_sfifo
from .risk import RiskSpec
from .search import PRUNE_RULES, SearchOptions, route

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULT_RHOS = "expectation,var:0.5,var:0.9,var:0.95,cvar:0.5,cvar:0.9"


def _threads():
    try:
        return max(1, int(os.environ.get("RISKROUTE_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    n = _threads()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _emit(obj, out=None):
    json.dump(obj, out or sys.stdout, indent=2, allow_nan=False)
    (out or sys.stdout).write("\n")


def _alpha_grid(text):
    if ":" in text:
        a, step, b = (float(x) for x in text.split(":"))
        if step <= 0 or b < a:
            raise argparse.ArgumentTypeError(f"bad alpha grid {text!r}")
        n = int(round((b - a) / step)) + 1
        return [round(a + i * step, 12) for i in range(n)]
    return [float(x) for x in text.split(",") if x.strip()]


def _options(args):
    return SearchOptions(
        seed_ub=not args.no_seed_ub,
        fsd_prune=not args.no_fsd_prune,
        exp_prune=not args.no_exp_prune,
        ub_prune=not getattr(args, "no_ub_prune", False),
    )


def _load(args):
    graph = load_graph(args.graph)
    profile = load_profile(args.profile, graph)
    return graph, profile


# -- commands -----------------------------------------------------------------

def cmd_ingest(args):
    graph = load_graph(args.graph)
    records, malformed = [], 0
    for path in args.trips:
        recs, bad = read_trips_csv(path)
        records.extend(recs)
        malformed += bad
    filters = CleaningFilters(
        max_speed=args.max_speed, min_duration=args.min_duration, max_duration=args.max_duration,
        min_distance=args.min_distance, bbox=tuple(args.bbox) if args.bbox else None, margin=args.margin,
    )
    profile, report = build_profile(
        records, graph, bin_width=args.bin_width, edge_cap=args.edge_cap,
        min_samples=args.min_samples, filters=filters, snap_radius=args.snap_radius,
    )
    save_profile(profile, args.out)
    report = {"malformed": malformed, **report, "out": str(args.out)}
    _emit(report)
    return EXIT_OK


def cmd_route(args):
    graph, profile = _load(args)
    profile = profile.with_fallback(graph)
    spec = RiskSpec.parse(args.rho)
    depart = ClockTime.parse(args.depart)
    for name, node in (("--from", args.origin), ("--to", args.destination)):
        if node not in graph.nodes:
            raise RiskRouteError(f"{name}: unknown node {node!r}")
    table = heuristics_mod.build(graph, profile, args.destination, args.heuristic)
    res = route(graph, profile, table, spec, args.origin, args.destination, depart, _options(args))
    if args.format == "geojson":
        if res.found:
            _emit(res.to_geojson(graph))
        else:
            _emit({"type": "Feature", "geometry": None, "properties": {"rho": str(spec), "found": False}})
    else:
        _emit(res.to_dict())
    return EXIT_OK if res.found else EXIT_FAIL


def cmd_validate(args):
    graph, profile = _load(args)
    missing = [e for e in graph.edges if e not in profile]
    violations = validate_sfifo(profile, args.alpha_grid)
    hard = [v for v in violations if v.hard]
    report = {
        "edges": len(graph.edges),
        "profiled_edges": len(profile),
        "fallback_edges": len(missing),
        "bin_width": profile.bin_width,
        "edge_cap": profile.edge_cap,
        "alpha_grid": args.alpha_grid,
        "sfifo_soft": len(violations) - len(hard),
        "sfifo_hard": len(hard),
        "examples": [
            {"edge": v.edge_id, "day_class": v.day_class.value, "hour": v.hour, "alpha": v.alpha,
             "quantile_before": v.quantile_before, "quantile_after": v.quantile_after, "hard": v.hard}
            for v in (hard + violations)[: args.show]
        ],
    }
    _emit(report)
    if args.strict_fifo and hard:
        print(f"error: {len(hard)} hard S-FIFO violation(s)", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _query_set(graph, n, seed):
    rng = np.random.default_rng(seed)
    ids = sorted(graph.nodes)
    out = []
    for _ in range(n):
        o, d = rng.choice(len(ids), size=2, replace=False)
        out.append((ids[int(o)], ids[int(d)]))
    return out


def cmd_bench(args):
    graph, profile = _load(args)
    profile = profile.with_fallback(graph)
    spec = RiskSpec.parse(args.rho)
    depart = ClockTime.parse(args.depart)
    opts = _options(args)
    queries = _query_set(graph, args.queries, args.seed)

    def one(q):
        o, d = q
        t0 = time.perf_counter()
        table = heuristics_mod.build(graph, profile, d, args.heuristic)
        res = route(graph, profile, table, spec, o, d, depart, opts)
        return q, time.perf_counter() - t0, res

    runs = _map(one, queries)
    lat = [r[1] for r in runs]
    pruned = dict.fromkeys(PRUNE_RULES, 0)
    for _, _, res in runs:
        for k, v in res.stats.pruned.items():
            pruned[k] += v
    expanded = [res.stats.expanded for _, _, res in runs]
    report = {
        "queries": len(runs),
        "seed": args.seed,
        "rho": str(spec),
        "depart": args.depart,
        "threads": _threads(),
        "latency_s": {
            "mean": statistics.fmean(lat),
            "median": statistics.median(lat),
            "p95": float(np.percentile(lat, 95)),
            "max": max(lat),
        },
        "expanded": {"mean": statistics.fmean(expanded), "median": statistics.median(expanded)},
        "generated_total": sum(res.stats.generated for _, _, res in runs),
        "pruned_total": sum(pruned.values()),
        "pruned_by_rule": pruned,
        "unreachable": sum(not res.found for _, _, res in runs),
    }
    if args.per_query:
        report["per_query"] = [
            {"from": o, "to": d, "latency_s": el, "value": res.value if res.found else None,
             "expanded": res.stats.expanded}
            for (o, d), el, res in runs
        ]
    _emit(report)
    return EXIT_OK


def oracle_check(n_instances, seed=0, max_nodes=10, rhos=DEFAULT_RHOS, options=None):
    """Compare :func:`route` with exhaustive enumeration on random instances.

    Returns ``(n_checked, failures)``; each failure is a dict describing the
    disagreement.
    """
    from .oracle import enumerate_optimal
    from .synthetic import random_instance

    specs = [RiskSpec.parse(r) for r in rhos.split(",")] if isinstance(rhos, str) else list(rhos)

    def one(i):
        inst = random_instance(seed * 1_000_003 + i, max_nodes=max_nodes)
        table = heuristics_mod.build(inst.graph, inst.profile, inst.destination)
        bad = []
        for spec in specs:
            res = route(inst.graph, inst.profile, table, spec, inst.origin, inst.destination, inst.depart, options)
            want = enumerate_optimal(inst.graph, inst.profile, spec, inst.origin, inst.destination, inst.depart)[0]
            got = res.value if res.found else math.inf
            if got != want:
                bad.append({"instance": i, "rho": str(spec), "route": got, "oracle": want})
        return bad

    failures = [f for bad in _map(one, range(n_instances)) for f in bad]
    return n_instances * len(specs), failures


def cmd_oracle_check(args):
    t0 = time.perf_counter()
    checked, failures = oracle_check(args.instances, args.seed, args.max_nodes, args.rhos, _options(args))
    _emit({
        "instances": args.instances,
        "checks": checked,
        "failures": len(failures),
        "examples": [{k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in f.items()}
                     for f in failures[:10]],
        "elapsed_s": time.perf_counter() - t0,
        "status": "pass" if not failures else "fail",
    })
    return EXIT_OK if not failures else EXIT_FAIL


def cmd_generate(args):
    from .synthetic import grid_network, grid_profile, synthetic_trips

    graph = grid_network(args.rows, args.cols, seed=args.seed)
    profile = grid_profile(graph, args.bin_width, args.edge_cap, seed=args.seed)
    out = Path(args.out)
    save_graph(graph, out)
    prof_path = out / ("profile.csv" if args.csv else "profile.rrp")
    save_profile(profile, prof_path)
    report = {"nodes": len(graph.nodes), "edges": len(graph.edges), "graph": str(out), "profile": str(prof_path)}
    if args.trips:
        trips = synthetic_trips(graph, profile, args.trips, seed=args.seed)
        write_trips_csv(trips, out / "trips.csv")
        report["trips"] = str(out / "trips.csv")
    _emit(report)
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _add_prune_flags(p):
    p.add_argument("--no-seed-ub", action="store_true", help="start without the free-flow path upper bound")
    p.add_argument("--no-fsd-prune", action="store_true", help="disable dominance pruning")
    p.add_argument("--no-exp-prune", action="store_true", help="disable expected-cost pruning")
    p.add_argument("--no-ub-prune", action="store_true", help="disable upper-bound pruning")


def build_parser():
    parser = argparse.ArgumentParser(prog="riskroute", description="Risk-averse routing on stochastic, time-dependent road networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="estimate a profile from trip records")
    p.add_argument("--trips", nargs="+", required=True, type=Path)
    p.add_argument("--graph", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--bin-width", type=float, default=6.0)
    p.add_argument("--edge-cap", type=float, default=600.0)
    p.add_argument("--min-samples", type=int, default=5)
    p.add_argument("--snap-radius", type=float, default=150.0)
    defaults = CleaningFilters()
    p.add_argument("--max-speed", type=float, default=defaults.max_speed)
    p.add_argument("--min-duration", type=float, default=defaults.min_duration)
    p.add_argument("--max-duration", type=float, default=defaults.max_duration)
    p.add_argument("--min-distance", type=float, default=defaults.min_distance)
    p.add_argument("--bbox", type=float, nargs=4, metavar=("MIN_LAT", "MAX_LAT", "MIN_LON", "MAX_LON"))
    p.add_argument("--margin", type=float, default=0.005, help="degrees added around the graph extent")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("route", help="answer one routing query")
    p.add_argument("--graph", required=True, type=Path)
    p.add_argument("--profile", required=True, type=Path)
    p.add_argument("--from", dest="origin", required=True)
    p.add_argument("--to", dest="destination", required=True)
    p.add_argument("--depart", default="wed 08:00")
    p.add_argument("--rho", default="cvar:0.9")
    p.add_argument("--format", choices=("json", "geojson"), default="json")
    p.add_argument("--heuristic", choices=heuristics_mod.MODES, default="network")
    _add_prune_flags(p)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("validate", help="check a profile against its graph")
    p.add_argument("--graph", required=True, type=Path)
    p.add_argument("--profile", required=True, type=Path)
    p.add_argument("--alpha-grid", type=_alpha_grid, default=_alpha_grid("0.1:0.1:0.9"))
    p.add_argument("--strict-fifo", action="store_true", help="fail on hard S-FIFO violations")
    p.add_argument("--show", type=int, default=10, help="violations to list")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("bench", help="time random queries")
    p.add_argument("--graph", required=True, type=Path)
    p.add_argument("--profile", required=True, type=Path)
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho", default="cvar:0.9")
    p.add_argument("--depart", default="wed 08:00")
    p.add_argument("--heuristic", choices=heuristics_mod.MODES, default="network")
    p.add_argument("--per-query", action="store_true")
    _add_prune_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("oracle-check", help="compare against exhaustive search on random instances")
    p.add_argument("--instances", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-nodes", type=int, default=10)
    p.add_argument("--rhos", default=DEFAULT_RHOS)
    _add_prune_flags(p)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("generate", help="write a synthetic grid network and profile")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--rows", type=int, default=70)
    p.add_argument("--cols", type=int, default=72)
    p.add_argument("--bin-width", type=float, default=6.0)
    p.add_argument("--edge-cap", type=float, default=600.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trips", type=int, default=0, help="also write this many synthetic trips")
    p.add_argument("--csv", action="store_true", help="write the profile as CSV")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (RiskRouteError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
