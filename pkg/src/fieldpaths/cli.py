"""Command-line interface.

Subcommands: run (one scenario, aggregated over replications), sweep
(reconfiguration-density sweep), validate (parse only), oracle (planner
brute-force checks).  Exit codes: 0 success, 1 validation error, 2
runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import kernel
from .report import emit_csv, emit_plotdata, run_experiment, sweep_reconfigurations
from .scenario import ScenarioError, load_scenario


def _add_common(p):
    p.add_argument("--scenario", required=True, help="scenario file path")
    p.add_argument("--seed", type=int, default=None, help="base seed override")
    p.add_argument("--replications", type=int, default=None)
    p.add_argument("--out-dir", default=".", help="output directory")
    p.add_argument("--protocol", default=None,
                   help="override protocol kind(s), comma separated")


def build_parser():
    ap = argparse.ArgumentParser(prog="fieldpaths",
                                 description="industrial field-network path "
                                             "reconfiguration simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario and emit CSV/plot data")
    _add_common(run_p)
    run_p.add_argument("--check-invariants", action="store_true")

    sweep_p = sub.add_parser("sweep", help="reconfiguration-density sweep")
    _add_common(sweep_p)
    sweep_p.add_argument("--percentages", default="1,2,5,10,20",
                         help="comma-separated trigger densities in percent")

    val_p = sub.add_parser("validate", help="parse a scenario file only")
    val_p.add_argument("--scenario", required=True)

    sub.add_parser("oracle", help="brute-force planner checks on built-in instances")
    return ap


def _load(path):
    if not os.path.exists(path):
        print(f"scenario not found: {path}", file=sys.stderr)
        raise SystemExit(1)
    try:
        return load_scenario(path)
    except ScenarioError as exc:
        for ln, msg in exc.errors:
            print(f"{path}:{ln}: {msg}", file=sys.stderr)
        raise SystemExit(1) from None


def cmd_run(args):
    cfg = _load(args.scenario)
    kinds = args.protocol.split(",") if args.protocol else None
    report = run_experiment(cfg, replications=args.replications,
                            base_seed=args.seed, kinds=kinds,
                            check_invariants=args.check_invariants)
    os.makedirs(args.out_dir, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.scenario))[0]
    csv_path = os.path.join(args.out_dir, f"{stem}.csv")
    json_path = os.path.join(args.out_dir, f"{stem}.plot.json")
    emit_csv(report, csv_path)
    emit_plotdata(report, json_path)
    print(f"kernel: {kernel.IMPLEMENTATION}")
    for proto in report.protocols():
        te = report.scalars.get((proto, "total_energy"))
        tl = report.scalars.get((proto, "total_lost"))
        if te and tl:
            print(f"{proto}: total_energy={te[0]:.6g} total_lost={tl[0]:.6g}")
    print(f"wrote {csv_path} and {json_path}")
    return 0


def cmd_sweep(args):
    cfg = _load(args.scenario)
    percentages = [float(p) for p in args.percentages.split(",")]
    kinds = args.protocol.split(",") if args.protocol else ("distr", "pdd_cr")
    report = sweep_reconfigurations(cfg, percentages,
                                    replications=args.replications,
                                    base_seed=args.seed, kinds=kinds)
    os.makedirs(args.out_dir, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.scenario))[0]
    csv_path = os.path.join(args.out_dir, f"{stem}.sweep.csv")
    emit_csv(report, csv_path)
    for (proto, metric), (m, _lo, _hi) in sorted(report.scalars.items()):
        print(f"{proto} {metric} mean={m:.6g}")
    print(f"wrote {csv_path}")
    return 0


def cmd_validate(args):
    _load(args.scenario)
    print("scenario OK")
    return 0


def cmd_oracle(_args):
    """Compare the greedy planner against exhaustive search on small
    randomized instances; prints the worst observed ratio."""
    import numpy as np

    from .planner import (GraphView, brute_force_max_min_lifetime,
                          compute_initial_plan, plan_min_lifetime)
    from .topology import DataPiece, build_grid_topology

    rng = np.random.default_rng(7)
    worst = 1.0
    checked = 0
    for trial in range(30):
        g = build_grid_topology(2, 3, 2.5, 2.8, 3.0)
        eps = {}
        for (u, v) in g.edges:
            eps[(u, v)] = eps[(v, u)] = 9.0
        view = GraphView(g, latency={(u, v): g.latency(u, v)
                                     for (u, v) in g.edges} |
                                    {(v, u): g.latency(u, v)
                                     for (u, v) in g.edges},
                         eps=eps)
        energies = {u: float(rng.integers(2000, 20000)) for u in g.nodes}
        nodes = list(g.nodes)
        pieces = []
        for pid in range(2):
            s, c = rng.choice(nodes, size=2, replace=False)
            pieces.append(DataPiece(pid, int(s), int(c), int(rng.integers(1, 9))))
        oracle = brute_force_max_min_lifetime(view, pieces, energies, 100.0)
        if any(p is None for p in oracle.paths.values()):
            continue
        greedy = compute_initial_plan(view, pieces, energies, 100.0)
        o = plan_min_lifetime(oracle, view, pieces, energies).as_float()
        gr = plan_min_lifetime(greedy, view, pieces, energies).as_float()
        checked += 1
        if o > 0:
            worst = min(worst, gr / o)
    print(f"checked {checked} instances; worst greedy/oracle ratio {worst:.3f}")
    return 0 if worst >= 0.8 else 2


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {"run": cmd_run, "sweep": cmd_sweep,
                "validate": cmd_validate, "oracle": cmd_oracle}
    try:
        return handlers[args.command](args)
    except SystemExit:
        raise
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures map to exit code 2
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
