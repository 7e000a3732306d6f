"""Command-line harness: solve instances, run benchmark sweeps, profile
turnpikes and print dissipativity certificates.

Subcommands: solve, bench, turnpike, certify, instances.  Exit codes for
solve: 0 optimal, 2 suboptimal (a limit bound the search), 3 infeasible,
1 usage or runtime error.  Set TMIQP_LOG={error|info|debug} to control
log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .bnb import BnbConfig, GuessSet, solve_bnb
from .dissipativity import certify
from .guessgen import (dominant_weight, guesses_from_json, plateau_guesses,
                       table1_templates, tail_guesses)
from .instances import BUILTINS, get_builtin
from .model import load_instance, save_instance
from .oracle import EnumerationLimitExceeded, enumerate_solve
from .turnpike import (solve_steady_state, turnpike_profile, write_report,
                       _with_initial_state)

log = logging.getLogger("tmiqp")

EXIT_OPTIMAL = 0
EXIT_ERROR = 1
EXIT_SUBOPTIMAL = 2
EXIT_INFEASIBLE = 3

ORACLE_LIMIT = 4096


class CliError(RuntimeError):
    pass


def _configure_logging():
    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(
        os.environ.get("TMIQP_LOG", "error").lower(), logging.ERROR)
    logging.basicConfig(level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def _parse_floats(text):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_ints(text):
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _load_cli_instance(args):
    if args.instance and args.builtin:
        raise CliError("pass either --instance or --builtin, not both")
    if args.instance:
        try:
            inst = load_instance(args.instance)
        except FileNotFoundError:
            raise CliError(f"instance file not found: {args.instance}")
        except (KeyError, ValueError) as exc:
            raise CliError(f"malformed instance file {args.instance}: {exc}")
    elif args.builtin:
        kwargs = {}
        if args.nx is not None:
            kwargs["n_x"] = args.nx
        if getattr(args, "horizon", None) is not None:
            kwargs["N"] = args.horizon
        try:
            inst = get_builtin(args.builtin, **kwargs)
        except (KeyError, TypeError) as exc:
            raise CliError(str(exc))
    else:
        raise CliError("one of --instance or --builtin is required")
    if args.instance and getattr(args, "horizon", None) is not None:
        inst = _with_initial_state(inst, inst.x0, args.horizon)
    if getattr(args, "x0", None) is not None:
        x0 = _parse_floats(args.x0)
        if len(x0) == 1:
            x0 = [x0[0]] * inst.n_x
        if len(x0) != inst.n_x:
            raise CliError(f"--x0 needs 1 or {inst.n_x} components")
        inst = _with_initial_state(inst, x0, inst.N)
    return inst


def _recipe_guesses(recipe, inst, sample_index=0):
    """Turnpike-informed guess sets: 'table1' builds the plateau templates
    around the optimal steady state; 'tail' or 'tail:K' fixes the steady
    integer decision from stage K onward (cycling K over 2..6 per sample
    when unpinned)."""
    ss = solve_steady_state(inst)
    base_weights = range(1, inst.N + 1)
    if recipe == "table1":
        return plateau_guesses(ss.v_bar, inst.N, table1_templates())
    if recipe == "tail" or recipe.startswith("tail:"):
        if recipe == "tail":
            k_hat = 2 + (sample_index % 5)
        else:
            k_hat = int(recipe.split(":", 1)[1])
        pa = tail_guesses(ss.v_bar, inst.N, [k_hat])[0]
        return GuessSet(guesses=(pa,),
                        weights=(dominant_weight(base_weights),))
    raise CliError(f"unknown recipe '{recipe}'; use table1, tail or tail:K")


def _cli_guesses(args, inst, sample_index=0):
    if args.guesses and args.recipe:
        raise CliError("pass either --guesses or --recipe, not both")
    if args.guesses:
        try:
            with open(args.guesses) as fh:
                return guesses_from_json(json.load(fh))
        except FileNotFoundError:
            raise CliError(f"guess file not found: {args.guesses}")
        except (KeyError, ValueError, TypeError) as exc:
            raise CliError(f"malformed guess file {args.guesses}: {exc}")
    if args.recipe:
        return _recipe_guesses(args.recipe, inst, sample_index)
    return None


def _bnb_config(args, trace_path=None):
    return BnbConfig(eps_tol=args.eps_tol, node_limit=args.node_limit,
                     time_limit=args.time_limit, trace_path=trace_path)


def cmd_solve(args):
    inst = _load_cli_instance(args)
    guesses = None
    if args.strategy == "weighted":
        guesses = _cli_guesses(args, inst)
        if guesses is None:
            raise CliError("--strategy weighted needs --guesses or --recipe")
    trace_path = None
    if args.trace:
        out_dir = args.out or "."
        os.makedirs(out_dir, exist_ok=True)
        trace_path = os.path.join(out_dir, "trace.jsonl")
    res = solve_bnb(inst, guesses=guesses, cfg=_bnb_config(args, trace_path))
    payload = {
        "status": res.status,
        "J": res.J if np.isfinite(res.J) else None,
        "gap": res.gap if np.isfinite(res.gap) else None,
        "nodes": res.stats["nodes_solved"],
        "qp_iterations": res.stats["qp_iterations"],
        "time": res.stats["wall_time"],
    }
    if res.traj is not None:
        payload["trajectory"] = {"x": res.traj.x.tolist(),
                                 "u": res.traj.u.tolist(),
                                 "v": res.traj.v.tolist()}
    print(json.dumps(payload, indent=2))
    return {"optimal": EXIT_OPTIMAL, "suboptimal": EXIT_SUBOPTIMAL,
            "infeasible": EXIT_INFEASIBLE}[res.status]


def _bench_cell(payload):
    """One (strategy, x0 sample, N) benchmark run; module-level so the
    process pool can pickle it."""
    inst_dict, x0, N, strategy, recipe, sample_index, cfg_kw = payload
    from .model import instance_from_dict
    inst = _with_initial_state(instance_from_dict(inst_dict), x0, N)
    guesses = None
    if strategy == "weighted":
        guesses = _recipe_guesses(recipe, inst, sample_index)
    res = solve_bnb(inst, guesses=guesses, cfg=BnbConfig(**cfg_kw))
    return {"strategy": strategy, "x0_id": sample_index, "N": N,
            "status": res.status, "nodes": res.stats["nodes_solved"],
            "qp_iters": res.stats["qp_iterations"],
            "wall_ms": 1000.0 * res.stats["wall_time"],
            "J": res.J, "gap": res.gap}


def _oracle_reference(inst, x0, N):
    sub = _with_initial_state(inst, x0, N)
    try:
        return enumerate_solve(sub, limit=ORACLE_LIMIT).J
    except EnumerationLimitExceeded:
        return None


def cmd_bench(args):
    inst = _load_cli_instance(args)
    if not args.out:
        raise CliError("bench requires --out DIR")
    os.makedirs(args.out, exist_ok=True)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    for s in strategies:
        if s not in ("std", "weighted"):
            raise CliError(f"unknown strategy '{s}'")
    if "weighted" in strategies and not args.recipe:
        raise CliError("weighted strategy needs --recipe")
    horizons = _parse_ints(args.horizons)
    lo, hi, count = args.x0_lin
    base = np.linspace(lo, hi, int(count))
    if args.x0_noise > 0 and args.seed is None:
        raise CliError("--x0-noise requires --seed for reproducibility")
    rng = np.random.default_rng(args.seed)
    samples = [b * np.ones(inst.n_x) +
               rng.uniform(-args.x0_noise, args.x0_noise, inst.n_x)
               for b in base]

    from .model import instance_to_dict
    inst_dict = instance_to_dict(inst)
    cfg_kw = {"eps_tol": args.eps_tol, "node_limit": args.node_limit,
              "time_limit": args.time_limit}
    cells = [(inst_dict, samples[i], N, strat, args.recipe, i, cfg_kw)
             for strat in strategies for N in horizons
             for i in range(len(samples))]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_bench_cell, cells))
    else:
        rows = [_bench_cell(c) for c in cells]

    # suboptimality column: vs the enumeration oracle when it is tractable,
    # otherwise vs the best J any strategy found for the same cell
    oracle_cache = {}
    for row in rows:
        key = (row["x0_id"], row["N"])
        if key not in oracle_cache:
            oracle_cache[key] = _oracle_reference(inst, samples[key[0]],
                                                  key[1])
        ref = oracle_cache[key]
        if ref is None:
            ref = min(r["J"] for r in rows
                      if (r["x0_id"], r["N"]) == key and np.isfinite(r["J"]))
        row["subopt"] = (row["J"] - ref) if np.isfinite(row["J"]) else ""

    rows.sort(key=lambda r: (r["strategy"], r["N"], r["x0_id"]))
    run_cols = ["strategy", "x0_id", "N", "status", "nodes", "qp_iters",
                "wall_ms", "J", "gap", "subopt"]
    runs_path = os.path.join(args.out, "runs.csv")
    with open(runs_path, "w", newline="") as fh:
        fh.write("# subopt is J minus the enumeration-oracle optimum when "
                 f"|V|^N <= {ORACLE_LIMIT}, else J minus the best J found "
                 "for the same (x0, N) cell\n")
        writer = csv.DictWriter(fh, fieldnames=run_cols)
        writer.writeheader()
        writer.writerows(rows)

    agg_path = os.path.join(args.out, "aggregate.csv")
    with open(agg_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "N", "avg_nodes", "median_nodes",
                         "best_nodes", "avg_ms", "median_ms", "best_ms",
                         "avg_subopt"])
        for strat in strategies:
            for N in horizons:
                grp = [r for r in rows
                       if r["strategy"] == strat and r["N"] == N]
                if not grp:
                    continue
                nodes = [r["nodes"] for r in grp]
                ms = [r["wall_ms"] for r in grp]
                sub = [r["subopt"] for r in grp if r["subopt"] != ""]
                writer.writerow([
                    strat, N, statistics.mean(nodes),
                    statistics.median(nodes), min(nodes),
                    statistics.mean(ms), statistics.median(ms), min(ms),
                    statistics.mean(sub) if sub else ""])
    print(json.dumps({"runs": runs_path, "aggregate": agg_path,
                      "cells": len(rows)}))
    return EXIT_OPTIMAL


def cmd_turnpike(args):
    inst = _load_cli_instance(args)
    if not args.out:
        raise CliError("turnpike requires --out DIR")
    os.makedirs(args.out, exist_ok=True)
    x0_scalars = _parse_floats(args.x0_list) if args.x0_list else \
        [float(np.mean(inst.x0))]
    x0_list = [s * np.ones(inst.n_x) for s in x0_scalars]
    horizons = _parse_ints(args.horizons) if args.horizons else [inst.N]
    eps_grid = _parse_floats(args.eps)
    guesses = _cli_guesses(args, inst) if (args.guesses or args.recipe) \
        else None
    report = turnpike_profile(inst, x0_list, horizons, eps_grid,
                              guesses=guesses, cfg=_bnb_config(args),
                              keep_traj=True)
    csv_path = os.path.join(args.out, "turnpike.csv")
    json_path = os.path.join(args.out, "turnpike.json")
    write_report(report, csv_path, json_path)
    written = set()
    for cell in report.cells:
        traj = cell.get("traj")
        key = (cell["x0_id"], cell["N"])
        if traj is None or key in written:
            continue
        written.add(key)
        path = os.path.join(args.out, f"traj_x0{key[0]}_N{key[1]}.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            n_x, n_u, n_v = traj.x.shape[1], traj.u.shape[1], traj.v.shape[1]
            writer.writerow(["k"] + [f"x{i}" for i in range(n_x)] +
                            [f"u{i}" for i in range(n_u)] +
                            [f"v{i}" for i in range(n_v)])
            for k in range(traj.x.shape[0]):
                row = [k] + list(traj.x[k])
                if k < traj.u.shape[0]:
                    row += list(traj.u[k]) + list(traj.v[k])
                writer.writerow(row)
    print(json.dumps({"csv": csv_path, "json": json_path,
                      "trajectories": len(written)}))
    return EXIT_OPTIMAL


def cmd_certify(args):
    inst = _load_cli_instance(args)
    cert = certify(inst.dyn.A, inst.stage_costs[0].Q)
    payload = {"status": cert.status, "eps": cert.eps,
               "residual_min_eig": cert.residual_min_eig,
               "P": cert.P.tolist() if cert.P is not None else None}
    print(json.dumps(payload, indent=2))
    return EXIT_OPTIMAL


def cmd_instances(args):
    names = sorted(BUILTINS)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for name in names:
            save_instance(get_builtin(name),
                          os.path.join(args.out, f"{name}.json"))
    for name in names:
        inst = get_builtin(name)
        print(f"{name}: n_x={inst.n_x} n_u={inst.n_u} n_v={inst.n_v} "
              f"N={inst.N}")
    return EXIT_OPTIMAL


def _add_common(p, horizon=True):
    p.add_argument("--instance", help="instance JSON file")
    p.add_argument("--builtin", help="built-in instance name")
    p.add_argument("--nx", type=int, default=None,
                   help="state dimension for parametric built-ins")
    if horizon:
        p.add_argument("--horizon", type=int, default=None,
                       help="override the horizon N")
    p.add_argument("--eps-tol", type=float, default=1e-6)
    p.add_argument("--node-limit", type=int, default=None)
    p.add_argument("--time-limit", type=float, default=60.0,
                   help="per-solve wall clock limit in seconds")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="output directory")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tmiqp",
        description="Turnpike-aware branch-and-bound for linear-quadratic "
                    "mixed-integer optimal control")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    _add_common(p)
    p.add_argument("--x0", help="initial state (scalar or comma list)")
    p.add_argument("--guesses", help="guess set JSON file")
    p.add_argument("--recipe", help="guess recipe: table1, tail or tail:K")
    p.add_argument("--strategy", choices=["std", "weighted"], default="std")
    p.add_argument("--trace", action="store_true",
                   help="write per-node trace.jsonl to --out (default .)")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("bench", help="strategy comparison sweep")
    _add_common(p, horizon=False)
    p.add_argument("--horizons", default="10",
                   help="comma list of horizons N")
    p.add_argument("--strategies", default="std,weighted")
    p.add_argument("--recipe", default="tail",
                   help="guess recipe for the weighted strategy")
    p.add_argument("--x0-lin", nargs=3, type=float,
                   default=[-0.9, 0.9, 19], metavar=("LO", "HI", "COUNT"),
                   help="x0 sweep: linspace(LO, HI, COUNT) times ones(n_x)")
    p.add_argument("--x0-noise", type=float, default=0.0,
                   help="uniform noise amplitude added per sample")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("turnpike", help="turnpike profile sweep")
    _add_common(p, horizon=False)
    p.add_argument("--x0-list", help="comma list of scalar x0 values "
                                     "(broadcast over the state)")
    p.add_argument("--horizons", help="comma list of horizons N")
    p.add_argument("--eps", default="0.1",
                   help="comma list of turnpike radii")
    p.add_argument("--guesses", help="guess set JSON file")
    p.add_argument("--recipe", help="guess recipe: table1, tail or tail:K")
    p.set_defaults(fn=cmd_turnpike)

    p = sub.add_parser("certify", help="dissipativity certificate")
    _add_common(p)
    p.set_defaults(fn=cmd_certify)

    p = sub.add_parser("instances", help="list or export built-ins")
    p.add_argument("--out", help="directory to export instance JSON files")
    p.set_defaults(fn=cmd_instances)
    return parser


def main(argv=None):
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # pragma: no cover - defensive
        log.exception("unhandled failure")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
